#include "monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "error.hpp"
#include "estimation.hpp"
#include "nelder_mead.hpp"

namespace relaxcrb {

namespace {

constexpr int kEvalsPerParam = 2000;

} // namespace

TrialRng trial_stream(std::uint64_t root_seed, std::size_t point, std::size_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                      static_cast<std::uint32_t>(point), static_cast<std::uint32_t>(point >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return TrialRng(seq);
}

Eigen::VectorXd simulate_acquisition(const SequenceProtocol &p, const TissueParams &tissue, double sigma,
                                     TrialRng &rng) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
    tissue.validate();
    const auto n = static_cast<Eigen::Index>(p.size());
    Eigen::VectorXd y(n);
    signal_weights(p, tissue.t1, tissue.t2, {y.data(), static_cast<std::size_t>(n)});
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = tissue.m0 * y[i] + noise(rng);
    return y;
}

FitResult nlse_fit(const Eigen::VectorXd &y, const SequenceProtocol &p, const FitInit &init) {
    const std::size_t n = p.size();
    if (static_cast<std::size_t>(y.size()) != n)
        throw Error(ErrorCode::InvalidArgument, "measurement length does not match the protocol");
    if (!(init.t1 > 0.0) || !(init.t2 > 0.0))
        throw Error(ErrorCode::InvalidArgument, "initial T1/T2 must be > 0");
    const bool joint = p.joint();

    std::vector<double> h(n);
    double m0_init = 0.0;
    if (init.m0) {
        m0_init = *init.m0;
    } else {
        signal_weights(p, init.t1, init.t2, h);
        double hmax = 0.0;
        for (double v : h) hmax = std::max(hmax, std::abs(v));
        m0_init = hmax > 0.0 ? y.cwiseAbs().maxCoeff() / hmax : 1.0;
    }
    if (!(m0_init != 0.0) || !std::isfinite(m0_init)) m0_init = 1.0;

    // Search in units of the starting point so every coordinate is O(1).
    const double scale[3] = {m0_init, init.t1, init.t2};
    auto objective = [&](const std::vector<double> &u) {
        const double m0 = u[0] * scale[0];
        const double t1 = u[1] * scale[1];
        const double t2 = joint ? u[2] * scale[2] : init.t2;
        signal_weights(p, t1, t2, h);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[static_cast<Eigen::Index>(i)] - m0 * h[i];
            ss += r * r;
        }
        return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
    };

    NelderMeadOptions opt;
    const int n_params = joint ? 3 : 2;
    opt.max_evals = kEvalsPerParam * n_params;
    opt.x_tol = 1e-7;
    opt.f_tol = 1e-12 * std::max(1.0, y.squaredNorm());

    std::vector<double> u0(static_cast<std::size_t>(n_params), 1.0);
    FitResult out;
    const NelderMeadResult res = nelder_mead_minimize(objective, u0, opt);
    out.m0 = res.x[0] * scale[0];
    out.t1 = res.x[1] * scale[1];
    out.t2 = joint ? res.x[2] * scale[2] : init.t2;
    out.evals = res.evals;
    out.ok = res.converged && std::isfinite(out.m0) && std::isfinite(out.t1) && std::isfinite(out.t2);
    return out;
}

void TrialConfig::validate() const {
    if (points.empty()) throw Error(ErrorCode::InvalidArgument, "trial config has no tissue points");
    if (n_trials < 1) throw Error(ErrorCode::InvalidArgument, "n_trials must be >= 1");
    if (sigma ? !(*sigma > 0.0) : !(snr > 0.0))
        throw Error(ErrorCode::InvalidArgument, "sigma (or snr) must be > 0");
    for (const TissueParams &t : points) t.validate();
}

FitResult run_single_trial(const TrialConfig &config, std::size_t point, std::size_t trial) {
    const TissueParams &truth = config.points.at(point);
    TrialRng rng = trial_stream(config.seed, point, trial);
    const Eigen::VectorXd y = simulate_acquisition(config.protocol, truth, config.sigma_for(truth), rng);
    return nlse_fit(y, config.protocol, config.init);
}

PointReport summarize_point(const TissueParams &truth, bool joint, const std::vector<FitResult> &fits) {
    PointReport r;
    r.truth = truth;
    r.n_trials = static_cast<int>(fits.size());
    std::vector<const FitResult *> good;
    for (const FitResult &f : fits) {
        if (f.ok)
            good.push_back(&f);
        else
            ++r.failures;
    }
    if (good.empty()) return r;

    auto stats = [&](auto field, double truth_value) {
        const double n = static_cast<double>(good.size());
        double mean = 0.0;
        for (const FitResult *f : good) mean += field(*f);
        mean /= n;
        double ss = 0.0;
        for (const FitResult *f : good) ss += (field(*f) - mean) * (field(*f) - mean);
        const double sd = good.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        return ParamStats{mean, sd, 100.0 * sd / truth_value, 100.0 * (mean - truth_value) / truth_value};
    };
    r.t1 = stats([](const FitResult &f) { return f.t1; }, truth.t1);
    if (joint) r.t2 = stats([](const FitResult &f) { return f.t2; }, truth.t2);
    return r;
}

TrialReport run_trials(const TrialConfig &config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n_points = config.points.size();
    const auto n_trials = static_cast<std::size_t>(config.n_trials);

    std::vector<std::vector<FitResult>> fits(n_points, std::vector<FitResult>(n_trials));
    // Work is handed out in fixed chunks of one point's trials; each slot is
    // written by exactly one worker.
    constexpr std::size_t kChunk = 250;
    const std::size_t chunks_per_point = (n_trials + kChunk - 1) / kChunk;
    const std::size_t total = n_points * chunks_per_point;
    auto work = [&](std::size_t c) {
        const std::size_t point = c / chunks_per_point;
        const std::size_t lo = (c % chunks_per_point) * kChunk;
        const std::size_t hi = std::min(n_trials, lo + kChunk);
        for (std::size_t t = lo; t < hi; ++t) fits[point][t] = run_single_trial(config, point, t);
    };

    const int workers = std::max(1, std::min<int>(config.threads, static_cast<int>(total)));
    if (workers == 1) {
        for (std::size_t c = 0; c < total; ++c) work(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t c = next++; c < total; c = next++) work(c);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        for (auto &t : pool) t.join();
        for (auto &e : errors)
            if (e) std::rethrow_exception(e);
    }

    TrialReport report;
    report.seed = config.seed;
    const bool joint = config.protocol.joint();
    for (std::size_t i = 0; i < n_points; ++i) {
        const TissueParams &truth = config.points[i];
        PointReport pr = summarize_point(truth, joint, fits[i]);
        const double sigma = config.sigma_for(truth);
        const CrbDiagonal crb =
            crb_matrix(fisher_information(jacobian(config.protocol, truth), sigma));
        pr.pcrb_t1 = pcrb(crb.t1, truth.t1);
        if (crb.t2) pr.pcrb_t2 = pcrb(*crb.t2, truth.t2);
        report.points.push_back(std::move(pr));
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace relaxcrb
