#include "optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "estimation.hpp"

namespace relaxcrb {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    if (lo == hi) return {lo};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return out;
}

struct PointGamma {
    double g1;
    std::optional<double> g2;
};

PointGamma point_gamma(const SequenceProtocol &p, const TissueParams &tissue, double snr, double t_seq) {
    const Eigen::MatrixXd jac = jacobian(p, tissue);
    const NoiseModel noise = NoiseModel::from_snr(tissue.m0, snr);
    const CrbDiagonal crb = crb_matrix(fisher_information(jac, noise.sigma));
    PointGamma g{tnr_efficiency(tissue.t1, crb.t1, t_seq), std::nullopt};
    if (crb.t2) g.g2 = tnr_efficiency(tissue.t2, *crb.t2, t_seq);
    return g;
}

bool is_degeneracy(ErrorCode c) {
    return c == ErrorCode::SingularInformation || c == ErrorCode::CollinearVectors ||
           c == ErrorCode::NonFiniteModel || c == ErrorCode::InvalidArgument;
}

std::vector<double> list_from(double start, double step, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = start + k * step;
    return out;
}

// Spacing bound that keeps the list end inside the timing box.
double clamp_step(const DesignSpec &s, double start, double step, int n, double reserve = 0.0) {
    step = s.step.clamp(step);
    if (n > 1) step = std::min(step, (s.timing.hi - reserve - start) / (n - 1));
    return step;
}

double cir_w_lower(const DesignSpec &s, const TissueRange &r) { return std::max(s.w.lo, 5.0 * r.t1_max); }

// Box used to draw restart points.
std::vector<Bounds> sampling_box(const DesignSpec &s, const TissueRange &r, int n) {
    const double step_hi = std::min(s.step.hi, n > 1 ? s.timing.hi / (n - 1) : s.step.hi);
    const Bounds step{s.step.lo, std::max(s.step.lo, step_hi)};
    const Bounds start_pos{std::max(s.ti.lo, 1.0), std::max(s.ti.hi, 1.0)};
    switch (s.family) {
    case Family::CIR: return {s.ti, step, {cir_w_lower(s, r), s.w.hi}};
    case Family::SR: return {s.ti, step};
    case Family::FIR1: return {s.ti, step, s.w};
    case Family::FIR2: return {s.ti, step, s.gap};
    case Family::LL: return {s.alpha, start_pos, step, s.gap};
    case Family::SEIR: return {start_pos, s.gap, s.tr, s.te};
    case Family::DESPOT: {
        std::vector<Bounds> b;
        for (int i = 0; i < n - s.n_ssfp; ++i) b.push_back(s.alpha);
        for (int i = 0; i < s.n_ssfp; ++i) b.push_back(s.alpha_ssfp);
        return b;
    }
    }
    return {};
}

} // namespace

void TissueRange::validate() const {
    auto bad = [](const std::string &m) { throw Error(ErrorCode::InvalidArgument, "tissue range: " + m); };
    for (double v : {t1_min, t1_max, t2_min, t2_max, m0})
        if (!std::isfinite(v) || v <= 0.0) bad("bounds and m0 must be finite and > 0");
    if (t1_min > t1_max) bad("t1_min > t1_max");
    if (t2_min > t2_max) bad("t2_min > t2_max");
    if (t1_min < t1_max && grid_t1 < 2) bad("grid_t1 must be >= 2");
    if (t2_min < t2_max && grid_t2 < 2) bad("grid_t2 must be >= 2");
}

std::vector<double> TissueRange::t1_grid() const { return linspace(t1_min, t1_max, grid_t1); }
std::vector<double> TissueRange::t2_grid() const { return linspace(t2_min, t2_max, grid_t2); }

std::vector<TissueParams> TissueRange::grid(bool joint) const {
    std::vector<TissueParams> out;
    const std::vector<double> t2s = joint ? t2_grid() : std::vector<double>{t2_mid()};
    for (double t1 : t1_grid())
        for (double t2 : t2s) out.push_back({m0, t1, t2});
    return out;
}

void DesignSpec::validate() const {
    auto bad = [](const std::string &m) { throw Error(ErrorCode::InvalidArgument, "design spec: " + m); };
    if (!(rho >= 0.0 && rho <= 1.0)) bad("rho must lie in [0, 1]");
    if (n_acq.empty()) bad("n_acq must name at least one acquisition count");
    if (multistart < 1) bad("multistart must be >= 1");
    for (const Bounds *b : {&ti, &step, &timing, &w, &tr, &gap, &alpha, &alpha_ssfp, &te})
        if (!(std::isfinite(b->lo) && std::isfinite(b->hi))) bad("bounds must be finite");
}

std::size_t parameter_count(const DesignSpec &spec, int n_acq) {
    switch (spec.family) {
    case Family::SR: return 2;
    case Family::CIR:
    case Family::FIR1:
    case Family::FIR2: return 3;
    case Family::LL:
    case Family::SEIR: return 4;
    case Family::DESPOT: return static_cast<std::size_t>(std::max(n_acq, 0));
    }
    return 0;
}

SequenceProtocol protocol_from_parameters(const DesignSpec &s, const TissueRange &r, int n,
                                          const std::vector<double> &x) {
    if (x.size() != parameter_count(s, n))
        throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
    if (n < 1) throw Error(ErrorCode::InvalidProtocol, "acquisition count must be positive");

    switch (s.family) {
    case Family::CIR: {
        const double lo = cir_w_lower(s, r);
        if (lo > s.w.hi) throw Error(ErrorCode::InvalidProtocol, "CIR wait-time box is empty (W >= 5 T1max)");
        const double start = s.ti.clamp(x[0]);
        return seq::Cir{list_from(start, clamp_step(s, start, x[1], n), n), Bounds{lo, s.w.hi}.clamp(x[2])};
    }
    case Family::SR: {
        const double start = s.ti.clamp(x[0]);
        return seq::Sr{list_from(start, clamp_step(s, start, x[1], n), n)};
    }
    case Family::FIR1: {
        const double start = s.ti.clamp(x[0]);
        return seq::Fir1{list_from(start, clamp_step(s, start, x[1], n), n), s.w.clamp(x[2])};
    }
    case Family::FIR2: {
        const double start = s.ti.clamp(x[0]);
        const double gap = s.gap.clamp(x[2]);
        auto ti = list_from(start, clamp_step(s, start, x[1], n, gap), n);
        const double tr = std::min({ti.back() + gap, s.tr.hi, s.timing.hi});
        return seq::Fir2{std::move(ti), tr};
    }
    case Family::LL: {
        const double start = Bounds{std::max(s.ti.lo, 1.0), s.ti.hi}.clamp(x[1]);
        const double gap = s.gap.clamp(x[3]);
        auto t = list_from(start, clamp_step(s, start, x[2], n, gap), n);
        const double tr = std::min({t.back() + gap, s.tr.hi, s.timing.hi});
        return seq::LookLocker{s.alpha.clamp(x[0]), std::move(t), tr, seq::LlRecovery::SteadyState};
    }
    case Family::SEIR: {
        seq::Seir p;
        p.n_echo = n - 1;
        p.ti = Bounds{std::max(s.ti.lo, 1.0), s.ti.hi}.clamp(x[0]);
        p.tr_ir = std::min(p.ti + s.gap.clamp(x[1]), s.tr.hi);
        p.te = s.te.clamp(x[3]);
        p.tr_se = Bounds{std::max(s.tr.lo, p.te * p.n_echo + 1.0), s.tr.hi}.clamp(x[2]);
        return p;
    }
    case Family::DESPOT: {
        seq::Despot p;
        p.tr_spgr = s.tr_spgr;
        p.tr_ssfp = s.tr_ssfp;
        const int n_spgr = n - s.n_ssfp;
        if (n_spgr < 0) throw Error(ErrorCode::InvalidProtocol, "DESPOT n_acq smaller than the SSFP count");
        for (int i = 0; i < n_spgr; ++i) p.alpha_spgr.push_back(s.alpha.clamp(x[static_cast<std::size_t>(i)]));
        for (int i = n_spgr; i < n; ++i) p.alpha_ssfp.push_back(s.alpha_ssfp.clamp(x[static_cast<std::size_t>(i)]));
        return p;
    }
    }
    throw Error(ErrorCode::Internal, "unknown family");
}

WorstCase worst_case_efficiency(const SequenceProtocol &p, const TissueRange &range, double rho, double snr) {
    range.validate();
    if (!p.joint()) rho = 1.0;
    const double t_seq = sequence_time(p);
    WorstCase wc;
    wc.lambda_min = std::numeric_limits<double>::infinity();
    for (const TissueParams &t : range.grid(p.joint())) {
        double lambda = 0.0;
        try {
            const PointGamma g = point_gamma(p, t, snr, t_seq);
            lambda = rho * g.g1 + (1.0 - rho) * g.g2.value_or(0.0);
        } catch (const Error &e) {
            if (!is_degeneracy(e.code())) throw;
            return {0.0, true, t};
        }
        if (lambda < wc.lambda_min) {
            wc.lambda_min = lambda;
            wc.argmin = t;
        }
    }
    return wc;
}

RangeEfficiency average_efficiency(const SequenceProtocol &p, const TissueRange &range, double snr) {
    range.validate();
    const double t_seq = sequence_time(p);
    const auto grid = range.grid(p.joint());
    double s1 = 0.0, s2 = 0.0;
    for (const TissueParams &t : grid) {
        const PointGamma g = point_gamma(p, t, snr, t_seq);
        s1 += g.g1;
        s2 += g.g2.value_or(0.0);
    }
    const double n = static_cast<double>(grid.size());
    RangeEfficiency out{s1 / n, std::nullopt};
    if (p.joint()) out.gamma_t2 = s2 / n;
    return out;
}

OptimizationResult optimize_protocol(const DesignSpec &spec, const TissueRange &range, double snr, int threads) {
    spec.validate();
    range.validate();
    const double rho = spec.effective_rho();

    struct Task {
        int n;
        int restart;
        std::vector<double> x;
        RestartTrace trace;
    };
    std::vector<Task> tasks;
    for (int n : spec.n_acq)
        for (int r = 0; r < spec.multistart; ++r) tasks.push_back({n, r, {}, {n, r, 0.0, false, false}});

    auto lambda_at = [&](int n, const std::vector<double> &x, bool &ok) {
        try {
            const SequenceProtocol p = protocol_from_parameters(spec, range, n, x);
            const WorstCase wc = worst_case_efficiency(p, range, rho, snr);
            ok = !wc.degenerate;
            return wc.lambda_min;
        } catch (const Error &e) {
            if (e.code() != ErrorCode::InvalidProtocol) throw;
            ok = false;
            return 0.0;
        }
    };

    auto run = [&](Task &task) {
        // Restart r always draws from the same substream, so adding restarts
        // never changes earlier ones.
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(task.n), static_cast<std::uint32_t>(task.restart)};
        std::mt19937_64 rng(seq);
        const auto box = sampling_box(spec, range, task.n);
        if (box.size() != parameter_count(spec, task.n) || box.empty()) return;
        std::vector<double> x0;
        for (const Bounds &b : box) x0.push_back(std::uniform_real_distribution<double>(b.lo, b.hi)(rng));

        bool ok = false;
        lambda_at(task.n, x0, ok);
        if (!ok) return;
        const NelderMeadResult res = nelder_mead_minimize(
            [&](const std::vector<double> &x) {
                bool feasible = false;
                const double l = lambda_at(task.n, x, feasible);
                return feasible ? -l : std::numeric_limits<double>::infinity();
            },
            x0, spec.nm);
        bool feasible = false;
        const double l = lambda_at(task.n, res.x, feasible);
        task.x = res.x;
        task.trace.lambda = feasible ? l : 0.0;
        task.trace.converged = res.converged;
        task.trace.feasible = feasible;
    };

    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (Task &t : tasks) run(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < tasks.size(); i = next++) run(tasks[i]);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        for (auto &t : pool) t.join();
        for (auto &e : errors)
            if (e) std::rethrow_exception(e);
    }

    const Task *best = nullptr;
    for (const Task &t : tasks)
        if (t.trace.feasible && (!best || t.trace.lambda > best->trace.lambda)) best = &t;
    if (!best)
        throw Error(ErrorCode::NoFeasiblePoint,
                    std::string(family_name(spec.family)) + ": no restart reached an identifiable protocol");

    SequenceProtocol protocol = protocol_from_parameters(spec, range, best->n, best->x);
    const WorstCase wc = worst_case_efficiency(protocol, range, rho, snr);
    const RangeEfficiency avg = average_efficiency(protocol, range, snr);

    OptimizationResult out{protocol, wc.lambda_min, avg.gamma_t1, avg.gamma_t2, {}, best->trace.converged, {}};
    for (const Task &t : tasks) out.trace.push_back(t.trace);

    if (const auto *d = protocol.get_if<seq::Despot>(); d && d->alpha_spgr.size() >= 2) {
        const auto [lo, hi] = std::minmax_element(d->alpha_spgr.begin(), d->alpha_spgr.end());
        if (*hi - *lo < 0.5) {
            std::ostringstream os;
            os << "redundant SPGR acquisitions: flip angles converged to within " << (*hi - *lo)
               << " deg; a single SPGR with doubled TR gives the same scan time";
            out.warnings.push_back(os.str());
        }
    }
    return out;
}

} // namespace relaxcrb
