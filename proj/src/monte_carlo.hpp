#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sequences.hpp"

namespace relaxcrb {

/// Per-trial generator. Each (tissue point, trial) pair owns an independent
/// mt19937_64 seeded through std::seed_seq from (root seed, point, trial), so
/// results do not depend on how trials are scheduled across threads.
using TrialRng = std::mt19937_64;
TrialRng trial_stream(std::uint64_t root_seed, std::size_t point, std::size_t trial);

/// y = m0 h + n with n ~ N(0, sigma^2) iid.
Eigen::VectorXd simulate_acquisition(const SequenceProtocol &p, const TissueParams &tissue, double sigma,
                                     TrialRng &rng);

struct FitInit {
    double t1 = 2000.0;
    double t2 = 200.0;
    std::optional<double> m0; // default: max|y| / max|h(t1, t2)|
};

struct FitResult {
    double m0 = 0.0, t1 = 0.0, t2 = 0.0; // raw estimates, may be non-physical
    bool ok = false;                     // converged with finite estimates
    int evals = 0;
};

/// Unconstrained least squares fit of [m0, t1(, t2)] by Nelder-Mead.
FitResult nlse_fit(const Eigen::VectorXd &y, const SequenceProtocol &p, const FitInit &init = {});

struct TrialConfig {
    SequenceProtocol protocol;
    std::vector<TissueParams> points;
    double snr = 100.0;           // per-point sigma = m0 / snr
    std::optional<double> sigma;  // overrides snr when set
    int n_trials = 5000;
    std::uint64_t seed = 1;
    FitInit init;
    int threads = 1;

    void validate() const;
    double sigma_for(const TissueParams &t) const { return sigma ? *sigma : t.m0 / snr; }
};

struct ParamStats {
    double mean = 0.0;
    double sd = 0.0;    // n-1 denominator
    double mee = 0.0;   // percent
    double rbias = 0.0; // percent
};

struct PointReport {
    TissueParams truth;
    int n_trials = 0;
    int failures = 0;
    std::optional<ParamStats> t1, t2; // empty when every trial failed (AllTrialsFailed)
    double pcrb_t1 = 0.0;             // percent, at this point's sigma
    std::optional<double> pcrb_t2;
};

struct TrialReport {
    std::vector<PointReport> points;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

/// One substream's simulate-and-fit; run_trials is a loop over these.
FitResult run_single_trial(const TrialConfig &config, std::size_t point, std::size_t trial);

TrialReport run_trials(const TrialConfig &config);

/// Aggregates fits of one point (failed fits excluded and counted).
PointReport summarize_point(const TissueParams &truth, bool joint, const std::vector<FitResult> &fits);

} // namespace relaxcrb
