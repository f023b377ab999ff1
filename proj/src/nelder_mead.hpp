#pragma once

#include <functional>
#include <vector>

namespace relaxcrb {

struct NelderMeadOptions {
    int max_evals = 2000;
    double x_tol = 1e-8;  // max |x_i - x_best| over the simplex
    double f_tol = 1e-10; // max |f_i - f_best| over the simplex
    double initial_step = 0.05; // relative perturbation of each coordinate
    double zero_step = 0.00025; // absolute perturbation for zero coordinates
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false; // false when max_evals ran out first
    int evals = 0;
};

/// Derivative-free local minimizer (reflection 1, expansion 2, contraction
/// 1/2, shrink 1/2). Deterministic for a given x0 and options. Non-finite
/// objective values are treated as +inf.
NelderMeadResult nelder_mead_minimize(const std::function<double(const std::vector<double> &)> &objective,
                                      std::vector<double> x0, const NelderMeadOptions &options = {});

} // namespace relaxcrb
