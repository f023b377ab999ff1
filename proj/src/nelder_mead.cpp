#include "nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace relaxcrb {

NelderMeadResult nelder_mead_minimize(const std::function<double(const std::vector<double> &)> &objective,
                                      std::vector<double> x0, const NelderMeadOptions &options) {
    const std::size_t n = x0.size();
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "Nelder-Mead needs at least one variable");

    int evals = 0;
    auto f = [&](const std::vector<double> &x) {
        ++evals;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    fv[0] = f(x0);
    if (!std::isfinite(fv[0])) throw Error(ErrorCode::InvalidArgument, "objective is not finite at x0");
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] = x0[i] != 0.0 ? x0[i] * (1.0 + options.initial_step) : options.zero_step;
        fv[i + 1] = f(pts[i + 1]);
    }

    // idx orders the vertices best to worst; vertices themselves never move.
    std::vector<std::size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), 0);
    auto sort_simplex = [&] {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    };

    auto converged = [&] {
        const auto &best = pts[idx[0]];
        double fspread = 0.0, xspread = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            fspread = std::max(fspread, std::abs(fv[idx[k]] - fv[idx[0]]));
            for (std::size_t i = 0; i < n; ++i) xspread = std::max(xspread, std::abs(pts[idx[k]][i] - best[i]));
        }
        // A flat simplex carries no descent information.
        if (fspread == 0.0 && std::isfinite(fv[idx[0]])) return true;
        return fspread <= options.f_tol && xspread <= options.x_tol;
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto along = [&](double t, std::vector<double> &out) {
        const auto &worst = pts[idx[n]];
        for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + t * (worst[i] - centroid[i]);
    };
    auto replace_worst = [&](const std::vector<double> &x, double fx) {
        pts[idx[n]] = x;
        fv[idx[n]] = fx;
    };

    sort_simplex();
    bool done = converged();
    while (!done && evals < options.max_evals) {
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[idx[k]][i] / static_cast<double>(n);

        const double f_best = fv[idx[0]], f_second = fv[idx[n - 1]], f_worst = fv[idx[n]];
        along(-1.0, xr);
        const double fr = f(xr);
        bool shrink = false;
        if (fr < f_best) {
            along(-2.0, xe);
            const double fe = f(xe);
            if (fe < fr)
                replace_worst(xe, fe);
            else
                replace_worst(xr, fr);
        } else if (fr < f_second) {
            replace_worst(xr, fr);
        } else if (fr < f_worst) {
            along(-0.5, xc); // outside contraction
            const double fc = f(xc);
            if (fc <= fr)
                replace_worst(xc, fc);
            else
                shrink = true;
        } else {
            along(0.5, xc); // inside contraction
            const double fc = f(xc);
            if (fc < f_worst)
                replace_worst(xc, fc);
            else
                shrink = true;
        }
        if (shrink) {
            const auto &best = pts[idx[0]];
            for (std::size_t k = 1; k <= n; ++k) {
                auto &v = pts[idx[k]];
                for (std::size_t i = 0; i < n; ++i) v[i] = best[i] + 0.5 * (v[i] - best[i]);
                fv[idx[k]] = f(v);
            }
        }
        sort_simplex();
        done = converged();
    }

    return {pts[idx[0]], fv[idx[0]], done, evals};
}

} // namespace relaxcrb
