#include <doctest.h>

#include <cmath>
#include <limits>

#include "error.hpp"
#include "nelder_mead.hpp"

using namespace relaxcrb;

TEST_SUITE("nelder_mead") {

TEST_CASE("Rosenbrock valley") {
    int calls = 0;
    auto rosen = [&](const std::vector<double> &x) {
        ++calls;
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions opt;
    opt.max_evals = 5000;
    opt.x_tol = 1e-10;
    opt.f_tol = 1e-16;
    const NelderMeadResult r = nelder_mead_minimize(rosen, {-1.2, 1.0}, opt);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.f < 1e-12);
    CHECK(r.evals == calls);
}

TEST_CASE("separable quadratic in four dimensions") {
    const std::vector<double> centre{3.0, -2.0, 0.5, 10.0};
    auto f = [&](const std::vector<double> &x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (i + 1.0) * std::pow(x[i] - centre[i], 2);
        return s;
    };
    NelderMeadOptions opt;
    opt.max_evals = 20000;
    opt.x_tol = 1e-9;
    opt.f_tol = 1e-18;
    const NelderMeadResult r = nelder_mead_minimize(f, {0.0, 0.0, 0.0, 0.0}, opt);
    CHECK(r.converged);
    for (std::size_t i = 0; i < centre.size(); ++i) CHECK(r.x[i] == doctest::Approx(centre[i]).epsilon(1e-6));
}

TEST_CASE("evaluation budget is honoured") {
    auto f = [](const std::vector<double> &x) { return std::pow(x[0] - 1e6, 2) + std::pow(x[1], 2); };
    NelderMeadOptions opt;
    opt.max_evals = 50;
    const NelderMeadResult r = nelder_mead_minimize(f, {1.0, 1.0}, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.evals <= 50 + 2);
}

TEST_CASE("constant objective returns the start point") {
    const NelderMeadResult r = nelder_mead_minimize([](const std::vector<double> &) { return 4.0; }, {1.0, 2.0});
    CHECK(r.converged);
    CHECK(r.x == std::vector<double>{1.0, 2.0});
    CHECK(r.f == 4.0);
}

TEST_CASE("non-finite regions are avoided") {
    // Infeasible (NaN) for x < 0; minimum at the boundary side x = 0.5.
    auto f = [](const std::vector<double> &x) {
        if (x[0] < 0.0) return std::numeric_limits<double>::quiet_NaN();
        return std::pow(x[0] - 0.5, 2) + std::pow(x[1] + 1.0, 2);
    };
    const NelderMeadResult r = nelder_mead_minimize(f, {2.0, 2.0});
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(r.x[1] == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("invalid starts") {
    CHECK_THROWS_AS(nelder_mead_minimize([](const std::vector<double> &) { return 0.0; }, {}), Error);
    CHECK_THROWS_AS(
        nelder_mead_minimize([](const std::vector<double> &) { return std::numeric_limits<double>::infinity(); },
                             {1.0}),
        Error);
}

TEST_CASE("deterministic for identical input") {
    auto f = [](const std::vector<double> &x) { return std::cos(3.0 * x[0]) + x[0] * x[0] + std::sin(x[1]) * x[1]; };
    const NelderMeadResult a = nelder_mead_minimize(f, {0.3, -0.7});
    const NelderMeadResult b = nelder_mead_minimize(f, {0.3, -0.7});
    CHECK(a.x == b.x);
    CHECK(a.evals == b.evals);
}

}
