#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Dense>

#include "error.hpp"
#include "fixtures.hpp"
#include "sequences.hpp"

using namespace relaxcrb;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Longitudinal magnetization bookkeeping for inversion/saturation
// experiments, stepped through enough repetitions to reach steady state.
struct Longitudinal {
    double t1;
    double mz = 1.0;
    void relax(double dt) { mz = 1.0 + (mz - 1.0) * std::exp(-dt / t1); }
    void invert() { mz = -mz; }
    void saturate() { mz = 0.0; }
};

// Inversion, wait TI, 90-degree readout, wait `after(ti)`, repeated until
// steady state. Returns the readout of the last repetition of each TI.
std::vector<double> simulate_ir(const std::vector<double> &ti, double t1, bool recover_fully,
                                const std::function<double(double)> &after) {
    std::vector<double> out;
    for (double t : ti) {
        Longitudinal m{t1};
        double signal = 0.0;
        for (int rep = 0; rep < 200; ++rep) {
            if (recover_fully) m.mz = 1.0;
            m.invert();
            m.relax(t);
            signal = m.mz;
            m.saturate();
            m.relax(after(t));
        }
        out.push_back(signal);
    }
    return out;
}

std::vector<double> weights(const SequenceProtocol &p, double t1, double t2) {
    std::vector<double> h(p.size());
    signal_weights(p, t1, t2, h);
    return h;
}

// Look-Locker readouts after many repetitions of the full TR cycle.
std::vector<double> simulate_ll(const seq::LookLocker &p, double t1) {
    const double c = std::cos(p.alpha * kDeg), s = std::sin(p.alpha * kDeg);
    Longitudinal m{t1};
    std::vector<double> out(p.t.size());
    const int reps = p.recovery == seq::LlRecovery::Full ? 1 : 400;
    for (int rep = 0; rep < reps; ++rep) {
        if (p.recovery == seq::LlRecovery::Full) m.mz = 1.0;
        m.invert();
        double now = 0.0;
        for (std::size_t i = 0; i < p.t.size(); ++i) {
            m.relax(p.t[i] - now);
            now = p.t[i];
            out[i] = s * m.mz;
            m.mz *= c;
        }
        m.relax(p.tr - now);
    }
    return out;
}

// Spoiled gradient echo: iterate the pulse/relaxation cycle to steady state.
double simulate_spgr(double alpha_deg, double tr, double t1) {
    const double c = std::cos(alpha_deg * kDeg), s = std::sin(alpha_deg * kDeg);
    Longitudinal m{t1};
    for (int k = 0; k < 200000; ++k) {
        m.mz *= c;
        m.relax(tr);
    }
    return s * m.mz;
}

// Balanced SSFP with alternating RF phase: solve the linear steady state of
// the full Bloch cycle and take the transverse magnitude after the pulse.
double simulate_ssfp(double alpha_deg, double tr, double t1, double t2) {
    const double a = alpha_deg * kDeg;
    Eigen::Matrix3d rot;
    rot << 1, 0, 0, 0, std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a);
    const double e1 = std::exp(-tr / t1), e2 = std::exp(-tr / t2);
    const Eigen::Matrix3d relax = Eigen::Vector3d(e2, e2, e1).asDiagonal();
    const Eigen::Matrix3d flip = Eigen::Vector3d(-1, -1, 1).asDiagonal();
    const Eigen::Vector3d recovery(0, 0, 1 - e1);
    // M = F (E R M + b)  =>  (I - F E R) M = F b
    const Eigen::Matrix3d a_mat = Eigen::Matrix3d::Identity() - flip * relax * rot;
    const Eigen::Vector3d m_before = a_mat.colPivHouseholderQr().solve(flip * recovery);
    const Eigen::Vector3d m_after = rot * m_before;
    return std::hypot(m_after[0], m_after[1]);
}

} // namespace

TEST_SUITE("sequences") {

TEST_CASE("inversion recovery families agree with a longitudinal simulation") {
    const std::vector<double> ti{0.0, 150.0, 700.0, 1800.0, 4200.0};
    for (double t1 : {400.0, 1000.0, 1750.0, 3000.0}) {
        CAPTURE(t1);
        const auto cir = weights(seq::Cir{ti, 10000.0}, t1, 80.0);
        const auto cir_ref = simulate_ir(ti, t1, true, [](double) { return 0.0; });
        const auto fir1 = weights(seq::Fir1{ti, 2500.0}, t1, 80.0);
        const auto fir1_ref = simulate_ir(ti, t1, false, [](double) { return 2500.0; });
        const auto fir2 = weights(seq::Fir2{ti, 6000.0}, t1, 80.0);
        const auto fir2_ref = simulate_ir(ti, t1, false, [](double t) { return 6000.0 - t; });
        for (std::size_t i = 0; i < ti.size(); ++i) {
            CHECK(cir[i] == doctest::Approx(cir_ref[i]).epsilon(1e-12));
            CHECK(fir1[i] == doctest::Approx(fir1_ref[i]).epsilon(1e-12));
            CHECK(fir2[i] == doctest::Approx(fir2_ref[i]).epsilon(1e-12));
        }
        // Saturation recovery: saturate, wait TI, read.
        const auto sr = weights(seq::Sr{{10.0, 500.0, 2000.0}}, t1, 80.0);
        const double sr_times[] = {10.0, 500.0, 2000.0};
        for (std::size_t i = 0; i < 3; ++i) {
            Longitudinal m{t1};
            m.saturate();
            m.relax(sr_times[i]);
            CHECK(sr[i] == doctest::Approx(m.mz).epsilon(1e-12));
        }
    }
}

TEST_CASE("Look-Locker readouts match a repeated-cycle simulation") {
    for (double alpha : {5.0, 30.0, 60.0}) {
        for (double t1 : {800.0, 1500.0, 2500.0}) {
            CAPTURE(alpha);
            CAPTURE(t1);
            seq::LookLocker ll{alpha, colon_range(206, 206, 3090), 8900.0};
            const auto h = weights(ll, t1, 80.0);
            const auto ref = simulate_ll(ll, t1);
            for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(ref[i]).epsilon(1e-10));

            ll.recovery = seq::LlRecovery::Full;
            const auto hf = weights(ll, t1, 80.0);
            const auto rf = simulate_ll(ll, t1);
            for (std::size_t i = 0; i < hf.size(); ++i) CHECK(hf[i] == doctest::Approx(rf[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("SPGR and SSFP weights match steady-state Bloch solutions") {
    for (double t1 : {900.0, 1500.0, 2000.0}) {
        for (double t2 : {50.0, 90.0}) {
            const seq::Despot d{{3.0, 8.6, 20.0}, 6.8, {13.9, 57.8, 120.0}, 3.4};
            const auto h = weights(d, t1, t2);
            CHECK(h[0] == doctest::Approx(simulate_spgr(3.0, 6.8, t1)).epsilon(1e-9));
            CHECK(h[1] == doctest::Approx(simulate_spgr(8.6, 6.8, t1)).epsilon(1e-9));
            CHECK(h[2] == doctest::Approx(simulate_spgr(20.0, 6.8, t1)).epsilon(1e-9));
            CHECK(h[3] == doctest::Approx(simulate_ssfp(13.9, 3.4, t1, t2)).epsilon(1e-9));
            CHECK(h[4] == doctest::Approx(simulate_ssfp(57.8, 3.4, t1, t2)).epsilon(1e-9));
            CHECK(h[5] == doctest::Approx(simulate_ssfp(120.0, 3.4, t1, t2)).epsilon(1e-9));
        }
    }
}

TEST_CASE("SEIR: inversion sample followed by a spin-echo train") {
    const double t1 = 1300.0, t2 = 75.0;
    seq::Seir s{2994.0, 1270.0, 2942.0, 17.0};
    auto h = weights(s, t1, t2);
    REQUIRE(h.size() == 5);
    CHECK(h[0] == doctest::Approx(1.0 - 2.0 * std::exp(-1270.0 / t1)));
    for (int k = 1; k <= 4; ++k)
        CHECK(h[k] == doctest::Approx((1.0 - std::exp(-2942.0 / t1)) * std::exp(-17.0 * k / t2)));

    s.ir_recovery_term = true;
    s.ir_echo_weighting = true;
    h = weights(s, t1, t2);
    CHECK(h[0] == doctest::Approx((1.0 - 2.0 * std::exp(-1270.0 / t1) + std::exp(-2994.0 / t1)) *
                                  std::exp(-17.0 / t2)));

    s.n_echo = 2;
    CHECK(SequenceProtocol(s).size() == 3);
}

TEST_CASE("exact sensitivities match central differences") {
    for (const auto &ref : fixtures::reference_protocols()) {
        for (const TissueParams &t : fixtures::grid_5x5()) {
            CAPTURE(ref.name);
            const WeightingVector w = weighting_vector(ref.protocol, t);
            const Eigen::VectorXd fd1 = sensitivity_numeric(ref.protocol, t, Relaxation::T1, 1e-5);
            CHECK((w.dh_dt1 - fd1).norm() <= 1e-6 * w.dh_dt1.norm());
            if (ref.protocol.joint()) {
                REQUIRE(w.dh_dt2.has_value());
                const Eigen::VectorXd fd2 = sensitivity_numeric(ref.protocol, t, Relaxation::T2, 1e-5);
                CHECK((*w.dh_dt2 - fd2).norm() <= 1e-6 * w.dh_dt2->norm());
            } else {
                CHECK_FALSE(w.dh_dt2.has_value());
            }
        }
    }
}

TEST_CASE("sequence times") {
    for (const auto &ref : fixtures::reference_protocols()) {
        CAPTURE(ref.name);
        CHECK(sequence_time(ref.protocol) == doctest::Approx(ref.t_seq).epsilon(1e-12));
    }
    seq::Seir s{2994.0, 1270.0, 2942.0, 17.0};
    s.timing = seq::SeirTiming::Blocks;
    CHECK(sequence_time(s) == doctest::Approx(5936.0));
}

TEST_CASE("protocol validation") {
    auto invalid = [](SequenceProtocol::Variant v) {
        try {
            SequenceProtocol p(std::move(v));
        } catch (const Error &e) {
            return e.code() == ErrorCode::InvalidProtocol;
        }
        return false;
    };
    CHECK(invalid(seq::Sr{{100.0}}));                   // too few acquisitions
    CHECK(invalid(seq::Sr{{300.0, 200.0, 400.0}}));     // not increasing
    CHECK(invalid(seq::Cir{{-5.0, 100.0}, 10000.0}));   // negative time
    CHECK(invalid(seq::Fir2{{0.0, 500.0, 900.0}, 900.0})); // readout at TR
    CHECK(invalid(seq::LookLocker{0.0, {100.0, 200.0}, 1000.0}));
    CHECK(invalid(seq::LookLocker{30.0, {100.0, 1200.0}, 1000.0}));
    CHECK(invalid(seq::Seir{3000.0, 3500.0, 3000.0, 17.0}));
    CHECK(invalid(seq::Seir{3000.0, 1000.0, 60.0, 17.0}));
    CHECK(invalid(seq::Despot{{5.0, 10.0, 15.0}, 6.8, {}, 3.4}));
    CHECK(invalid(seq::Despot{{5.0}, 6.8, {30.0}, 3.4}));
    CHECK(invalid(seq::Despot{{5.0}, 6.8, {30.0, 180.0}, 3.4}));
    CHECK_FALSE(invalid(seq::Despot{{}, 6.8, {10.0, 30.0, 60.0}, 3.4}));
}

TEST_CASE("tissue validation and plausibility") {
    CHECK_THROWS_AS(weighting_vector(fixtures::reference("CIR").protocol, {3000.0, -1.0, 80.0}), Error);
    CHECK_THROWS_AS((TissueParams{0.0, 1000.0, 80.0}.validate()), Error);
    CHECK_THROWS_AS((TissueParams{3000.0, 1000.0, std::nan("")}.validate()), Error);
    CHECK(TissueParams{3000.0, 1000.0, 80.0}.plausible());
    CHECK_FALSE(TissueParams{3000.0, 100.0, 180.0}.plausible());
}

TEST_CASE("finite-difference step checks") {
    const auto &p = fixtures::reference("SR").protocol;
    try {
        sensitivity_numeric(p, {3000.0, 1000.0, 80.0}, Relaxation::T1, 0.5);
        FAIL("expected InvalidArgument");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
    try {
        sensitivity_numeric(p, {3000.0, 1e-3, 80.0}, Relaxation::T1, 1e-7);
        FAIL("expected DegenerateStep");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::DegenerateStep);
    }
}

TEST_CASE("inversion recovery weights are bounded and increase with TI") {
    const auto ti = colon_range(0, 50, 8000);
    for (double t1 : {300.0, 1200.0, 2600.0}) {
        for (const SequenceProtocol &p :
             {SequenceProtocol(seq::Cir{ti, 20000.0}), SequenceProtocol(seq::Fir1{ti, 3000.0}),
              SequenceProtocol(seq::Sr{ti})}) {
            const auto h = weights(p, t1, 80.0);
            for (std::size_t i = 0; i < h.size(); ++i) {
                CHECK(h[i] >= -1.0);
                CHECK(h[i] <= 1.0);
                if (i) CHECK(h[i] > h[i - 1]);
            }
        }
    }
}

TEST_CASE("colon ranges, names and descriptions") {
    CHECK(colon_range(0, 450, 1800) == std::vector<double>{0, 450, 900, 1350, 1800});
    CHECK(colon_range(206, 206, 3090).size() == 15);
    CHECK(colon_range(0, 620, 6820).size() == 12);
    CHECK(colon_range(0, 0.1, 0.3).size() == 4);
    CHECK_THROWS_AS(colon_range(0, 0, 10), Error);
    for (Family f : {Family::CIR, Family::SR, Family::FIR1, Family::FIR2, Family::LL, Family::SEIR, Family::DESPOT})
        CHECK(family_from_name(family_name(f)) == f);
    CHECK_FALSE(family_from_name("MP2RAGE").has_value());
    CHECK(fixtures::reference("CIR").protocol.describe() == "TI=[0:450:1800] W=10000");
}

}
