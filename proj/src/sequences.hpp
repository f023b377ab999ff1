#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace relaxcrb {

/// Tissue parameters theta = [M0, T1, T2]. Times in ms, M0 in signal units.
struct TissueParams {
    double m0 = 1.0;
    double t1 = 1000.0;
    double t2 = 100.0;

    /// Throws InvalidTissue unless every field is finite and positive.
    void validate() const;
    /// T2 <= T1; violating it is reported as a warning only.
    bool plausible() const { return t2 <= t1; }
};

enum class Family { CIR, SR, FIR1, FIR2, LL, SEIR, DESPOT };

std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);
/// SEIR and DESPOT estimate [M0, T1, T2]; the rest estimate [M0, T1].
bool is_joint(Family f);

enum class Relaxation { T1, T2 };

namespace seq {

// Conventional inversion recovery. W >= 5 T1 is assumed, so W only enters
// the sequence time.
struct Cir {
    std::vector<double> ti;
    double w = 0.0;
};

struct Sr {
    std::vector<double> ti;
};

// Fast inversion recovery with a fixed wait time.
struct Fir1 {
    std::vector<double> ti;
    double w = 0.0;
};

// Fast inversion recovery with a fixed repetition time; wait = tr - ti.
struct Fir2 {
    std::vector<double> ti;
    double tr = 0.0;
};

enum class LlRecovery {
    SteadyState, // magnetization before inversion is the periodic steady state across TR
    Full,        // magnetization fully recovered before every inversion
};

struct LookLocker {
    double alpha = 0.0; // degrees
    std::vector<double> t;
    double tr = 0.0;
    LlRecovery recovery = LlRecovery::SteadyState;
};

enum class SeirTiming {
    BlocksPlusTi, // tr_ir + ti + tr_se
    Blocks,       // tr_ir + tr_se
};

// One inversion-recovery sample followed by an n_echo spin-echo train.
struct Seir {
    double tr_ir = 0.0;
    double ti = 0.0;
    double tr_se = 0.0;
    double te = 0.0;
    int n_echo = 4;
    bool ir_recovery_term = false;  // add exp(-tr_ir/T1) to the IR sample
    bool ir_echo_weighting = false; // multiply the IR sample by exp(-te/T2)
    SeirTiming timing = SeirTiming::BlocksPlusTi;
};

struct Despot {
    std::vector<double> alpha_spgr; // degrees
    double tr_spgr = 0.0;
    std::vector<double> alpha_ssfp; // degrees
    double tr_ssfp = 0.0;
};

} // namespace seq

/// A validated pulse-sequence definition. Construction throws InvalidProtocol
/// when the timings, angles or acquisition count are not admissible.
class SequenceProtocol {
public:
    using Variant = std::variant<seq::Cir, seq::Sr, seq::Fir1, seq::Fir2, seq::LookLocker, seq::Seir,
                                 seq::Despot>;

    SequenceProtocol(Variant v);
    template <class T>
        requires(!std::is_same_v<std::remove_cvref_t<T>, SequenceProtocol> &&
                 !std::is_same_v<std::remove_cvref_t<T>, Variant> && std::is_constructible_v<Variant, T>)
    SequenceProtocol(T &&alt) : SequenceProtocol(Variant(std::forward<T>(alt))) {}

    const Variant &variant() const { return v_; }
    Family family() const;
    bool joint() const { return is_joint(family()); }
    /// Number of acquisitions N.
    std::size_t size() const;
    /// Number of jointly estimated parameters (2 or 3).
    std::size_t n_params() const { return joint() ? 3 : 2; }
    /// Table-style one-line summary, timings in ms and angles in degrees.
    std::string describe() const;

    template <class T> const T *get_if() const { return std::get_if<T>(&v_); }

private:
    Variant v_;
};

struct WeightingVector {
    Eigen::VectorXd h;
    Eigen::VectorXd dh_dt1;                // 1/ms
    std::optional<Eigen::VectorXd> dh_dt2; // 1/ms, joint families only
};

/// h and its exact sensitivities. Throws NonFiniteModel on NaN/Inf output.
WeightingVector weighting_vector(const SequenceProtocol &p, const TissueParams &tissue);

/// Unvalidated h evaluation into `out` (size N). Used by the fitting inner
/// loop, where T1/T2 may wander to non-physical values.
void signal_weights(const SequenceProtocol &p, double t1, double t2, std::span<double> out);

/// Central finite-difference sensitivity with relative step.
Eigen::VectorXd sensitivity_numeric(const SequenceProtocol &p, const TissueParams &tissue,
                                    Relaxation which, double step);

/// Scan time consumed by one repetition of the protocol (ms).
double sequence_time(const SequenceProtocol &p);

/// Colon range start:step:end, inclusive when end lands on the grid.
std::vector<double> colon_range(double start, double step, double end);

} // namespace relaxcrb
