#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nelder_mead.hpp"
#include "sequences.hpp"

namespace relaxcrb {

/// Rectangular T1/T2 region with fixed M0, sampled on a uniform grid.
struct TissueRange {
    double t1_min = 1000.0, t1_max = 2000.0;
    double t2_min = 60.0, t2_max = 110.0;
    double m0 = 3000.0;
    int grid_t1 = 21, grid_t2 = 11;

    void validate() const;
    std::vector<double> t1_grid() const;
    std::vector<double> t2_grid() const;
    double t2_mid() const { return 0.5 * (t2_min + t2_max); }
    /// Joint families span T1 x T2 (T1 outer); T1-only families use the
    /// T1 grid at the T2 midpoint.
    std::vector<TissueParams> grid(bool joint) const;
};

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

/// Search problem for one sequence family. Timings are linearly spaced and
/// encoded as (start, step); every other free variable is box-bounded.
struct DesignSpec {
    Family family = Family::CIR;
    std::vector<int> n_acq{5}; // candidate acquisition counts (DESPOT: SPGR + SSFP total)
    double rho = 1.0;          // forced to 1 for T1-only families
    int multistart = 20;
    std::uint64_t seed = 1;

    Bounds ti{0.0, 20000.0};     // first inversion/readout time
    Bounds step{1.0, 20000.0};   // spacing of the timing list
    Bounds timing{0.0, 20000.0}; // every timing, including the list end
    Bounds w{0.0, 20000.0};      // wait time (CIR also enforces W >= 5 t1_max)
    Bounds tr{0.0, 20000.0};     // repetition times
    Bounds gap{1.0, 20000.0};    // FIR2 TR - max(TI), LL TR - max(t), SEIR TR_IR - TI
    Bounds alpha{1.0, 90.0};     // LL readout and SPGR flip angles (deg)
    Bounds alpha_ssfp{1.0, 179.0};
    Bounds te{5.0, 50.0};

    int n_echo = 4; // SEIR spin echoes when n_acq is not given explicitly
    int n_ssfp = 2; // DESPOT: SPGR count = n_acq - n_ssfp
    double tr_spgr = 6.8;
    double tr_ssfp = 3.4;

    NelderMeadOptions nm{1500, 1e-3, 1e-7, 0.05, 0.00025};

    void validate() const;
    double effective_rho() const { return is_joint(family) ? rho : 1.0; }
};

struct WorstCase {
    double lambda_min = 0.0;
    bool degenerate = false; // some grid point was unidentifiable
    TissueParams argmin;
};

struct RangeEfficiency {
    double gamma_t1 = 0.0;
    std::optional<double> gamma_t2;
};

/// Inner minimization of rho*Gamma1 + (1-rho)*Gamma2 over the range grid.
WorstCase worst_case_efficiency(const SequenceProtocol &p, const TissueRange &range, double rho, double snr);

/// Average Gamma over the range grid.
RangeEfficiency average_efficiency(const SequenceProtocol &p, const TissueRange &range, double snr);

struct RestartTrace {
    int n_acq = 0;
    int restart = 0;
    double lambda = 0.0;
    bool converged = false;
    bool feasible = false;
};

struct OptimizationResult {
    SequenceProtocol protocol;
    double lambda_min = 0.0;
    double gamma_avg_t1 = 0.0;
    std::optional<double> gamma_avg_t2;
    std::vector<RestartTrace> trace;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Builds the protocol a parameter vector maps to after box projection.
SequenceProtocol protocol_from_parameters(const DesignSpec &spec, const TissueRange &range, int n_acq,
                                          const std::vector<double> &x);

/// Number of free variables for the family.
std::size_t parameter_count(const DesignSpec &spec, int n_acq);

/// Max-min design: multi-start Nelder-Mead over every candidate count.
/// Throws NoFeasiblePoint when no restart reaches an identifiable protocol.
OptimizationResult optimize_protocol(const DesignSpec &spec, const TissueRange &range, double snr,
                                     int threads = 1);

} // namespace relaxcrb
