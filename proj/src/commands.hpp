#pragma once

#include <optional>

#include "config.hpp"
#include "report.hpp"

namespace relaxcrb {

/// Range-level figures of one protocol at the configured SNR.
struct ProtocolSummary {
    double t_seq = 0.0;
    double gamma_t1 = 0.0;
    std::optional<double> gamma_t2;
    double snr_eq = 0.0;
    double mean_sens_t1 = 0.0; // over the T1 grid at the T2 midpoint
    double mean_orth_t1 = 0.0;
};

ProtocolSummary summarize_protocol(const SequenceProtocol &p, const RunConfig &cfg);

Report cmd_evaluate(const RunConfig &cfg);
Report cmd_optimize(const RunConfig &cfg);
Report cmd_simulate(const RunConfig &cfg);
Report cmd_compare(const RunConfig &cfg);

/// Dispatches on `command`. Per-protocol failures are collected in the report
/// (exit code 3, or 4 when nothing succeeded); invalid input throws.
Report run_command(Command command, const RunConfig &cfg);

} // namespace relaxcrb
