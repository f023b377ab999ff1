#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "monte_carlo.hpp"
#include "optimizer.hpp"
#include "sequences.hpp"

namespace relaxcrb {

enum class Command { Evaluate, Optimize, Simulate, Compare };
enum class OutputFormat { Csv, Json };

std::string_view command_name(Command c);
std::optional<Command> command_from_name(std::string_view name);

struct NamedProtocol {
    std::string name;
    SequenceProtocol protocol;
};

struct NamedDesign {
    std::string name;
    DesignSpec spec;
};

struct RunConfig {
    std::optional<Command> command;
    std::vector<NamedProtocol> protocols;
    std::vector<NamedDesign> designs;
    TissueRange range;    // efficiency grid (default 21 x 11)
    int mc_grid_t1 = 11;  // Monte Carlo grid over the same range
    int mc_grid_t2 = 6;
    double snr = 100.0;       // input SNR = M0 / sigma
    double t_scan = 10000.0;  // ms
    int n_trials = 5000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir;
    OutputFormat format = OutputFormat::Csv;
    FitInit init;

    void validate() const;
    TissueRange mc_range() const;
};

/// Parses the `key = value` / `[section]` format. Throws ConfigError,
/// MissingField or UnitError with the offending line number.
RunConfig parse_config(std::string_view text);

} // namespace relaxcrb
