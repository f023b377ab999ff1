// relaxcrb: command-line front end over the C API.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relaxcrb/relaxcrb.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTotal = 4;

int exit_code_for(rcrb_status s) {
    switch (s) {
    case RCRB_CONFIG_ERROR:
    case RCRB_MISSING_FIELD:
    case RCRB_UNIT_ERROR:
    case RCRB_IO_ERROR:
    case RCRB_INVALID_ARGUMENT:
        return kExitConfig;
    default:
        return kExitTotal;
    }
}

int report_failure(const char *what, rcrb_status s) {
    std::fprintf(stderr, "relaxcrb: %s: %s: %s\n", what, rcrb_status_name(s), rcrb_last_error());
    return exit_code_for(s);
}

struct ConfigDeleter {
    void operator()(rcrb_config *c) const { rcrb_config_free(c); }
};
struct ReportDeleter {
    void operator()(rcrb_report *r) const { rcrb_report_free(r); }
};

std::optional<int> threads_from_env() {
    const char *env = std::getenv("RELAXCRB_THREADS");
    if (!env || !*env) return std::nullopt;
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) return -1;
    return static_cast<int>(v);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Cramer-Rao bound evaluation, optimization and Monte Carlo validation of relaxometry protocols",
                 "relaxcrb"};
    app.set_version_flag("--version", rcrb_version());

    const std::map<std::string, rcrb_command> commands{{"evaluate", RCRB_EVALUATE},
                                                       {"optimize", RCRB_OPTIMIZE},
                                                       {"simulate", RCRB_SIMULATE},
                                                       {"compare", RCRB_COMPARE}};
    const std::map<std::string, rcrb_format> formats{{"csv", RCRB_CSV}, {"json", RCRB_JSON}};

    std::string command_name, format_name, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials, threads;

    app.add_option("command", command_name, "evaluate | optimize | simulate | compare")
        ->required()
        ->check(CLI::IsMember(commands))
        ->type_name("COMMAND");
    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--out", out_dir, "output directory (default: config 'out', else .)");
    app.add_option("--format", format_name, "csv or json")->check(CLI::IsMember(formats))->type_name("FORMAT");
    app.add_option("--seed", seed, "root seed of the Monte Carlo substreams");
    app.add_option("--trials", trials, "Monte Carlo trials per tissue point")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "worker threads (fallback: RELAXCRB_THREADS)")->check(CLI::Range(1, 4096));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    const rcrb_command command = commands.at(command_name);
    rcrb_config *raw_cfg = nullptr;
    if (rcrb_status s = rcrb_config_load(config_path.c_str(), &raw_cfg); s != RCRB_OK)
        return report_failure(config_path.c_str(), s);
    std::unique_ptr<rcrb_config, ConfigDeleter> cfg(raw_cfg);

    if (!threads) {
        threads = threads_from_env();
        if (threads && *threads < 1) {
            std::fprintf(stderr, "relaxcrb: RELAXCRB_THREADS must be an integer in [1, 4096]\n");
            return kExitConfig;
        }
    }
    rcrb_status s = RCRB_OK;
    if (seed && (s = rcrb_config_set_seed(cfg.get(), *seed)) != RCRB_OK) return report_failure("--seed", s);
    if (trials && (s = rcrb_config_set_trials(cfg.get(), *trials)) != RCRB_OK) return report_failure("--trials", s);
    if (threads && (s = rcrb_config_set_threads(cfg.get(), *threads)) != RCRB_OK)
        return report_failure("--threads", s);
    if (!format_name.empty() && (s = rcrb_config_set_format(cfg.get(), formats.at(format_name))) != RCRB_OK)
        return report_failure("--format", s);
    if (out_dir.empty()) out_dir = rcrb_config_out_dir(cfg.get());
    if (out_dir.empty()) out_dir = ".";

    rcrb_command configured{};
    if (rcrb_config_command(cfg.get(), &configured) == RCRB_OK && configured != command)
        std::fprintf(stderr, "relaxcrb: note: config names a different command; running the one given\n");

    // Output directory must be usable before any work starts.
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        std::fprintf(stderr, "relaxcrb: cannot use output directory '%s'\n", out_dir.c_str());
        return kExitConfig;
    }

    const auto start = std::chrono::steady_clock::now();
    rcrb_report *raw_report = nullptr;
    if ((s = rcrb_run(command, cfg.get(), &raw_report)) != RCRB_OK) return report_failure("run", s);
    std::unique_ptr<rcrb_report, ReportDeleter> report(raw_report);

    rcrb_format fmt = RCRB_CSV;
    rcrb_config_format(cfg.get(), &fmt);
    if ((s = rcrb_report_write(report.get(), out_dir.c_str(), fmt)) != RCRB_OK) return report_failure("write", s);

    for (std::size_t i = 0; i < rcrb_report_warning_count(report.get()); ++i)
        std::fprintf(stderr, "warning: %s\n", rcrb_report_warning(report.get(), i));
    for (std::size_t i = 0; i < rcrb_report_error_count(report.get()); ++i)
        std::fprintf(stderr, "error: %s\n", rcrb_report_error(report.get(), i));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "relaxcrb: wrote %zu table(s) to %s in %.2f s\n", rcrb_report_table_count(report.get()),
                 out_dir.c_str(), secs);
    return rcrb_report_exit_code(report.get());
}
