#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"
#include "estimation.hpp"
#include "monte_carlo.hpp"
#include "optimizer.hpp"

namespace relaxcrb {

namespace {

using Row = std::vector<Cell>;

Cell opt(const std::optional<double> &v) {
    if (v) return *v;
    return std::monostate{};
}

Cell text(std::string_view s) { return std::string(s); }

Cell integer(std::size_t n) { return static_cast<std::int64_t>(n); }

std::string failure(const std::string &name, const std::exception &e) {
    std::ostringstream os;
    os << name << ": ";
    if (const auto *err = dynamic_cast<const Error *>(&e)) os << error_code_name(err->code()) << ": ";
    os << e.what();
    return os.str();
}

void set_exit_code(Report &r, std::size_t attempted) {
    if (r.errors.empty())
        r.exit_code = 0;
    else
        r.exit_code = r.errors.size() >= attempted ? 4 : 3;
}

void warn_implausible(Report &r, const TissueRange &range) {
    if (range.t2_max > range.t1_min)
        r.warnings.push_back("tissue range contains points with T2 > T1");
}

ReportTable points_table() {
    return {"points",
            {{"protocol", ""},   {"family", ""},          {"t1", "ms"},          {"t2", "ms"},
             {"sens_t1", "1/ms"}, {"orth_t1", ""},         {"crb_t1", "ms^2"},    {"pcrb_t1", "%"},
             {"gamma_t1", "1/sqrt(s)"}, {"sens_t2", "1/ms"}, {"orth_t2", ""},     {"crb_t2", "ms^2"},
             {"pcrb_t2", "%"},    {"gamma_t2", "1/sqrt(s)"}},
            {}};
}

ReportTable summary_table() {
    return {"summary",
            {{"protocol", ""},
             {"family", ""},
             {"description", ""},
             {"n_acq", ""},
             {"t_seq", "ms"},
             {"gamma_t1", "1/sqrt(s)"},
             {"gamma_t2", "1/sqrt(s)"},
             {"snr_eq", ""},
             {"pcrb_t1_pred", "%"},
             {"pcrb_t2_pred", "%"}},
            {}};
}

ReportTable factors_table() {
    return {"factors",
            {{"protocol", ""}, {"family", ""}, {"t1", "ms"}, {"t2", "ms"}, {"sens_t1", "1/ms"}, {"orth_t1", ""}},
            {}};
}

// Predicted percentage error of an estimate acquired over t_scan.
double predicted_pcrb(double gamma, double t_scan_ms) { return 100.0 / (gamma * std::sqrt(t_scan_ms / 1000.0)); }

struct EvaluateTables {
    ReportTable points = points_table();
    ReportTable summary = summary_table();
    ReportTable factors = factors_table();
};

// Evaluates one protocol into the three tables. Rows are only appended once
// every value is known, so a failure leaves the tables untouched.
void evaluate_into(EvaluateTables &out, const std::string &name, const SequenceProtocol &p, const RunConfig &cfg) {
    const std::string_view fam = family_name(p.family());
    std::vector<Row> points, factors;
    for (const TissueParams &t : cfg.range.grid(p.joint())) {
        const CrbReport r = evaluate_point(p, t, cfg.snr);
        const GeometricBound &g = r.geometry;
        std::optional<double> pcrb_t2;
        if (r.crb_t2) pcrb_t2 = pcrb(*r.crb_t2, t.t2);
        points.push_back({text(name), text(fam), t.t1, t.t2, g.sens_t1, g.orth_t1, r.crb_t1, pcrb(r.crb_t1, t.t1),
                          r.gamma_t1, opt(g.sens_t2), opt(g.orth_t2), opt(r.crb_t2), opt(pcrb_t2), opt(r.gamma_t2)});
    }
    for (const TissueParams &t : cfg.range.grid(false)) {
        const GeometricBound g = crb_geometric(weighting_vector(p, t), cfg.snr);
        factors.push_back({text(name), text(fam), t.t1, t.t2, g.sens_t1, g.orth_t1});
    }
    const ProtocolSummary s = summarize_protocol(p, cfg);
    std::optional<double> pred_t2;
    if (s.gamma_t2) pred_t2 = predicted_pcrb(*s.gamma_t2, cfg.t_scan);
    Row summary{text(name),
                text(fam),
                p.describe(),
                integer(p.size()),
                s.t_seq,
                s.gamma_t1,
                opt(s.gamma_t2),
                s.snr_eq,
                predicted_pcrb(s.gamma_t1, cfg.t_scan),
                opt(pred_t2)};

    for (Row &r : points) out.points.add_row(std::move(r));
    for (Row &r : factors) out.factors.add_row(std::move(r));
    out.summary.add_row(std::move(summary));
}

void append_evaluate(Report &report, EvaluateTables &&t) {
    report.tables.push_back(std::move(t.summary));
    report.tables.push_back(std::move(t.points));
    report.tables.push_back(std::move(t.factors));
}

void require_protocols(const RunConfig &cfg, Command c, std::size_t min_count) {
    if (cfg.protocols.size() < min_count) {
        std::ostringstream os;
        os << command_name(c) << " needs at least " << min_count << " [protocol] section"
           << (min_count > 1 ? "s" : "");
        throw Error(ErrorCode::ConfigError, os.str());
    }
}

} // namespace

ProtocolSummary summarize_protocol(const SequenceProtocol &p, const RunConfig &cfg) {
    ProtocolSummary s;
    s.t_seq = sequence_time(p);
    const RangeEfficiency avg = average_efficiency(p, cfg.range, cfg.snr);
    s.gamma_t1 = avg.gamma_t1;
    s.gamma_t2 = avg.gamma_t2;
    s.snr_eq = equivalent_snr(cfg.snr, cfg.t_scan, s.t_seq);
    const auto grid = cfg.range.grid(false);
    for (const TissueParams &t : grid) {
        const GeometricBound g = crb_geometric(weighting_vector(p, t), cfg.snr);
        s.mean_sens_t1 += g.sens_t1;
        s.mean_orth_t1 += g.orth_t1;
    }
    s.mean_sens_t1 /= static_cast<double>(grid.size());
    s.mean_orth_t1 /= static_cast<double>(grid.size());
    return s;
}

Report cmd_evaluate(const RunConfig &cfg) {
    require_protocols(cfg, Command::Evaluate, 1);
    Report report{"evaluate", {}, {}, {}, 0};
    warn_implausible(report, cfg.range);
    EvaluateTables tables;
    for (const NamedProtocol &np : cfg.protocols) {
        try {
            evaluate_into(tables, np.name, np.protocol, cfg);
        } catch (const std::exception &e) {
            report.errors.push_back(failure(np.name, e));
        }
    }
    append_evaluate(report, std::move(tables));
    set_exit_code(report, cfg.protocols.size());
    return report;
}

Report cmd_optimize(const RunConfig &cfg) {
    if (cfg.designs.empty()) throw Error(ErrorCode::ConfigError, "optimize needs at least one [design] section");
    Report report{"optimize", {}, {}, {}, 0};
    warn_implausible(report, cfg.range);

    ReportTable designs{"designs",
                        {{"design", ""},
                         {"family", ""},
                         {"description", ""},
                         {"n_acq", ""},
                         {"lambda_min", "1/sqrt(s)"},
                         {"gamma_t1", "1/sqrt(s)"},
                         {"gamma_t2", "1/sqrt(s)"},
                         {"t_seq", "ms"},
                         {"converged", ""}},
                        {}};
    ReportTable trace{"trace",
                      {{"design", ""},
                       {"n_acq", ""},
                       {"restart", ""},
                       {"lambda", "1/sqrt(s)"},
                       {"converged", ""},
                       {"feasible", ""}},
                      {}};
    EvaluateTables tables;

    for (const NamedDesign &nd : cfg.designs) {
        try {
            const OptimizationResult res = optimize_protocol(nd.spec, cfg.range, cfg.snr, cfg.threads);
            for (const RestartTrace &t : res.trace)
                trace.add_row({text(nd.name), static_cast<std::int64_t>(t.n_acq), static_cast<std::int64_t>(t.restart),
                               t.lambda, static_cast<std::int64_t>(t.converged),
                               static_cast<std::int64_t>(t.feasible)});
            designs.add_row({text(nd.name), text(family_name(nd.spec.family)), res.protocol.describe(),
                             integer(res.protocol.size()), res.lambda_min, res.gamma_avg_t1, opt(res.gamma_avg_t2),
                             sequence_time(res.protocol), static_cast<std::int64_t>(res.converged)});
            for (const std::string &w : res.warnings) report.warnings.push_back(nd.name + ": " + w);
            evaluate_into(tables, nd.name, res.protocol, cfg);
        } catch (const std::exception &e) {
            report.errors.push_back(failure(nd.name, e));
        }
    }
    // Fixed protocols given alongside the designs are evaluated as references.
    for (const NamedProtocol &np : cfg.protocols) {
        try {
            evaluate_into(tables, np.name, np.protocol, cfg);
        } catch (const std::exception &e) {
            report.errors.push_back(failure(np.name, e));
        }
    }

    report.tables.push_back(std::move(designs));
    report.tables.push_back(std::move(trace));
    append_evaluate(report, std::move(tables));
    set_exit_code(report, cfg.designs.size() + cfg.protocols.size());
    return report;
}

Report cmd_simulate(const RunConfig &cfg) {
    require_protocols(cfg, Command::Simulate, 1);
    Report report{"simulate", {}, {}, {}, 0};
    warn_implausible(report, cfg.range);

    ReportTable points{"mc_points",
                       {{"protocol", ""},
                        {"family", ""},
                        {"t1", "ms"},
                        {"t2", "ms"},
                        {"n_trials", ""},
                        {"failures", ""},
                        {"t1_mean", "ms"},
                        {"mee_t1", "%"},
                        {"rbias_t1", "%"},
                        {"pcrb_t1", "%"},
                        {"t2_mean", "ms"},
                        {"mee_t2", "%"},
                        {"rbias_t2", "%"},
                        {"pcrb_t2", "%"}},
                       {}};
    ReportTable summary{"mc_summary",
                        {{"protocol", ""},
                         {"family", ""},
                         {"t_seq", "ms"},
                         {"snr_eq", ""},
                         {"n_points", ""},
                         {"failures", ""},
                         {"mee_t1_avg", "%"},
                         {"mee_t1_min", "%"},
                         {"mee_t1_max", "%"},
                         {"rbias_t1_maxabs", "%"},
                         {"pcrb_t1_avg", "%"},
                         {"mee_t2_avg", "%"},
                         {"mee_t2_min", "%"},
                         {"mee_t2_max", "%"},
                         {"rbias_t2_maxabs", "%"},
                         {"pcrb_t2_avg", "%"}},
                        {}};

    const TissueRange mc_range = cfg.mc_range();
    for (const NamedProtocol &np : cfg.protocols) {
        try {
            const SequenceProtocol &p = np.protocol;
            const double t_seq = sequence_time(p);
            const double snr_eq = equivalent_snr(cfg.snr, cfg.t_scan, t_seq);
            TrialConfig tc{p, mc_range.grid(p.joint()), snr_eq, std::nullopt, cfg.n_trials, cfg.seed, cfg.init,
                           cfg.threads};
            const TrialReport tr = run_trials(tc);

            struct Agg {
                double sum = 0.0, min = 0.0, max = 0.0, bias = 0.0, pcrb = 0.0;
                std::size_t n = 0;
                void add(const ParamStats &s, double pc) {
                    min = n ? std::min(min, s.mee) : s.mee;
                    max = n ? std::max(max, s.mee) : s.mee;
                    sum += s.mee;
                    bias = std::max(bias, std::abs(s.rbias));
                    pcrb += pc;
                    ++n;
                }
                Cell avg() const { return n ? Cell(sum / static_cast<double>(n)) : Cell(); }
                Cell lo() const { return n ? Cell(min) : Cell(); }
                Cell hi() const { return n ? Cell(max) : Cell(); }
                Cell maxabs() const { return n ? Cell(bias) : Cell(); }
                Cell pc() const { return n ? Cell(pcrb / static_cast<double>(n)) : Cell(); }
            } a1, a2;

            std::int64_t failures = 0;
            std::vector<Row> rows;
            for (const PointReport &pr : tr.points) {
                failures += pr.failures;
                if (pr.failures > 0) {
                    std::ostringstream os;
                    os << np.name << ": " << pr.failures << " of " << pr.n_trials
                       << " fits failed at T1=" << pr.truth.t1 << " ms, T2=" << pr.truth.t2 << " ms";
                    (pr.t1 ? report.warnings : report.errors).push_back(os.str());
                }
                if (pr.t1) a1.add(*pr.t1, pr.pcrb_t1);
                if (pr.t2 && pr.pcrb_t2) a2.add(*pr.t2, *pr.pcrb_t2);
                auto field = [](const std::optional<ParamStats> &s, double ParamStats::*m) {
                    return s ? Cell(*s.*m) : Cell();
                };
                rows.push_back({text(np.name), text(family_name(p.family())), pr.truth.t1, pr.truth.t2,
                                static_cast<std::int64_t>(pr.n_trials), static_cast<std::int64_t>(pr.failures),
                                field(pr.t1, &ParamStats::mean), field(pr.t1, &ParamStats::mee),
                                field(pr.t1, &ParamStats::rbias), pr.pcrb_t1, field(pr.t2, &ParamStats::mean),
                                field(pr.t2, &ParamStats::mee), field(pr.t2, &ParamStats::rbias), opt(pr.pcrb_t2)});
            }
            for (Row &r : rows) points.add_row(std::move(r));
            summary.add_row({text(np.name), text(family_name(p.family())), t_seq, snr_eq, integer(tr.points.size()),
                             failures, a1.avg(), a1.lo(), a1.hi(), a1.maxabs(), a1.pc(), a2.avg(), a2.lo(), a2.hi(),
                             a2.maxabs(), a2.pc()});
        } catch (const std::exception &e) {
            report.errors.push_back(failure(np.name, e));
        }
    }

    report.tables.push_back(std::move(summary));
    report.tables.push_back(std::move(points));
    set_exit_code(report, cfg.protocols.size());
    return report;
}

Report cmd_compare(const RunConfig &cfg) {
    require_protocols(cfg, Command::Compare, 2);
    Report report{"compare", {}, {}, {}, 0};
    warn_implausible(report, cfg.range);

    struct Entry {
        std::string name;
        Family family;
        ProtocolSummary s;
    };
    std::vector<Entry> entries;
    for (const NamedProtocol &np : cfg.protocols) {
        try {
            entries.push_back({np.name, np.protocol.family(), summarize_protocol(np.protocol, cfg)});
        } catch (const std::exception &e) {
            report.errors.push_back(failure(np.name, e));
        }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry &a, const Entry &b) { return a.s.gamma_t1 > b.s.gamma_t1; });

    ReportTable ranking{"ranking",
                        {{"rank", ""},
                         {"protocol", ""},
                         {"family", ""},
                         {"gamma_t1", "1/sqrt(s)"},
                         {"gamma_t2", "1/sqrt(s)"},
                         {"t_seq", "ms"},
                         {"sens_t1_mean", "1/ms"},
                         {"orth_t1_mean", ""}},
                        {}};
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry &e = entries[i];
        ranking.add_row({integer(i + 1), text(e.name), text(family_name(e.family)), e.s.gamma_t1, opt(e.s.gamma_t2),
                         e.s.t_seq, e.s.mean_sens_t1, e.s.mean_orth_t1});
    }
    report.tables.push_back(std::move(ranking));
    set_exit_code(report, cfg.protocols.size());
    return report;
}

Report run_command(Command command, const RunConfig &cfg) {
    cfg.validate();
    switch (command) {
    case Command::Evaluate: return cmd_evaluate(cfg);
    case Command::Optimize: return cmd_optimize(cfg);
    case Command::Simulate: return cmd_simulate(cfg);
    case Command::Compare: return cmd_compare(cfg);
    }
    throw Error(ErrorCode::Internal, "unknown command");
}

} // namespace relaxcrb
