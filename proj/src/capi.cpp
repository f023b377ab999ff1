#include "relaxcrb/relaxcrb.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "error.hpp"
#include "estimation.hpp"

struct rcrb_config {
    relaxcrb::RunConfig cfg;
};

struct rcrb_report {
    relaxcrb::Report report;
};

namespace {

thread_local std::string g_last_error;

rcrb_status fail(rcrb_status s, const std::string &msg) {
    g_last_error = msg;
    return s;
}

// Runs `fn`, translating exceptions into status codes.
template <class F> rcrb_status guarded(F &&fn) {
    try {
        fn();
        g_last_error.clear();
        return RCRB_OK;
    } catch (const relaxcrb::Error &e) {
        return fail(static_cast<rcrb_status>(e.code()), e.what());
    } catch (const std::bad_alloc &) {
        return fail(RCRB_INTERNAL, "out of memory");
    } catch (const std::exception &e) {
        return fail(RCRB_INTERNAL, e.what());
    } catch (...) {
        return fail(RCRB_INTERNAL, "unknown exception");
    }
}

char *dup_string(const std::string &s) {
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char *rcrb_version(void) { return "0.1.0"; }

const char *rcrb_status_name(rcrb_status status) {
    return relaxcrb::error_code_name(static_cast<relaxcrb::ErrorCode>(status));
}

const char *rcrb_last_error(void) { return g_last_error.c_str(); }

rcrb_status rcrb_config_parse(const char *text, rcrb_config **out) {
    if (!text || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new rcrb_config{relaxcrb::parse_config(text)}; });
}

rcrb_status rcrb_config_load(const char *path, rcrb_config **out) {
    if (!path || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail(RCRB_IO_ERROR, std::string("cannot open config '") + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return rcrb_config_parse(ss.str().c_str(), out);
}

void rcrb_config_free(rcrb_config *cfg) { delete cfg; }

rcrb_status rcrb_config_command(const rcrb_config *cfg, rcrb_command *out) {
    if (!cfg || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    if (!cfg->cfg.command) return fail(RCRB_MISSING_FIELD, "config names no command");
    *out = static_cast<rcrb_command>(*cfg->cfg.command);
    return RCRB_OK;
}

rcrb_status rcrb_config_set_seed(rcrb_config *cfg, uint64_t seed) {
    if (!cfg) return fail(RCRB_INVALID_ARGUMENT, "null config");
    cfg->cfg.seed = seed;
    return RCRB_OK;
}

rcrb_status rcrb_config_set_trials(rcrb_config *cfg, int n_trials) {
    if (!cfg) return fail(RCRB_INVALID_ARGUMENT, "null config");
    if (n_trials < 1) return fail(RCRB_CONFIG_ERROR, "trials must be >= 1");
    cfg->cfg.n_trials = n_trials;
    return RCRB_OK;
}

rcrb_status rcrb_config_set_threads(rcrb_config *cfg, int threads) {
    if (!cfg) return fail(RCRB_INVALID_ARGUMENT, "null config");
    if (threads < 1) return fail(RCRB_CONFIG_ERROR, "threads must be >= 1");
    cfg->cfg.threads = threads;
    return RCRB_OK;
}

rcrb_status rcrb_config_set_format(rcrb_config *cfg, rcrb_format format) {
    if (!cfg) return fail(RCRB_INVALID_ARGUMENT, "null config");
    if (format != RCRB_CSV && format != RCRB_JSON) return fail(RCRB_INVALID_ARGUMENT, "unknown format");
    cfg->cfg.format = format == RCRB_JSON ? relaxcrb::OutputFormat::Json : relaxcrb::OutputFormat::Csv;
    return RCRB_OK;
}

rcrb_status rcrb_config_format(const rcrb_config *cfg, rcrb_format *out) {
    if (!cfg || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    *out = cfg->cfg.format == relaxcrb::OutputFormat::Json ? RCRB_JSON : RCRB_CSV;
    return RCRB_OK;
}

rcrb_status rcrb_config_set_out_dir(rcrb_config *cfg, const char *dir) {
    if (!cfg || !dir) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    return guarded([&] { cfg->cfg.out_dir = dir; });
}

const char *rcrb_config_out_dir(const rcrb_config *cfg) { return cfg ? cfg->cfg.out_dir.c_str() : ""; }

size_t rcrb_config_protocol_count(const rcrb_config *cfg) { return cfg ? cfg->cfg.protocols.size() : 0; }

rcrb_status rcrb_evaluate_point(const rcrb_config *cfg, size_t protocol_index, double m0, double t1, double t2,
                                double snr, rcrb_point_result *out) {
    if (!cfg || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    if (protocol_index >= cfg->cfg.protocols.size()) return fail(RCRB_INVALID_ARGUMENT, "protocol index out of range");
    if (!(snr > 0.0)) return fail(RCRB_INVALID_ARGUMENT, "snr must be > 0");
    return guarded([&] {
        const relaxcrb::TissueParams tissue{m0, t1, t2};
        tissue.validate();
        const relaxcrb::CrbReport r =
            relaxcrb::evaluate_point(cfg->cfg.protocols[protocol_index].protocol, tissue, snr);
        rcrb_point_result res{};
        res.crb_m0 = r.crb_m0;
        res.crb_t1 = r.crb_t1;
        res.sens_t1 = r.geometry.sens_t1;
        res.orth_t1 = r.geometry.orth_t1;
        res.gamma_t1 = r.gamma_t1;
        res.t_seq = r.t_seq;
        if (r.crb_t2) {
            res.has_t2 = 1;
            res.crb_t2 = *r.crb_t2;
            res.sens_t2 = r.geometry.sens_t2.value_or(0.0);
            res.orth_t2 = r.geometry.orth_t2.value_or(0.0);
            res.gamma_t2 = r.gamma_t2.value_or(0.0);
        }
        *out = res;
    });
}

rcrb_status rcrb_equivalent_snr(double snr, double t_scan_ms, double t_seq_ms, double *out) {
    if (!out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    return guarded([&] { *out = relaxcrb::equivalent_snr(snr, t_scan_ms, t_seq_ms); });
}

rcrb_status rcrb_run(rcrb_command command, const rcrb_config *cfg, rcrb_report **out) {
    if (!cfg || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    if (command < RCRB_EVALUATE || command > RCRB_COMPARE) return fail(RCRB_INVALID_ARGUMENT, "unknown command");
    *out = nullptr;
    return guarded([&] {
        *out = new rcrb_report{relaxcrb::run_command(static_cast<relaxcrb::Command>(command), cfg->cfg)};
    });
}

int rcrb_report_exit_code(const rcrb_report *report) { return report ? report->report.exit_code : 4; }

size_t rcrb_report_table_count(const rcrb_report *report) { return report ? report->report.tables.size() : 0; }

const char *rcrb_report_table_name(const rcrb_report *report, size_t index) {
    if (!report || index >= report->report.tables.size()) return nullptr;
    return report->report.tables[index].name.c_str();
}

size_t rcrb_report_row_count(const rcrb_report *report, const char *table) {
    if (!report || !table) return 0;
    const relaxcrb::ReportTable *t = report->report.table(table);
    return t ? t->rows.size() : 0;
}

rcrb_status rcrb_report_value(const rcrb_report *report, const char *table, size_t row, const char *column,
                              double *out) {
    if (!report || !table || !column || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    const relaxcrb::ReportTable *t = report->report.table(table);
    if (!t) return fail(RCRB_INVALID_ARGUMENT, std::string("no table '") + table + "'");
    if (row >= t->rows.size()) return fail(RCRB_INVALID_ARGUMENT, "row index out of range");
    return guarded([&] {
        const relaxcrb::Cell &c = t->rows[row][t->column_index(column)];
        if (const double *d = std::get_if<double>(&c))
            *out = *d;
        else if (const std::int64_t *i = std::get_if<std::int64_t>(&c))
            *out = static_cast<double>(*i);
        else
            throw relaxcrb::Error(relaxcrb::ErrorCode::InvalidArgument, "cell is not numeric");
    });
}

size_t rcrb_report_warning_count(const rcrb_report *report) { return report ? report->report.warnings.size() : 0; }

const char *rcrb_report_warning(const rcrb_report *report, size_t index) {
    if (!report || index >= report->report.warnings.size()) return nullptr;
    return report->report.warnings[index].c_str();
}

size_t rcrb_report_error_count(const rcrb_report *report) { return report ? report->report.errors.size() : 0; }

const char *rcrb_report_error(const rcrb_report *report, size_t index) {
    if (!report || index >= report->report.errors.size()) return nullptr;
    return report->report.errors[index].c_str();
}

rcrb_status rcrb_report_serialize(const rcrb_report *report, rcrb_format format, const char *table, char **out) {
    if (!report || !out) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    if (format == RCRB_JSON) return guarded([&] { *out = dup_string(relaxcrb::to_json(report->report)); });
    if (!table) return fail(RCRB_INVALID_ARGUMENT, "CSV serialization needs a table name");
    const relaxcrb::ReportTable *t = report->report.table(table);
    if (!t) return fail(RCRB_INVALID_ARGUMENT, std::string("no table '") + table + "'");
    return guarded([&] { *out = dup_string(relaxcrb::to_csv(*t)); });
}

rcrb_status rcrb_report_write(const rcrb_report *report, const char *dir, rcrb_format format) {
    if (!report || !dir) return fail(RCRB_INVALID_ARGUMENT, "null argument");
    return guarded([&] { relaxcrb::write_report(report->report, dir, format == RCRB_JSON); });
}

void rcrb_string_free(char *s) { std::free(s); }

void rcrb_report_free(rcrb_report *report) { delete report; }

} // extern "C"
