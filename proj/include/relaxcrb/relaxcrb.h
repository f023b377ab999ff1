#ifndef RELAXCRB_RELAXCRB_H
#define RELAXCRB_RELAXCRB_H

#include <stddef.h>
#include <stdint.h>

#if defined(RELAXCRB_BUILDING)
#define RCRB_API __attribute__((visibility("default")))
#else
#define RCRB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning rcrb_status leaves a message for
 * rcrb_last_error() on failure; the message is per thread. */
typedef enum rcrb_status {
    RCRB_OK = 0,
    RCRB_INVALID_ARGUMENT = 1,
    RCRB_INVALID_TISSUE = 2,
    RCRB_INVALID_PROTOCOL = 3,
    RCRB_NON_FINITE_MODEL = 4,
    RCRB_DEGENERATE_STEP = 5,
    RCRB_SINGULAR_INFORMATION = 6,
    RCRB_COLLINEAR_VECTORS = 7,
    RCRB_NO_FEASIBLE_POINT = 8,
    RCRB_CONFIG_ERROR = 9,
    RCRB_MISSING_FIELD = 10,
    RCRB_UNIT_ERROR = 11,
    RCRB_IO_ERROR = 12,
    RCRB_ALL_TRIALS_FAILED = 13,
    RCRB_INTERNAL = 99
} rcrb_status;

typedef enum rcrb_command {
    RCRB_EVALUATE = 0,
    RCRB_OPTIMIZE = 1,
    RCRB_SIMULATE = 2,
    RCRB_COMPARE = 3
} rcrb_command;

typedef enum rcrb_format { RCRB_CSV = 0, RCRB_JSON = 1 } rcrb_format;

typedef struct rcrb_config rcrb_config;
typedef struct rcrb_report rcrb_report;

/* Bounds and efficiencies at one tissue point. T2 fields are meaningful only
 * when has_t2 is nonzero. Times in ms, efficiencies per sqrt(second). */
typedef struct rcrb_point_result {
    double crb_m0;
    double crb_t1;
    double crb_t2;
    double sens_t1;
    double orth_t1;
    double sens_t2;
    double orth_t2;
    double gamma_t1;
    double gamma_t2;
    double t_seq;
    int has_t2;
} rcrb_point_result;

RCRB_API const char *rcrb_version(void);
RCRB_API const char *rcrb_status_name(rcrb_status status);
RCRB_API const char *rcrb_last_error(void);

/* Configuration */
RCRB_API rcrb_status rcrb_config_parse(const char *text, rcrb_config **out);
RCRB_API rcrb_status rcrb_config_load(const char *path, rcrb_config **out);
RCRB_API void rcrb_config_free(rcrb_config *cfg);
/* RCRB_MISSING_FIELD when the config names no command. */
RCRB_API rcrb_status rcrb_config_command(const rcrb_config *cfg, rcrb_command *out);
RCRB_API rcrb_status rcrb_config_set_seed(rcrb_config *cfg, uint64_t seed);
RCRB_API rcrb_status rcrb_config_set_trials(rcrb_config *cfg, int n_trials);
RCRB_API rcrb_status rcrb_config_set_threads(rcrb_config *cfg, int threads);
RCRB_API rcrb_status rcrb_config_set_format(rcrb_config *cfg, rcrb_format format);
RCRB_API rcrb_status rcrb_config_format(const rcrb_config *cfg, rcrb_format *out);
RCRB_API rcrb_status rcrb_config_set_out_dir(rcrb_config *cfg, const char *dir);
/* Borrowed pointer, valid until the config is modified or freed; "" if unset. */
RCRB_API const char *rcrb_config_out_dir(const rcrb_config *cfg);
RCRB_API size_t rcrb_config_protocol_count(const rcrb_config *cfg);

/* Point evaluation of the index-th [protocol] of a config. */
RCRB_API rcrb_status rcrb_evaluate_point(const rcrb_config *cfg, size_t protocol_index, double m0, double t1,
                                         double t2, double snr, rcrb_point_result *out);
RCRB_API rcrb_status rcrb_equivalent_snr(double snr, double t_scan_ms, double t_seq_ms, double *out);

/* Commands. A report is produced even when some protocols fail; inspect
 * rcrb_report_exit_code and the error list. */
RCRB_API rcrb_status rcrb_run(rcrb_command command, const rcrb_config *cfg, rcrb_report **out);
RCRB_API int rcrb_report_exit_code(const rcrb_report *report);
RCRB_API size_t rcrb_report_table_count(const rcrb_report *report);
RCRB_API const char *rcrb_report_table_name(const rcrb_report *report, size_t index);
RCRB_API size_t rcrb_report_row_count(const rcrb_report *report, const char *table);
/* Numeric cell lookup; RCRB_INVALID_ARGUMENT for text or empty cells. */
RCRB_API rcrb_status rcrb_report_value(const rcrb_report *report, const char *table, size_t row,
                                       const char *column, double *out);
RCRB_API size_t rcrb_report_warning_count(const rcrb_report *report);
RCRB_API const char *rcrb_report_warning(const rcrb_report *report, size_t index);
RCRB_API size_t rcrb_report_error_count(const rcrb_report *report);
RCRB_API const char *rcrb_report_error(const rcrb_report *report, size_t index);
/* JSON: the whole report. CSV: the named table (table must be non-NULL).
 * Free the returned string with rcrb_string_free. */
RCRB_API rcrb_status rcrb_report_serialize(const rcrb_report *report, rcrb_format format, const char *table,
                                           char **out);
RCRB_API rcrb_status rcrb_report_write(const rcrb_report *report, const char *dir, rcrb_format format);
RCRB_API void rcrb_string_free(char *s);
RCRB_API void rcrb_report_free(rcrb_report *report);

#ifdef __cplusplus
}
#endif

#endif
