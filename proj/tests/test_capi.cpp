#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "relaxcrb/relaxcrb.h"

namespace {

const char *kConfig = R"(
command = compare
[protocol cir]
family = CIR
ti = [0:450:1800] ms
w = 10000 ms

[protocol seir]
family = SEIR
tr_ir = 2994 ms
ti = 1270 ms
tr_se = 2942 ms
te = 17 ms
)";

struct Config {
    rcrb_config *ptr = nullptr;
    explicit Config(const char *text) { REQUIRE(rcrb_config_parse(text, &ptr) == RCRB_OK); }
    ~Config() { rcrb_config_free(ptr); }
};

} // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(rcrb_version()) > 0);
    CHECK(std::string(rcrb_status_name(RCRB_OK)) == "Ok");
    CHECK(std::string(rcrb_status_name(RCRB_UNIT_ERROR)) == "UnitError");
    CHECK(std::string(rcrb_status_name(static_cast<rcrb_status>(1234))) == "Unknown");
}

TEST_CASE("parse errors leave a message and no handle") {
    rcrb_config *cfg = reinterpret_cast<rcrb_config *>(0x1);
    CHECK(rcrb_config_parse("[protocol x]\nfamily = SR\nti = [1, 2]\n", &cfg) == RCRB_UNIT_ERROR);
    CHECK(cfg == nullptr);
    CHECK(std::string(rcrb_last_error()).find("unit") != std::string::npos);
    CHECK(rcrb_config_parse(nullptr, &cfg) == RCRB_INVALID_ARGUMENT);
    CHECK(rcrb_config_parse("", nullptr) == RCRB_INVALID_ARGUMENT);
    CHECK(rcrb_config_load("/nonexistent/relaxcrb.conf", &cfg) == RCRB_IO_ERROR);
    rcrb_config_free(nullptr);
    rcrb_report_free(nullptr);
    rcrb_string_free(nullptr);
}

TEST_CASE("config accessors and setters") {
    Config c(kConfig);
    rcrb_command cmd = RCRB_EVALUATE;
    CHECK(rcrb_config_command(c.ptr, &cmd) == RCRB_OK);
    CHECK(cmd == RCRB_COMPARE);
    CHECK(rcrb_config_protocol_count(c.ptr) == 2);
    CHECK(std::string(rcrb_config_out_dir(c.ptr)).empty());
    CHECK(rcrb_config_set_out_dir(c.ptr, "somewhere") == RCRB_OK);
    CHECK(std::string(rcrb_config_out_dir(c.ptr)) == "somewhere");
    rcrb_format f = RCRB_JSON;
    CHECK(rcrb_config_format(c.ptr, &f) == RCRB_OK);
    CHECK(f == RCRB_CSV);
    CHECK(rcrb_config_set_format(c.ptr, RCRB_JSON) == RCRB_OK);
    CHECK(rcrb_config_format(c.ptr, &f) == RCRB_OK);
    CHECK(f == RCRB_JSON);
    CHECK(rcrb_config_set_trials(c.ptr, 0) == RCRB_CONFIG_ERROR);
    CHECK(rcrb_config_set_threads(c.ptr, 0) == RCRB_CONFIG_ERROR);
    CHECK(rcrb_config_set_trials(nullptr, 10) == RCRB_INVALID_ARGUMENT);
    CHECK(rcrb_config_set_trials(c.ptr, 10) == RCRB_OK);
    CHECK(rcrb_config_set_seed(c.ptr, 7) == RCRB_OK);

    Config no_cmd("[protocol a]\nfamily = SR\nti = [0:620:6820] ms\n");
    CHECK(rcrb_config_command(no_cmd.ptr, &cmd) == RCRB_MISSING_FIELD);
}

TEST_CASE("point evaluation") {
    Config c(kConfig);
    rcrb_point_result r{};
    REQUIRE(rcrb_evaluate_point(c.ptr, 0, 3000.0, 1500.0, 85.0, 100.0, &r) == RCRB_OK);
    CHECK(r.has_t2 == 0);
    CHECK(r.t_seq == doctest::Approx(4500.0 + 5 * 10000.0));
    CHECK(r.gamma_t1 == doctest::Approx(1500.0 / std::sqrt(r.crb_t1 * 54.5)).epsilon(1e-12));
    REQUIRE(rcrb_evaluate_point(c.ptr, 1, 3000.0, 1500.0, 85.0, 100.0, &r) == RCRB_OK);
    CHECK(r.has_t2 == 1);
    CHECK(r.gamma_t2 > 0.0);
    CHECK(rcrb_evaluate_point(c.ptr, 2, 3000.0, 1500.0, 85.0, 100.0, &r) == RCRB_INVALID_ARGUMENT);
    CHECK(rcrb_evaluate_point(c.ptr, 0, 3000.0, -1.0, 85.0, 100.0, &r) == RCRB_INVALID_TISSUE);

    double snr = 0.0;
    CHECK(rcrb_equivalent_snr(100.0, 10000.0, 2500.0, &snr) == RCRB_OK);
    CHECK(snr == doctest::Approx(200.0));
    CHECK(rcrb_equivalent_snr(100.0, 10000.0, 0.0, &snr) == RCRB_INVALID_ARGUMENT);
}

TEST_CASE("running a command and reading the report") {
    Config c(kConfig);
    rcrb_report *rep = nullptr;
    REQUIRE(rcrb_run(RCRB_COMPARE, c.ptr, &rep) == RCRB_OK);
    CHECK(rcrb_report_exit_code(rep) == 0);
    REQUIRE(rcrb_report_table_count(rep) >= 1);
    CHECK(std::string(rcrb_report_table_name(rep, 0)) == "ranking");
    CHECK(rcrb_report_table_name(rep, 99) == nullptr);
    CHECK(rcrb_report_row_count(rep, "ranking") == 2);
    CHECK(rcrb_report_row_count(rep, "nope") == 0);
    CHECK(rcrb_report_error_count(rep) == 0);
    CHECK(rcrb_report_warning_count(rep) == 0);

    double g0 = 0.0, g1 = 0.0, rank = 0.0;
    CHECK(rcrb_report_value(rep, "ranking", 0, "gamma_t1", &g0) == RCRB_OK);
    CHECK(rcrb_report_value(rep, "ranking", 1, "gamma_t1", &g1) == RCRB_OK);
    CHECK(rcrb_report_value(rep, "ranking", 0, "rank", &rank) == RCRB_OK);
    CHECK(rank == 1.0);
    CHECK(g0 >= g1);
    CHECK(rcrb_report_value(rep, "ranking", 0, "protocol", &g0) == RCRB_INVALID_ARGUMENT);
    CHECK(rcrb_report_value(rep, "ranking", 5, "gamma_t1", &g0) == RCRB_INVALID_ARGUMENT);
    CHECK(rcrb_report_value(rep, "ranking", 0, "nope", &g0) == RCRB_INVALID_ARGUMENT);

    char *csv = nullptr;
    REQUIRE(rcrb_report_serialize(rep, RCRB_CSV, "ranking", &csv) == RCRB_OK);
    CHECK(std::string(csv).rfind("#schema=1\n#table=ranking\n", 0) == 0);
    rcrb_string_free(csv);
    CHECK(rcrb_report_serialize(rep, RCRB_CSV, nullptr, &csv) == RCRB_INVALID_ARGUMENT);
    char *json = nullptr;
    REQUIRE(rcrb_report_serialize(rep, RCRB_JSON, nullptr, &json) == RCRB_OK);
    CHECK(std::string(json).find("\"command\": \"compare\"") != std::string::npos);
    rcrb_string_free(json);

    const auto dir = std::filesystem::temp_directory_path() / "relaxcrb_capi_test";
    std::filesystem::remove_all(dir);
    CHECK(rcrb_report_write(rep, dir.string().c_str(), RCRB_CSV) == RCRB_OK);
    CHECK(std::filesystem::exists(dir / "compare_ranking.csv"));
    std::filesystem::remove_all(dir);
    rcrb_report_free(rep);
}

TEST_CASE("command-level failures") {
    Config one("[protocol a]\nfamily = SR\nti = [0:620:6820] ms\n");
    rcrb_report *rep = nullptr;
    CHECK(rcrb_run(RCRB_COMPARE, one.ptr, &rep) == RCRB_CONFIG_ERROR);
    CHECK(rep == nullptr);
    CHECK(rcrb_run(RCRB_OPTIMIZE, one.ptr, &rep) == RCRB_CONFIG_ERROR);
    CHECK(rcrb_run(static_cast<rcrb_command>(9), one.ptr, &rep) == RCRB_INVALID_ARGUMENT);

    Config partial("[protocol a]\nfamily = SR\nti = [0:620:6820] ms\n[protocol b]\nfamily = SR\nti = [0, 1e-9] ms\n");
    REQUIRE(rcrb_run(RCRB_EVALUATE, partial.ptr, &rep) == RCRB_OK);
    CHECK(rcrb_report_exit_code(rep) == 3);
    REQUIRE(rcrb_report_error_count(rep) == 1);
    CHECK(std::string(rcrb_report_error(rep, 0)).rfind("b:", 0) == 0);
    CHECK(rcrb_report_error(rep, 1) == nullptr);
    rcrb_report_free(rep);
}
