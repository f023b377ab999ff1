#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string &name) : dir(fs::temp_directory_path() / ("relaxcrb_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path write(const std::string &file, const std::string &text) const {
        std::ofstream(dir / file) << text;
        return dir / file;
    }
};

int run(const std::string &args) {
    const std::string cmd = std::string("\"") + RELAXCRB_CLI + "\" " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kReference = std::string(RELAXCRB_CONFIG_DIR) + "/reference.conf";

} // namespace

TEST_CASE("evaluate writes one CSV per table") {
    Scratch s("evaluate");
    CHECK(run("evaluate --config " + kReference + " --out " + s.dir.string()) == 0);
    for (const char *t : {"summary", "points", "factors"}) {
        const std::string csv = slurp(s.dir / ("evaluate_" + std::string(t) + ".csv"));
        CHECK(csv.rfind("#schema=1\n#table=" + std::string(t) + "\n", 0) == 0);
    }
    CHECK_FALSE(fs::exists(s.dir / "evaluate_messages.csv"));
}

TEST_CASE("compare with JSON output") {
    Scratch s("compare");
    CHECK(run("compare --config " + kReference + " --format json --out " + s.dir.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(s.dir / "compare.json"));
    CHECK(j["command"] == "compare");
    CHECK(j["tables"][0]["rows"].size() == 7);
}

TEST_CASE("simulate is reproducible through the command line") {
    Scratch s("simulate");
    const fs::path cfg = s.write("sim.conf", R"(
[range]
mc_grid_t1 = 2
mc_grid_t2 = 2
[protocol CIR]
family = CIR
ti = [0:450:1800] ms
w = 10000 ms
[protocol SEIR]
family = SEIR
tr_ir = 2994 ms
ti = 1270 ms
tr_se = 2942 ms
te = 17 ms
)");
    const std::string base = "simulate --config " + cfg.string() + " --trials 40 --seed 5 --format json --out ";
    CHECK(run(base + (s.dir / "a").string() + " --threads 1") == 0);
    CHECK(run(base + (s.dir / "b").string() + " --threads 2") == 0);
    const std::string a = slurp(s.dir / "a" / "simulate.json");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(s.dir / "b" / "simulate.json"));
    CHECK(run("simulate --config " + cfg.string() + " --trials 40 --seed 6 --format json --out " +
              (s.dir / "c").string()) == 0);
    CHECK(a != slurp(s.dir / "c" / "simulate.json"));
}

TEST_CASE("configuration problems exit with code 2") {
    Scratch s("errors");
    CHECK(run("evaluate --config " + (s.dir / "missing.conf").string()) == 2);
    CHECK(run("evaluate --config " + s.write("unit.conf", "[protocol a]\nfamily = SR\nti = [1, 2]\n").string()) == 2);
    CHECK(run("evaluate --config " + s.write("key.conf", "bogus = 1\n").string()) == 2);
    CHECK(run("explode --config " + kReference) == 2);
    CHECK(run("evaluate") == 2);
    CHECK(run("simulate --config " + kReference + " --trials 0") == 2);
    const fs::path blocker = s.write("blocker", "x");
    CHECK(run("evaluate --config " + kReference + " --out " + (blocker / "sub").string()) == 2);
    CHECK(run("compare --config " + s.write("one.conf", "[protocol a]\nfamily = SR\nti = [0:620:6820] ms\n").string() +
              " --out " + s.dir.string()) == 2);
}

TEST_CASE("partial and total failures") {
    Scratch s("failures");
    const std::string good = "[protocol good]\nfamily = SR\nti = [0:620:6820] ms\n";
    const std::string bad = "[protocol bad]\nfamily = SR\nti = [0, 1e-9] ms\n";
    CHECK(run("evaluate --config " + s.write("p.conf", good + bad).string() + " --out " + s.dir.string()) == 3);
    CHECK(fs::exists(s.dir / "evaluate_messages.csv"));
    CHECK(run("evaluate --config " + s.write("t.conf", bad).string() + " --out " + s.dir.string()) == 4);
}

TEST_CASE("help and version") {
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
}
