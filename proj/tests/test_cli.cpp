#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

// SBC_CLI_BINARY is injected by the build so the suite always drives the
// binary it was compiled next to.
CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + SBC_CLI_BINARY + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("list-scenarios prints every builtin") {
    const CliResult r = run_cli("list-scenarios");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "static_formation"));
    CHECK(contains(r.output, "spinning_formation"));
    CHECK(contains(r.output, "two_quad_pass"));
}

TEST_CASE("help and argument errors use the input exit code") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("simulate").exit_code == 2);          // --scenario is required
    CHECK(run_cli("verify --trials 0").exit_code == 2);  // must be positive
    CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("simulate runs a builtin, archives it, and audit agrees") {
    TempDir dir("sbc_cli_archive");
    const CliResult sim =
        run_cli("simulate --scenario two_quad_pass --out " + dir.path.string());
    CHECK(sim.exit_code == 0);
    CHECK(contains(sim.output, "safety: pass"));
    CHECK(contains(sim.output, "audit: pass"));
    CHECK(contains(sim.output, "goal error q0"));
    CHECK(contains(sim.output, "wrote " + dir.path.string()));
    for (const char* name : {"trace.csv", "pairs.csv", "audit.json", "scenario.json"})
        CHECK(fs::exists(dir.path / name));

    const CliResult audit = run_cli("audit " + dir.path.string());
    CHECK(audit.exit_code == 0);
    CHECK(contains(audit.output, "consistent with stored audit"));
    CHECK(contains(audit.output, "-> pass"));

    SUBCASE("tighter limits fail the stored trace and name the metric") {
        const CliResult strict = run_cli("audit " + dir.path.string() + " --max-tilt-deg 5");
        CHECK(strict.exit_code == 1);
        CHECK(contains(strict.output, "FAIL (max_tilt_deg exceeds limit)"));
    }
    SUBCASE("a doctored negative barrier row trips the safety exit") {
        std::ofstream out(dir.path / "pairs.csv", std::ios::binary | std::ios::app);
        out << "9.98,0,1,-1,0\n";
        out.close();
        const CliResult bad = run_cli("audit " + dir.path.string());
        CHECK(bad.exit_code == 3);
        CHECK(contains(bad.output, "violates the safety invariant"));
    }
    SUBCASE("audit --json emits a parseable report") {
        const CliResult js = run_cli("audit " + dir.path.string() + " --json");
        CHECK(js.exit_code == 0);
        const nlohmann::json doc = nlohmann::json::parse(js.output);
        CHECK(doc["consistent"] == true);
        CHECK(doc["failing_metric"].is_null());
        CHECK(doc["vehicles"] == 2);
    }
}

TEST_CASE("invalid scenario input exits 2 and names the field") {
    const CliResult bad_field =
        run_cli("simulate --scenario two_quad_pass --set ds=-0.1");
    CHECK(bad_field.exit_code == 2);
    CHECK(contains(bad_field.output, "geometry.D_s"));

    const CliResult unknown = run_cli("simulate --scenario no_such_scenario");
    CHECK(unknown.exit_code == 2);
    CHECK(contains(unknown.output, "cannot open scenario"));
}

TEST_CASE("verify is deterministic for a seed and exits clean") {
    const CliResult a = run_cli("verify --seed 7 --trials 40");
    const CliResult b = run_cli("verify --seed 7 --trials 40");
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(contains(a.output, "verify: all suites passed"));

    const CliResult js = run_cli("verify --seed 7 --trials 40 --json");
    CHECK(js.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(js.output);
    REQUIRE(doc.size() == 5);
    for (const auto& entry : doc) {
        CHECK(entry["failed"] == 0);
        CHECK(entry["trials"].get<int>() >= 1);
    }
}
