#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "vsmfarm/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "vsmfarm_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

/// Runs the CLI inside the work directory and returns its exit code.
int run(const std::string& args) {
    const std::string cmd = "cd '" + work_dir().string() + "' && SOURCE_DATE_EPOCH=0 '" VSMFARM_CLI_PATH "' " +
                            args + " >cli.log 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string log_text() { return vsmfarm::read_file((work_dir() / "cli.log").string()); }

std::map<std::string, std::string> snapshot(const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(work_dir() / dir))
        files[e.path().filename().string()] = vsmfarm::read_file(e.path().string());
    return files;
}

void write(const std::string& name, const std::string& text) { std::ofstream(work_dir() / name) << text; }

}  // namespace

TEST_CASE("exit codes") {
    SUBCASE("malformed configuration") {
        write("bad.json", "{\"grid\": {\"H_sys\": \"x\"}}");
        CHECK(run("trim --config bad.json --out bad_out") == 2);
        CHECK_FALSE(fs::exists(work_dir() / "bad_out" / "operating_point.txt"));
        CHECK_FALSE(fs::exists(work_dir() / "bad_out" / "manifest.json"));
    }
    SUBCASE("infeasible target") {
        auto j = vsmfarm::to_json(vsmfarm::FarmConfig::benchmark());
        j["targets"]["p_grid"] = 5.0;
        write("p5.json", vsmfarm::dump(j));
        CHECK(run("trim --config p5.json --out p5_out") == 3);
        CHECK(log_text().find("infeasible target") != std::string::npos);
    }
    SUBCASE("missing artifact") {
        CHECK(run("baseline --op does_not_exist.txt --out miss_out") == 4);
    }
    SUBCASE("unknown option") {
        CHECK(run("trim --out x --bogus") == 2);
    }
}

TEST_CASE("commands are byte-deterministic") {
    REQUIRE(run("trim --out t") == 0);
    REQUIRE(run("baseline --op t/operating_point.txt --out a") == 0);
    const auto t1 = snapshot("t");
    const auto a1 = snapshot("a");
    REQUIRE(run("trim --out t") == 0);
    REQUIRE(run("baseline --op t/operating_point.txt --out a") == 0);
    CHECK(snapshot("t") == t1);
    CHECK(snapshot("a") == a1);
    CHECK(t1.count("manifest.json") == 1);
    CHECK(t1.count("operating_point.txt") == 1);
}

TEST_CASE("dt override is recorded") {
    REQUIRE(run("trim --out t") == 0);
    REQUIRE(run("baseline --op t/operating_point.txt --out a") == 0);
    REQUIRE(run("simulate --controllers a/controllers.json --op t/operating_point.txt --scenario pref_step "
                "--tf 1.1 --dt 25e-6 --out s") == 0);
    const auto m = vsmfarm::parse_json_text(vsmfarm::read_file((work_dir() / "s" / "manifest.json").string()), "manifest");
    CHECK(m["options"]["dt"].get<double>() == 25e-6);
    CHECK(m["options"]["duration"].get<double>() == 1.1);
    CHECK(m["command"] == "simulate");
    CHECK(m["timestamp"] == 0);
    const auto csv = vsmfarm::read_file((work_dir() / "s" / "timeseries.csv").string());
    CHECK(csv.rfind("time,", 0) == 0);
}
