#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "dra/serialize.hpp"

using dra::Json;

namespace {

struct CliResult {
    int exit_code;
    std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
    std::string command = std::string(DRA_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buffer[4096];
    while (std::size_t n = fread(buffer, 1, sizeof buffer, pipe)) out.append(buffer, n);
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/dra_cli_") + name;
    std::ofstream f(path);
    f << content;
    return path;
}

} // namespace

TEST_CASE("decide subcommand", "[cli]") {
    CliResult r = run_cli("decide --eq \"dom(x;y)\" \"dom(x;dom(y))\"");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.stdout_text);
    REQUIRE(j["schema"] == 1);
    REQUIRE(j["valid"] == true);

    r = run_cli("decide --eq \"x;dom(y)\" \"dom(x;y);x\"");
    REQUIRE(r.exit_code == 0);
    j = Json::parse(r.stdout_text);
    REQUIRE(j["valid"] == false);
    REQUIRE(j["counterexample"]["model"]["universe"].get<int>() >= 2);

    SECTION("parse errors exit 1") {
        REQUIRE(run_cli("decide --eq \"dom(\" \"x\"").exit_code == 1);
        REQUIRE(run_cli("decide \"x\" \"y\"").exit_code == 1); // neither --leq nor --eq
        REQUIRE(run_cli("nonsense").exit_code != 0);
    }
}

TEST_CASE("decide output is byte-identical across runs", "[cli]") {
    std::string args = "decide --leq \"dom(x;y);x\" \"x;dom(y)\"";
    CliResult a = run_cli(args);
    CliResult b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    REQUIRE(a.stdout_text == b.stdout_text);
}

TEST_CASE("certify round trip through a verdict file", "[cli]") {
    CliResult r = run_cli("decide --eq \"x;dom(y)\" \"dom(x;y);x\"");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.stdout_text);
    std::string path = write_temp("verdict.json", j.dump());
    CliResult c = run_cli("certify --verdict " + path + " \"x;dom(y)\" \"dom(x;y);x\"");
    REQUIRE(c.exit_code == 0);
    REQUIRE(Json::parse(c.stdout_text)["certified"] == true);

    SECTION("a tampered verdict exits 2") {
        j["counterexample"]["witness"] = Json::array({0, 0});
        std::string bad = write_temp("verdict_bad.json", j.dump());
        CliResult d = run_cli("certify --verdict " + bad + " \"x;dom(y)\" \"dom(x;y);x\"");
        REQUIRE(d.exit_code == 2);
    }
}

TEST_CASE("eval subcommand", "[cli]") {
    std::string model = write_temp(
        "model.json", R"({"universe": 4, "vars": {"x": [[0,1],[0,2]], "y": [[2,3]]}})");
    CliResult r = run_cli("eval --model " + model + " --mode angelic \"dom(x;y);x\"");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.stdout_text);
    REQUIRE(j["result"] == Json::parse("[[0,1],[0,2]]"));

    r = run_cli("eval --model " + model + " --mode demonic \"dom(x;y);x\"");
    REQUIRE(Json::parse(r.stdout_text)["result"] == Json::array());

    SECTION("bad model file exits 1") {
        std::string bad = write_temp("model_bad.json", R"({"universe": 2})");
        REQUIRE(run_cli("eval --model " + bad + " \"x\"").exit_code == 1);
    }
}

TEST_CASE("scan subcommand is clean and deterministic", "[cli]") {
    CliResult a = run_cli("scan --catalog axd --models 40 --universe 4 --seed 7");
    REQUIRE(a.exit_code == 0);
    Json j = Json::parse(a.stdout_text);
    REQUIRE(j["models_tested"] == 40);
    REQUIRE(j["violations"].empty());
    CliResult b = run_cli("scan --catalog axd --models 40 --universe 4 --seed 7");
    REQUIRE(a.stdout_text == b.stdout_text);
}

TEST_CASE("axioms list subcommand", "[cli]") {
    CliResult r = run_cli("axioms list --catalog axa");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.stdout_text);
    REQUIRE(j["axioms"].size() == 19);
    r = run_cli("axioms list --catalog axd");
    j = Json::parse(r.stdout_text);
    REQUIRE(j["axioms"].size() == 11);
    REQUIRE(j["quasi"].size() == 2);
}

TEST_CASE("saturate subcommand", "[cli]") {
    std::string elements = write_temp("elements.json", R"(["x;y", "x", "y"])");
    CliResult r = run_cli("saturate --elements " + elements + " --rounds 0 --seed 0");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.stdout_text);
    REQUIRE(j["nodes"].size() == 6);
    REQUIRE(j["defects"]["comp"].size() == 1);
    CliResult b = run_cli("saturate --elements " + elements + " --rounds 0 --seed 0");
    REQUIRE(r.stdout_text == b.stdout_text);
}

TEST_CASE("enumerate subcommand", "[cli]") {
    CliResult r = run_cli("enumerate --size 2 --constraints axd");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.stdout_text);
    REQUIRE(j["count"] == 6);
    REQUIRE(j["complete"] == true);
    r = run_cli("enumerate --size 2 --constraints axd,cyclefree");
    REQUIRE(Json::parse(r.stdout_text)["count"] == 2);
}

TEST_CASE("wp subcommand", "[cli]") {
    std::string algebra = write_temp(
        "algebra.json", R"({"size":2,"star":[[0,1],[1,1]],"D":[0,0],"R":[0,0]})");
    SECTION("representation without repairs") {
        CliResult r = run_cli("wp --algebra " + algebra + " --repair-rounds 0");
        REQUIRE(r.exit_code == 0);
        Json j = Json::parse(r.stdout_text);
        REQUIRE(j["cycle_free"] == false);
        REQUIRE(j["remaining_defects"].size() == 1);
    }
    SECTION("unsafe repair rounds carry the caveat") {
        CliResult r = run_cli("wp --algebra " + algebra + " --repair-rounds 1 --unsafe");
        REQUIRE(r.exit_code == 0);
        Json j = Json::parse(r.stdout_text);
        REQUIRE(j["repair_rounds_executed"] == 1);
        REQUIRE(j.contains("caveat"));
        REQUIRE(j["representation"]["points"].size() == 4);
    }
    SECTION("safe repair on non-cycle-free input exits 1") {
        REQUIRE(run_cli("wp --algebra " + algebra + " --repair-rounds 1").exit_code == 1);
    }
}
