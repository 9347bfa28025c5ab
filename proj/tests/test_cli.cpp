#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "permadde/cli.hpp"

using namespace permadde;
using json = nlohmann::json;
using Catch::Matchers::WithinAbs;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "permadde");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string status(const json& report, const std::string& h) {
    for (const auto& c : report.at("checks"))
        if (c.at("hypothesis") == h) return c.at("status");
    return "";
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"check"}).code == kExitUsage);
    CHECK(run({"check", "--builtin", "example9.9"}).code == kExitUsage);
    CHECK(run({"simulate", "--builtin", "example3.4", "--scheme", "euler"}).code == kExitUsage);
    CHECK(run({"check", "--help"}).code == kExitOk);
}

TEST_CASE("simulate writes one row per step") {
    const Run r = run({"simulate", "--builtin", "nicholson2patch", "--horizon", "2", "--step", "0.01"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("t,x1,x2\n", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 202);
    const json s = json::parse(r.err);
    CHECK(s.at("rows") == 201);

    const Run e = run({"simulate", "--builtin", "example3.4", "--initial", "exact", "--horizon", "200", "--dt", "1", "--json"});
    REQUIRE(e.code == kExitOk);
    const json es = json::parse(e.err);
    CHECK_THAT(es.at("final")[0].get<double>(), WithinAbs(1.0 / 202.0, 1e-3));

    const auto path = temp_file("permadde_cli_sim.csv");
    const Run f = run({"simulate", "--builtin", "example3.4", "--horizon", "1", "--out", path});
    CHECK(f.code == kExitOk);
    CHECK(json::parse(f.out).at("rows") == 1001);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x1");
    std::remove(path.c_str());
}

TEST_CASE("check reports statuses and verdicts") {
    const Run r = run({"check", "--builtin", "example3.1", "--json"});
    CHECK(r.code == kExitNoVerdict);
    const json j = json::parse(r.out);
    CHECK(status(j, "H2") == "certified");
    CHECK(status(j, "H2*") == "refuted-on-grid");

    const Run p = run({"check", "--builtin", "nicholson2patch"});
    CHECK(p.code == kExitOk);
    CHECK(p.out.find("PERMANENT") != std::string::npos);

    const Run u = run({"check", "--spec", "builtin:example3.5"});
    CHECK(u.code == kExitNoVerdict);
    CHECK(u.out.find("unbounded") != std::string::npos);
}

TEST_CASE("verify passes on exact fixtures and fails when perturbed") {
    for (const char* id : {"example3.1", "example3.4", "example3.5", "zero"}) {
        INFO(id);
        CHECK(run({"verify", "--builtin", id}).code == kExitOk);
    }
    const Run bad = run({"verify", "--builtin", "example3.4", "--perturb-d", "0.1", "--json"});
    CHECK(bad.code == kExitVerifyFailed);
    CHECK(json::parse(bad.out).at("pass") == false);
    CHECK(run({"verify", "--builtin", "nicholson2patch"}).code == kExitUsage);
}

TEST_CASE("permanence estimates") {
    const Run r = run({"permanence", "--builtin", "nicholson2patch", "--ensemble", "10", "--json"});
    REQUIRE(r.code == kExitOk);
    const json j = json::parse(r.out);
    for (double m : j.at("m_hat").get<std::vector<double>>()) {
        CHECK(m >= 0.1);
        CHECK(m <= 1.0);
    }
    for (double M : j.at("M_hat").get<std::vector<double>>()) CHECK(M <= 3.0);

    const Run s = run({"permanence", "--builtin", "example3.4", "--ensemble", "4"});
    CHECK(s.code == kExitOk);
    CHECK(s.out.find("not positive") != std::string::npos);

    CHECK(run({"permanence", "--builtin", "nicholson2patch", "--ensemble", "0"}).code == kExitUsage);
}

TEST_CASE("malformed spec files") {
    const auto path = temp_file("permadde_cli_bad.json");
    {
        std::ofstream f(path);
        f << R"({"version": 1, "n": 1, "tau": 1, "d": ["fast"]})";
    }
    const Run r = run({"check", "--spec", path});
    std::remove(path.c_str());
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("$.d[0]") != std::string::npos);
    CHECK(run({"check", "--spec", temp_file("permadde_cli_missing.json")}).code == kExitUsage);
}

TEST_CASE("export round trip and determinism") {
    const auto path = temp_file("permadde_cli_export.json");
    REQUIRE(run({"export", "--builtin", "example3.3", "--out", path}).code == kExitOk);
    const Run a = run({"check", "--spec", path, "--json"});
    const Run b = run({"check", "--builtin", "example3.3", "--json"});
    std::remove(path.c_str());
    CHECK(a.code == b.code);
    json ja = json::parse(a.out), jb = json::parse(b.out);
    ja.erase("source");
    jb.erase("source");
    CHECK(ja == jb);

    const std::vector<std::string> cmd{"permanence", "--builtin", "nicholson2patch", "--ensemble", "6", "--horizon", "50", "--json"};
    const Run p1 = run(cmd), p2 = run(cmd);
    CHECK(p1.code == p2.code);
    CHECK(p1.out == p2.out);
}
