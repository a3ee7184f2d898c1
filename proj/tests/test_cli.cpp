#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cli_app.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using doctest::Approx;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "frontrun");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = frontrun::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("frontrun_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("simulate is deterministic and independent of workers") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    REQUIRE(cli({"simulate", "--n-paths", "4", "--steps", "200", "--seed", "5", "--out", a.string()}).code == 0);
    REQUIRE(cli({"simulate", "--n-paths", "4", "--steps", "200", "--seed", "5", "--workers", "3", "--out", b.string()})
                .code == 0);
    for (const char* f : {"paths.csv", "traces_informed.csv", "traces_uninformed.csv", "traces_naive_frontrun.csv"}) {
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(!slurp(a / f).empty());
    }
    const auto meta = nlohmann::json::parse(slurp(a / "meta.json"));
    CHECK(meta.at("n_paths") == 4);
    CHECK(meta.at("lookahead_steps") == 20);

    const auto paths = read_csv(a / "paths.csv");
    CHECK(paths.front() == std::vector<std::string>{"path", "k", "t", "S"});
    CHECK(paths.size() == 1 + 4 * 201);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("without lookahead the signal column equals the price") {
    const fs::path d = scratch("sim_delta0");
    REQUIRE(cli({"simulate", "--lookahead", "0", "--n-paths", "2", "--steps", "50", "--policies", "informed", "--out",
                 d.string()})
                .code == 0);
    const auto rows = read_csv(d / "traces_informed.csv");
    REQUIRE(rows.size() == 1 + 2 * 51);
    CHECK(rows[0][2] == "S_t");
    CHECK(rows[0][3] == "S_bar");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][4].empty()) continue;  // terminal row carries no rate
        CHECK(rows[i][3] == rows[i][2]);
        CHECK(rows[i][6] == "0");
    }
    fs::remove_all(d);
}

TEST_CASE("exit codes") {
    CHECK(cli({"value", "--sigma", "-1"}).code == 1);
    CHECK(cli({"value", "--bogus"}).code == 1);
    CHECK(cli({"simulate", "--policies", "clairvoyant"}).code == 1);
    CHECK(cli({"simulate", "--steps", "7", "--n-paths", "1"}).code == 1);
    CHECK(cli({"value", "--config", "/nonexistent/config.json"}).code == 2);

    const fs::path bad = scratch("bad_config");
    fs::create_directories(bad);
    std::ofstream(bad / "c.json") << "{\"sigma\": \"wide\"}";
    CHECK(cli({"value", "--config", (bad / "c.json").string()}).code == 1);
    std::ofstream(bad / "d.json") << "{not json";
    CHECK(cli({"value", "--config", (bad / "d.json").string()}).code == 1);

    // A file where the output directory should go.
    std::ofstream(bad / "blocker") << "x";
    CHECK(cli({"simulate", "--n-paths", "1", "--steps", "20", "--out", (bad / "blocker").string()}).code == 2);
    fs::remove_all(bad);
}

TEST_CASE("value without information") {
    const Run r = cli({"value", "--lookahead", "0", "--mu", "0", "--phi0", "0"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("primal_closed_form").get<double>() == -1.0);
    CHECK(j.at("certainty_equivalent").get<double>() == 0.0);
    CHECK(j.at("mc_estimate").is_null());
}

TEST_CASE("config file and flag precedence") {
    const fs::path d = scratch("config");
    fs::create_directories(d);
    std::ofstream(d / "c.json") << R"({"alpha": 1.0, "lookahead_delta": 0.0, "mu": 0.0, "phi0": 0.0})";
    const auto j = nlohmann::json::parse(cli({"value", "--config", (d / "c.json").string()}).out);
    CHECK(j.at("params").at("alpha").get<double>() == 1.0);
    CHECK(j.at("primal_closed_form").get<double>() == -1.0);
    const auto k = nlohmann::json::parse(cli({"value", "--config", (d / "c.json").string(), "--lookahead", "2"}).out);
    CHECK(k.at("params").at("lookahead_delta").get<double>() == 2.0);
    CHECK(k.at("certainty_equivalent").get<double>() > 0.0);
    fs::remove_all(d);
}

TEST_CASE("certainty equivalent table is increasing") {
    const Run r = cli({"ce", "--deltas", "0,0.25,0.5,1,2,4"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "lookahead_delta,certainty_equivalent,primal_value");
    double prev = -1.0;
    int n = 0;
    while (std::getline(in, line)) {
        const double ce = std::stod(line.substr(line.find(',') + 1));
        CHECK(ce > prev);
        prev = ce;
        ++n;
    }
    CHECK(n == 6);
}

TEST_CASE("verify") {
    const Run ok = cli({"verify", "--quick", "--only", "A1,A2"});
    CHECK(ok.code == 0);
    const auto j = nlohmann::json::parse(ok.out);
    CHECK(j.at("all_passed") == true);
    CHECK(j.at("criteria").size() == 2);
    CHECK(ok.err.find("A1") != std::string::npos);
    CHECK(cli({"verify", "--quick", "--only", "A1", "--flip-k-hat-sign"}).code == 1);
    CHECK(cli({"verify", "--only", "A11"}).code == 1);
}

TEST_CASE("dual oracle and kernel dump") {
    const Run r = cli({"dual-oracle", "--m", "8,16,32"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("a").size() == 3);
    CHECK(j.at("a")[2].at("abs_err").get<double>() < j.at("a")[0].at("abs_err").get<double>());
    CHECK(cli({"dual-oracle", "--m", "2"}).code == 1);

    const Run k = cli({"kernels-dump", "--grid", "5"});
    REQUIRE(k.code == 0);
    std::istringstream in(k.out);
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 15);
}
