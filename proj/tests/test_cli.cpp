#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "factorml/bench.hpp"
#include "factorml/cli.hpp"
#include "factorml/model_json.hpp"
#include "support/test_support.hpp"

using namespace factorml;
using factorml::testing::TempDir;

namespace {

struct CliResult {
    int status;
    std::string out, err;
};

CliResult cli(const std::vector<std::string> &args) {
    std::ostringstream out, err;
    int status = run_cli(args, out, err);
    return {status, out.str(), err.str()};
}

/// Writes the D0 database, the T fixture, and a config naming both.
std::string write_project(const TempDir &tmp) {
    tmp.file("R.csv", "a,b\n1,2\n3,4\n");
    tmp.file("S.csv", "b,c\n2,5\n2,6\n4,7\n");
    tmp.file("T.csv", "x,y\n1,2\n2,4\n3,6\n");
    tmp.file("G.csv", "g,h,v\nu,p,1\nu,p,2\nw,r,3\nw,r,4\n");
    json cfg;
    cfg["data_dir"] = ".";
    cfg["relations"] = json::array();
    auto rel = [](const std::string &name, const std::string &file, json attrs) {
        json r;
        r["name"] = name;
        r["file"] = file;
        r["attributes"] = std::move(attrs);
        return r;
    };
    auto attr = [](const std::string &name, const std::string &kind) {
        json a;
        a["name"] = name;
        a["kind"] = kind;
        return a;
    };
    cfg["relations"].push_back(
        rel("R", "R.csv", json::array({attr("a", "continuous"), attr("b", "continuous")})));
    cfg["relations"].push_back(
        rel("S", "S.csv", json::array({attr("b", "continuous"), attr("c", "continuous")})));
    cfg["relations"].push_back(
        rel("T", "T.csv", json::array({attr("x", "continuous"), attr("y", "continuous")})));
    cfg["relations"].push_back(
        rel("G", "G.csv", json::array({attr("g", "categorical"), attr("h", "categorical"),
                                       attr("v", "continuous")})));
    cfg["queries"]["d0"] = {{"relations", {"R", "S"}}, {"features", {"a", "c"}},
                            {"intercept", false}};
    cfg["queries"]["line"] = {{"relations", {"T"}}, {"features", {"x"}}, {"response", "y"},
                              {"intercept", true}};
    cfg["queries"]["cats"] = {{"relations", {"G"}}, {"features", {"g", "h"}},
                              {"response", "v"}, {"intercept", true}};
    cfg["trainer"] = {{"lambda", 0.0}, {"tol", 1e-10}};
    return tmp.file("config.json", cfg.dump(2));
}

}  // namespace

TEST_CASE("load prints a summary of every configured relation") {
    TempDir tmp;
    auto config = write_project(tmp);
    auto res = cli({"--config", config, "load"});
    REQUIRE(res.status == 0);
    json summary = json::parse(res.out);
    CHECK(summary["R"]["rows"] == 2);
    CHECK(summary["S"]["rows"] == 3);
    CHECK(summary["S"]["distinct"] == 3);
}

TEST_CASE("aggregate on D0 reports the cross moment a,c = 32") {
    TempDir tmp;
    auto config = write_project(tmp);
    auto res = cli({"--config", config, "aggregate", "--query", "d0"});
    REQUIRE(res.status == 0);
    json out = json::parse(res.out);
    CHECK(out["count"] == 3.0);
    CHECK(out["q"]["a,c"] == 32.0);
    CHECK(out["s"]["a"] == 5.0);

    SUBCASE("byte-identical across runs") {
        auto res2 = cli({"--config", config, "aggregate", "--query", "d0"});
        CHECK(res.out == res2.out);
    }
    SUBCASE("group-by counts") {
        auto gres = cli({"--config", config, "aggregate", "--query", "cats", "--group-by", "g"});
        REQUIRE(gres.status == 0);
        json gout = json::parse(gres.out);
        CHECK(gout["counts"]["u"] == 2);
        CHECK(gout["counts"]["w"] == 2);
    }
}

TEST_CASE("explain prints the plan; a cyclic query exits 1 with a clear error") {
    TempDir tmp;
    tmp.file("R.csv", "A,B\n");
    tmp.file("S.csv", "B,C\n");
    tmp.file("U.csv", "C,A\n");
    json cfg;
    cfg["relations"] = json::array();
    for (auto [name, a, b] :
         std::vector<std::tuple<std::string, std::string, std::string>>{
             {"R", "A", "B"}, {"S", "B", "C"}, {"U", "C", "A"}}) {
        json r;
        r["name"] = name;
        r["file"] = name + ".csv";
        r["attributes"] = json::array();
        for (const auto &x : {a, b}) {
            json at;
            at["name"] = x;
            at["kind"] = "continuous";
            r["attributes"].push_back(at);
        }
        cfg["relations"].push_back(r);
    }
    cfg["queries"]["path"] = {{"relations", {"R", "S"}}, {"features", {"A"}}};
    cfg["queries"]["triangle"] = {{"relations", {"R", "S", "U"}}, {"features", {"A"}}};
    auto config = tmp.file("config.json", cfg.dump());

    auto ok = cli({"--config", config, "explain", "--query", "path"});
    CHECK(ok.status == 0);
    CHECK(ok.out.find("keys=(B)") != std::string::npos);

    auto bad = cli({"--config", config, "explain", "--query", "triangle"});
    CHECK(bad.status == 1);
    CHECK(bad.err.find("error: unsupported-query") != std::string::npos);
    CHECK(bad.err.find("cyclic") != std::string::npos);
}

TEST_CASE("train ridge on the line fixture writes theta close to (0, 2)") {
    TempDir tmp;
    auto config = write_project(tmp);
    auto model_path = tmp.path() + "/ridge.json";
    auto res = cli({"--config", config, "train", "ridge", "--query", "line", "--out", model_path});
    REQUIRE(res.status == 0);

    std::ifstream in(model_path);
    json model = json::parse(in);
    CHECK(model["type"] == "ridge");
    REQUIRE(model["theta"].size() == 2);
    CHECK(std::abs(model["theta"][0].get<double>()) < 1e-6);
    CHECK(std::abs(model["theta"][1].get<double>() - 2.0) < 1e-6);
}

TEST_CASE("train cart and chowliu write model files") {
    TempDir tmp;
    auto config = write_project(tmp);

    auto cart_path = tmp.path() + "/cart.json";
    auto cres = cli({"--config", config, "train", "cart", "--query", "line", "--out", cart_path,
                     "--max-depth", "1", "--min-leaf", "1"});
    REQUIRE(cres.status == 0);
    json cart = json::parse(std::ifstream(cart_path));
    CHECK(cart["type"] == "cart");
    CHECK(cart["task"] == "regression");

    auto chow_path = tmp.path() + "/chow.json";
    auto hres = cli({"--config", config, "train", "chowliu", "--query", "cats", "--out", chow_path,
                     "--attrs", "g,h"});
    REQUIRE(hres.status == 0);
    json chow = json::parse(std::ifstream(chow_path));
    CHECK(chow["type"] == "chowliu");
    REQUIRE(chow["edges"].size() == 1);
    CHECK(chow["edges"][0]["mi"].get<double>() == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    SUBCASE("continuous attrs error without --bins and pass with --bins") {
        auto fail = cli({"--config", config, "train", "chowliu", "--query", "cats", "--out",
                         chow_path, "--attrs", "g,v"});
        CHECK(fail.status == 1);
        CHECK(fail.err.find("unsupported-attribute") != std::string::npos);

        auto okres = cli({"--config", config, "train", "chowliu", "--query", "cats", "--out",
                          chow_path, "--attrs", "g,v", "--bins", "2"});
        REQUIRE(okres.status == 0);
        json binned = json::parse(std::ifstream(chow_path));
        CHECK(binned["vertices"] == json::array({"g", "v_bin"}));
    }
}

TEST_CASE("maintain replays the stream; refreshed model equals a cold retrain") {
    TempDir tmp;
    auto config = write_project(tmp);
    // shift the line upward: remove (1,2), add (1,3) and (4,8)
    tmp.file("updates.txt", "-,T,1,2\n+,T,1,3\n+,T,4,8\n");
    auto model_path = tmp.path() + "/maintained.json";
    auto log_path = tmp.path() + "/maintenance.log";
    auto res = cli({"--config", config, "maintain", "--query", "line", "--stream",
                    tmp.path() + "/updates.txt", "--out", model_path, "--log", log_path});
    REQUIRE(res.status == 0);

    // cold retrain on the final data through the CLI
    tmp.file("T.csv", "x,y\n1,3\n2,4\n3,6\n4,8\n");
    auto cold_path = tmp.path() + "/cold.json";
    auto cold = cli({"--config", config, "train", "ridge", "--query", "line", "--out", cold_path});
    REQUIRE(cold.status == 0);

    json warm_model = json::parse(std::ifstream(model_path));
    json cold_model = json::parse(std::ifstream(cold_path));
    REQUIRE(warm_model["theta"].size() == cold_model["theta"].size());
    for (size_t i = 0; i < warm_model["theta"].size(); ++i)
        CHECK(std::abs(warm_model["theta"][i].get<double>() -
                       cold_model["theta"][i].get<double>()) < 1e-6);

    std::ifstream log(log_path);
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) ++lines;
    CHECK(lines == 3);
}

TEST_CASE("bench emits the CSV report shape") {
    TempDir tmp;
    auto out_path = tmp.path() + "/report.csv";
    auto res = cli({"bench", "--sizes", "50,100", "--out", out_path});
    REQUIRE(res.status == 0);
    std::ifstream in(out_path);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header == "n,factorized_ring_ops,naive_tuples,factorized_ms,naive_ms,naive_capped");
    CHECK(row1.substr(0, 3) == "50,");
    CHECK(row2.substr(0, 4) == "100,");
}

TEST_CASE("usage errors exit 1 with a machine-parseable message") {
    TempDir tmp;
    auto res = cli({"aggregate", "--query", "nope"});
    CHECK(res.status == 1);
    CHECK(res.err.rfind("error: ", 0) == 0);

    auto res2 = cli({"--config", tmp.path() + "/missing.json", "load"});
    CHECK(res2.status == 1);
    CHECK(res2.err.rfind("error: config", 0) == 0);
}

TEST_CASE("a capped baseline is marked capped while the factorized side reports") {
    factorml::BenchReport report = factorml::bench_scaling({100}, /*naive_cap=*/10);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].naive_capped);
    CHECK(report.rows[0].factorized_ring_ops > 0);
}
