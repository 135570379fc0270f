// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "vidrefine/cli.hpp"
#include "vidrefine/store.hpp"

using namespace vidrefine;
using namespace vidrefine::testing;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vidrefine");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const std::string kData = VIDREFINE_DATA_DIR;

}  // namespace

TEST_CASE("run over the bundled mock dataset") {
    TempDir tmp;
    const auto run_dir = (tmp / "run").string();
    const auto r = cli({"run", "--dataset", kData + "/mock/dataset.jsonl", "--config", kData + "/mock/config.json",
                        "--out", run_dir, "--mock"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("ball_ledge  complete  1 iteration, converged") != std::string::npos);
    CHECK(r.out.find("completed: 3 complete, 0 failed") != std::string::npos);
    CHECK(read_manifest(run_dir).completed);

    const auto again = cli({"run", "--dataset", kData + "/mock/dataset.jsonl", "--config", kData + "/mock/config.json",
                            "--out", run_dir, "--mock"});
    CHECK(again.code == kExitUsage);
    CHECK(again.err.find("CollisionError") != std::string::npos);

    const auto resumed = cli({"resume", "--run", run_dir, "--json"});
    CHECK(resumed.code == kExitOk);
    CHECK(Json::parse(resumed.out).at("completed") == true);
}

TEST_CASE("sample failures exit with code 2") {
    TempDir tmp;
    write_text(tmp / "ds.jsonl",
               "{\"id\":\"a\",\"prefix_video\":\"mock://a\",\"description\":\"fine\"}\n"
               "{\"id\":\"b\",\"prefix_video\":\"mock://b\",\"description\":\"refuse me\"}\n");
    write_text(tmp / "fixture.json",
               R"({"analyst":{"entries":{"predict|mock://b":{"error":"ModelRefusal","message":"declined"}}}})");
    write_text(tmp / "config.json", R"({"mock":true,"mock_fixture":"fixture.json"})");
    const auto r = cli({"run", "--dataset", (tmp / "ds.jsonl").string(), "--config", (tmp / "config.json").string(),
                        "--out", (tmp / "run").string(), "--json"});
    CHECK(r.code == kExitFailures);
    const auto j = Json::parse(r.out);
    CHECK(j.at("failed") == 1);
    CHECK(j.at("samples").at(1).at("failure_reason") == "ModelRefusal");
    CHECK(j.at("samples").at(1).at("failure_detail") == "declined");
}

TEST_CASE("validation errors exit with code 1 and cite the line") {
    TempDir tmp;
    write_text(tmp / "bad.jsonl", "{\"id\":\"a\",\"prefix_video\":\"mock://a\",\"description\":\"ok\"}\n{\"id\": \n");
    const auto r = cli({"validate", "--dataset", (tmp / "bad.jsonl").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("bad.jsonl:2:") != std::string::npos);

    const auto ok = cli({"validate", "--dataset", kData + "/mock/dataset.jsonl"});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.find("3 samples OK") != std::string::npos);

    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"run", "--dataset", "/nonexistent.jsonl"}).code == kExitUsage);
    CHECK(cli({"ensemble"}).code == kExitUsage);
    CHECK(cli({"resume", "--run", tmp.path().string()}).code == kExitUsage);
}

TEST_CASE("report and ensemble commands") {
    const auto r = cli({"report", "--aggregate", "62.38", "--baseline", "56.31"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "aggregate 62.38  baseline 56.31  delta +6.07\n");
    const auto j = Json::parse(cli({"report", "--aggregate", "57.09", "--baseline", "56.31", "--json"}).out);
    CHECK(j.at("delta_rounded") == 0.78);

    const auto e = cli({"ensemble", "--scores", kData + "/examples/scores_2x2.csv", "--json"});
    CHECK(e.code == kExitOk);
    const auto sel = Json::parse(e.out);
    CHECK(sel.at("selection").at("aggregate") == 55.0);
    CHECK(sel.at("run_aggregates").at("r1") == 50.0);
}

TEST_CASE("the installed binary reports exit codes") {
    TempDir tmp;
    const std::string bin = VIDREFINE_CLI_PATH;
    const auto cmd = bin + " report --aggregate 1 --baseline 1 > " + (tmp / "out.txt").string();
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(read_text(tmp / "out.txt").find("delta 0.00") != std::string::npos);
    const auto bad = bin + " validate --dataset " + (tmp / "missing.jsonl").string() + " 2>/dev/null";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == kExitUsage);
}
