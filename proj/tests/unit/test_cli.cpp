#include <filesystem>
#include <fstream>
#include <sstream>

#include "chamberwalk/cli.hpp"
#include "chamberwalk/suites.hpp"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace cli = chamberwalk::cli;
namespace suites = chamberwalk::suites;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(CHAMBERWALK_DATA_DIR) + "/" + name; }

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("chamberwalk_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST_CASE("verify tree-nlambda reports eight exact matches") {
  const auto r = run({"verify", "--suite", "tree-nlambda", "--q", "2"});
  CHECK(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["schema"] == "chamberwalk/1");
  const auto& checks = doc["reports"][0]["checks"];
  CHECK(checks.size() == 8);
  for (const auto& c : checks) {
    CHECK(c["defect"] == "0");
    CHECK(c["kind"] == "exact");
  }
}

TEST_CASE("empty check list gives an empty report") {
  const auto r = run({"verify"});
  CHECK(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["reports"].empty());
  CHECK(doc["verdict"] == true);
  const auto cfg = write_temp("empty.json", R"({"command": "verify", "suites": []})");
  CHECK(run({"--config", cfg}).code == 0);
}

TEST_CASE("schema violations exit 2") {
  CHECK(run({"discretize", "--family", "free2-tree"}).code == 2);   // missing seed
  CHECK(run({"verify", "--suite", "quotient"}).code == 2);          // stochastic suite without seed
  CHECK(run({"verify", "--suite", "no-such-suite"}).code == 2);
  CHECK(run({"ball", "--p", "two"}).code == 2);
  CHECK(run({"ball", "--unknown", "1"}).code == 2);
  CHECK(run({"verify", "--format", "xml"}).code == 2);
  CHECK(run({"quotient", "--family", "moebius", "--seed", "1"}).code == 2);
  CHECK(run({"--config", write_temp("bad_key.json", R"({"command": "ball", "colour": 3})")}).code == 2);
  CHECK(run({"--config", write_temp("bad_type.json", R"({"command": "ball", "p": "2"})")}).code == 2);
  CHECK(run({"--config", write_temp("no_command.json", R"({"p": 2})")}).code == 2);
  CHECK(run({"--config", write_temp("not_json.json", "{")}).code == 2);
  const auto params = write_temp("bad_param.json", R"({"command": "verify", "suite": "tree-nlambda", "params": {"depth": 3}})");
  CHECK(run({"--config", params}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("size guard exits 3") {
  CHECK(run({"ball", "--p", "3", "--radius", "4"}).code == 3);
  CHECK(run({"ball", "--p", "2", "--radius", "2", "--vertex-limit", "10"}).code == 3);
}

TEST_CASE("flags override the config file") {
  const auto cfg = write_temp("tree.json", R"({"command": "verify", "suite": "tree-nlambda", "params": {"max_k": 3}})");
  const auto base = json::parse(run({"--config", cfg}).out);
  CHECK(base["reports"][0]["checks"].size() == 3);
  CHECK(base["reports"][0]["parameters"]["q"] == 2);
  const auto over = json::parse(run({"verify", "--config", cfg, "--q", "3"}).out);
  CHECK(over["reports"][0]["parameters"]["q"] == 3);
  CHECK(over["reports"][0]["checks"][2]["detail"]["count"] == 36);
}

TEST_CASE("discretize free2 tree") {
  const auto r = run({"discretize", "--family", "free2-tree", "--seed", "7"});
  CHECK(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["mu"]["provenance"] == "transitive-fast-path");
  CHECK(doc["mu"]["measure"].size() == 4);
  for (const auto& e : doc["mu"]["measure"]) CHECK(e["exact"] == "1/4");
  CHECK(doc["first_moment"] == "1");
  const auto csv = run({"discretize", "--family", "z-line", "--k", "2", "--seed", "7", "--format", "csv"});
  CHECK(csv.out == "element,prob,exact\n-2,0.25,1/4\n0,0.5,1/2\n2,0.25,1/4\n");
}

TEST_CASE("network commands on the shipped examples") {
  const auto q = run({"quotient", "--family", "network", "--network", data("c6.json"), "--action-file",
                      data("c6-rotation-2.json"), "--seed", "4"});
  CHECK(q.code == 0);
  const auto doc = json::parse(q.out);
  CHECK(doc["quotient"]["nodes"].size() == 2);
  CHECK(doc["quotient"]["edges"][0][2] == 2);

  const auto sim = run({"simulate", "--network", data("c6.json"), "--seed", "1", "--steps", "600", "--format", "csv"});
  CHECK(sim.code == 0);
  CHECK(sim.out.rfind("node,count,frequency\n", 0) == 0);
  CHECK(run({"simulate", "--network", data("c6.json")}).code == 2);

  const auto ind = run({"induce", "--network", data("c6.json"), "--subset", "0,3"});
  CHECK(ind.code == 0);
  const auto kernel = json::parse(ind.out)["kernel"];
  CHECK(kernel.size() == 4);
  CHECK(kernel[0]["prob"] == "2/3");
  CHECK(run({"induce", "--network", data("c6.json"), "--subset", "0,9"}).code == 2);
}

TEST_CASE("ball and coxeter tables") {
  const auto b = run({"ball", "--p", "2", "--radius", "1", "--export"});
  CHECK(b.code == 0);
  const auto doc = json::parse(b.out);
  CHECK(doc["vertices"] == 1 + 7 + 7 + 42);
  CHECK(doc["ball"]["nodes"].size() == 57);

  const auto t = run({"coxeter-tables", "--type", "A2", "--q", "2", "--max", "1"});
  CHECK(t.code == 0);
  const auto rows = json::parse(t.out)["rows"];
  CHECK(rows.size() == 4);
  CHECK(rows[1]["n_lambda"] == "7");
  CHECK(rows[3]["n_lambda"] == "42");
  CHECK(run({"coxeter-tables", "--type", "E9"}).code == 2);
}

TEST_CASE("reports go to the output directory and do not depend on workers") {
  const auto dir = std::filesystem::temp_directory_path() / "chamberwalk_test_out";
  std::filesystem::remove_all(dir);
  std::string first;
  for (const std::string w : {"1", "3"}) {
    CHECK(run({"verify", "--suite", "boundary-hitting", "--seed", "9", "--samples", "3000", "--workers", w, "--out",
               dir.string()})
              .code == 0);
    std::ifstream in(dir / "report.json");
    std::stringstream ss;
    ss << in.rdbuf();
    if (first.empty()) first = ss.str();
    else CHECK(ss.str() == first);
  }
  CHECK(json::parse(first)["config"].contains("workers") == false);
  CHECK(run({"verify", "--suite", "discretize", "--format", "csv", "--out", dir.string()}).code == 0);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("suite library") {
  CHECK(suites::suite_names().size() == 10);
  CHECK(suites::is_stochastic("boundary-hitting"));
  CHECK_FALSE(suites::is_stochastic("tree-nlambda"));
  suites::SuiteOptions opts;
  opts.params = {{"q", 3}, {"max_k", 2}};
  const auto r = suites::run_suite("tree-nlambda", opts);
  CHECK(r.passed());
  CHECK(r.to_csv().rfind("suite,check,kind,verdict,defect,p_value\n", 0) == 0);
  opts.params = {{"max_k", 99}};
  CHECK_THROWS_AS(suites::run_suite("tree-nlambda", opts), suites::SuiteError);
  // A failing check flips the verdict.
  suites::SuiteReport bad;
  bad.checks.push_back(suites::Check{});
  CHECK_FALSE(bad.passed());
}
