#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bodyshape/cli.hpp"
#include "bodyshape/datasetgen.hpp"
#include "bodyshape/measure.hpp"
#include "bodyshape/shape_text.hpp"
#include "support.hpp"

#include <json.hpp>

using namespace bodyshape;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bodyshape");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"calibrate"}).code == kExitUsage);
  CHECK(cli({"gen-dataset", "--count", "0", "--out", "x"}).code == kExitUsage);
  const auto help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("gen-dataset") != std::string::npos);
  CHECK(cli({"solve", "--help"}).code == kExitOk);
}

TEST_CASE("measure prints the report") {
  const auto r = cli({"measure"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == measurement_report(measure_all(builtin_asset(), evaluate_mesh(builtin_asset(), ShapeParams::zeros()))) + "\n");
  const auto labelled = cli({"measure", "--labels", "--beta", "[1.131, 1.928, -2.347, -0.793, 0.251, 0.58, 1.707, -2.888, -1.904, 2.772]"});
  CHECK(labelled.code == kExitOk);
  CHECK(labelled.out.find("\"neck_length\":\"high\"") != std::string::npos);
  CHECK(cli({"measure", "--beta", "[1, 2]"}).code == kExitData);
}

TEST_CASE("calibrate writes a loadable table") {
  const auto dir = testsupport::temp_dir("cal");
  const auto path = (dir / "bins.json").string();
  CHECK(cli({"calibrate", "--samples", "1000", "--seed", "3", "--out", path}).code == kExitOk);
  const auto bins = BinTable::load(path);
  CHECK(bins.complete());
  CHECK(bins.to_json() == calibrate_bins(builtin_asset(), 1000, kDefaultQuantiles, 3).to_json());
  CHECK(cli({"calibrate", "--samples", "10", "--out", path}).code == kExitData);
  CHECK(cli({"calibrate", "--quantiles", "0.9,0.1,0.5,0.7", "--out", path}).code == kExitData);
  std::filesystem::remove_all(dir);
}

TEST_CASE("gen-dataset split sizes and reproducibility") {
  const auto dir = testsupport::temp_dir("gen");
  CHECK(cli({"gen-dataset", "--count", "20", "--seed", "1", "--out", (dir / "a").string()}).code == kExitOk);
  CHECK(line_count(dir / "a" / "train.jsonl") == 18);
  CHECK(line_count(dir / "a" / "eval.jsonl") == 2);
  CHECK(cli({"gen-dataset", "--count", "18", "--eval-count", "2", "--seed", "1", "--out", (dir / "b").string()}).code == kExitOk);
  CHECK(slurp(dir / "a" / "train.jsonl") == slurp(dir / "b" / "train.jsonl"));
  CHECK(slurp(dir / "a" / "eval.jsonl") == slurp(dir / "b" / "eval.jsonl"));
  CHECK(cli({"gen-dataset", "--count", "7", "--eval-count", "3", "--out", (dir / "c").string()}).code == kExitOk);
  CHECK(line_count(dir / "c" / "train.jsonl") == 7);
  CHECK(line_count(dir / "c" / "eval.jsonl") == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("solve writes beta and mesh") {
  const auto dir = testsupport::temp_dir("solve");
  const auto beta = (dir / "beta.json").string();
  const auto obj = (dir / "out.obj").string();
  const auto r = cli({"solve", "Short, pearl-shaped person.", "--out", beta, "--obj", obj});
  CHECK(r.code == kExitOk);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["satisfied"] == doc["total"]);
  const auto text = slurp(beta);
  const auto arr = nlohmann::json::parse(text);
  CHECK(arr.size() == 10);
  CHECK(parse_shape_string(text) == round_to_grid(parse_shape_string(text)));
  std::ifstream in(obj);
  std::size_t v = 0, f = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  CHECK(v == builtin_asset().vertex_count());
  CHECK(f == builtin_asset().faces().size());
  CHECK(cli({"solve", "qwzx bbnm"}).code == kExitData);
  std::filesystem::remove_all(dir);
}

TEST_CASE("predict then eval") {
  const auto dir = testsupport::temp_dir("predict");
  REQUIRE(cli({"gen-dataset", "--count", "10", "--eval-count", "10", "--seed", "4", "--out", dir.string()}).code == kExitOk);
  const auto pred = (dir / "pred.jsonl").string();
  REQUIRE(cli({"predict", "--data", (dir / "eval.jsonl").string(), "--out", pred}).code == kExitOk);
  const auto r = cli({"eval", "--pred", pred});
  CHECK(r.code == kExitOk);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["records"] == 10);
  CHECK(doc["wellformed"] == 10);
  CHECK(cli({"eval", "--pred", (dir / "missing.jsonl").string()}).code == kExitData);
  std::filesystem::remove_all(dir);
}

TEST_CASE("environment overrides default paths") {
  const auto dir = testsupport::temp_dir("env");
  ::setenv("BODYSHAPE_BINS", (dir / "absent.json").string().c_str(), 1);
  CHECK(cli({"measure", "--labels"}).code == kExitData);
  ::unsetenv("BODYSHAPE_BINS");
  CHECK(cli({"measure", "--labels"}).code == kExitOk);
  const auto bins = (dir / "bins.json").string();
  REQUIRE(cli({"calibrate", "--samples", "1000", "--seed", "9", "--out", bins}).code == kExitOk);
  ::setenv("BODYSHAPE_BINS", bins.c_str(), 1);
  const auto with_env = cli({"measure", "--labels", "--beta", "[2, 2, 2, 2, 2, 2, 2, 2, 2, 2]"});
  ::unsetenv("BODYSHAPE_BINS");
  const auto with_flag = cli({"--bins", bins, "measure", "--labels", "--beta", "[2, 2, 2, 2, 2, 2, 2, 2, 2, 2]"});
  CHECK(with_env.code == kExitOk);
  CHECK(with_env.out == with_flag.out);
  ::setenv("BODYSHAPE_LEXICON", (dir / "none.json").string().c_str(), 1);
  CHECK(cli({"solve", "tall"}).code == kExitData);
  ::unsetenv("BODYSHAPE_LEXICON");
  std::filesystem::remove_all(dir);
}
