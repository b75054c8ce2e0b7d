#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "foal/cli.hpp"
#include "foal/io_formats.hpp"
#include "test_support.hpp"

using namespace foal;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::initializer_list<std::string> args) {
  std::vector<std::string> all{"foal"};
  all.insert(all.end(), args);
  std::vector<const char*> argv;
  for (const auto& a : all) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string field(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ": ");
  REQUIRE(at != std::string::npos);
  const auto begin = at + key.size() + 2;
  return text.substr(begin, text.find('\n', begin) - begin);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("make-synthetic then run") {
  const test::TempDir dir;
  const auto data = (dir / "data").string();
  const auto results = (dir / "results.json").string();
  REQUIRE(run({"make-synthetic", "--out-dir", data, "--tasks", "2", "--samples-per-class", "20"}).code == 0);
  const auto r = run({"run", "--manifest", data + "/manifest.json", "--output", results, "--proj-dim", "200"});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(results));

  // stdout metrics are exactly the document's values
  const auto doc = read_results(results);
  CHECK(std::stod(field(r.out, "A_avg")) == doc.report.a_avg);
  CHECK(std::stod(field(r.out, "A_last")) == doc.report.a_last);
  CHECK(std::stod(field(r.out, "F_final")) == *doc.report.f_final);
  CHECK(doc.report.config.projection_dim == 200);
}

TEST_CASE("single-task stream omits forgetting") {
  const test::TempDir dir;
  const auto data = (dir / "data").string();
  REQUIRE(run({"make-synthetic", "--out-dir", data, "--tasks", "1"}).code == 0);
  const auto r = run({"run", "--manifest", data + "/manifest.json", "--output", (dir / "r.json").string(),
                      "--proj-dim", "100"});
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "F_final") == "n/a");
  CHECK(slurp(dir / "r.json").find("f_final") == std::string::npos);
}

TEST_CASE("make-synthetic is deterministic") {
  const test::TempDir a, b;
  REQUIRE(run({"make-synthetic", "--out-dir", a.path().string(), "--seed", "3", "--tasks", "2"}).code == 0);
  REQUIRE(run({"make-synthetic", "--out-dir", b.path().string(), "--seed", "3", "--tasks", "2"}).code == 0);
  for (const char* f : {"manifest.json", "task_1_train.foal", "task_2_test.foal"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("validation errors exit with 1") {
  const test::TempDir dir;
  REQUIRE(run({"make-synthetic", "--out-dir", dir.path().string(), "--tasks", "1"}).code == 0);
  const auto manifest = (dir / "manifest.json").string();
  const auto out = (dir / "r.json").string();

  const auto g = run({"run", "--manifest", manifest, "--output", out, "--gamma", "0"});
  CHECK(g.code == 1);
  CHECK(g.err.find("gamma must be positive") != std::string::npos);
  CHECK(run({"run", "--manifest", manifest, "--output", out, "--bogus"}).code == 1);
  CHECK(run({"run", "--manifest", (dir / "missing.json").string(), "--output", out}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("verify") {
  SUBCASE("defaults pass") {
    const auto r = run({"verify"});
    CHECK(r.code == 0);
    CHECK(std::stod(field(r.out, "relative_frobenius_error")) <= 1e-8);
    CHECK(field(r.out, "samples") == "400");
  }
  SUBCASE("batch partition does not change the digest") {
    const auto a = run({"verify", "--batch-size", "1", "--batches", "320", "--tasks", "1"});
    const auto b = run({"verify", "--batch-size", "320", "--batches", "1", "--tasks", "1"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(field(a.out, "w_digest") == field(b.out, "w_digest"));
  }
  SUBCASE("single batch is a single closed-form solve") {
    CHECK(run({"verify", "--tasks", "1", "--batches", "1"}).code == 0);
  }
  SUBCASE("bad sizes") { CHECK(run({"verify", "--dim", "0"}).code == 1); }
}

TEST_CASE("bench") {
  SUBCASE("single update passes vacuously") {
    const auto r = run({"bench", "--updates", "1", "--dim", "50"});
    CHECK(r.code == 0);
    CHECK(field(r.out, "ratio") == "1");
  }
  SUBCASE("small run reports latencies") {
    const auto r = run({"bench", "--updates", "50", "--dim", "100", "--batch-size", "5"});
    CHECK(r.code != 1);
    CHECK(r.out.find("first_decile_median_ms") != std::string::npos);
  }
}

TEST_CASE("norms") {
  const test::TempDir dir;
  const auto data = (dir / "data").string();
  REQUIRE(run({"make-synthetic", "--out-dir", data, "--tasks", "2", "--classes-per-task", "3"}).code == 0);
  const auto state = (dir / "state.fost").string();
  REQUIRE(run({"run", "--manifest", data + "/manifest.json", "--output", (dir / "r.json").string(), "--proj-dim",
               "64", "--save-state", state})
              .code == 0);

  const auto from_state = run({"norms", "--state", state});
  REQUIRE(from_state.code == 0);
  std::istringstream lines(from_state.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "class_id,l2_norm");
  for (int c = 0; c < 6; ++c) {
    REQUIRE(std::getline(lines, line));
    CHECK(line.rfind(std::to_string(c) + ",", 0) == 0);
    CHECK(std::stod(line.substr(line.find(',') + 1)) > 0.0);
  }
  REQUIRE(std::getline(lines, line));
  CHECK(line.rfind("coefficient_of_variation,", 0) == 0);

  const auto from_manifest = run({"norms", "--manifest", data + "/manifest.json", "--proj-dim", "64"});
  REQUIRE(from_manifest.code == 0);
  CHECK(from_manifest.out == from_state.out);

  SUBCASE("a class that was never trained reports exactly zero") {
    auto c = load_classifier(state);
    c.expand_classes(std::vector<ClassId>{99});
    save_classifier(c, dir / "expanded.fost");
    const auto r = run({"norms", "--state", (dir / "expanded.fost").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\n99,0\n") != std::string::npos);
  }
  SUBCASE("untrained state is rejected") {
    save_classifier(AnalyticClassifier(4, 1.0), dir / "fresh.fost");
    CHECK(run({"norms", "--state", (dir / "fresh.fost").string()}).code == 1);
  }
  SUBCASE("needs a source") { CHECK(run({"norms"}).code == 1); }
}

TEST_CASE("gamma sweep peaks inside the grid") {
  const test::TempDir dir;
  const auto data = (dir / "data").string();
  REQUIRE(run({"make-synthetic", "--out-dir", data, "--samples-per-class", "10", "--prototype-scale", "1",
               "--noise", "1.5"})
              .code == 0);
  std::vector<double> a_avg;
  for (const char* g : {"100000", "10000", "1000", "100", "10", "1", "0.1", "0.01", "0.001"}) {
    const auto r = run({"run", "--manifest", data + "/manifest.json", "--output", (dir / "r.json").string(),
                        "--gamma", g});
    REQUIRE(r.code == 0);
    a_avg.push_back(std::stod(field(r.out, "A_avg")));
  }
  const auto peak = std::max_element(a_avg.begin(), a_avg.end());
  CHECK(peak != a_avg.begin());
  CHECK(peak != a_avg.end() - 1);
  CHECK(*peak - a_avg.front() >= 0.03);
  CHECK(*peak - a_avg.back() >= 0.1);
}

TEST_CASE("bench latency grows superlinearly in the dimension") {
  const auto small = run({"bench", "--dim", "250", "--updates", "60"});
  const auto large = run({"bench", "--dim", "1000", "--updates", "60"});
  REQUIRE(small.code != 1);
  REQUIRE(large.code != 1);
  // 4x the dimension: linear cost would give 4x, the D^2 S term gives ~16x.
  CHECK(std::stod(field(large.out, "first_decile_median_ms")) >
        4.0 * std::stod(field(small.out, "first_decile_median_ms")));
}

TEST_CASE("norms on a balanced five-task run reports the coefficient of variation") {
  const test::TempDir dir;
  REQUIRE(run({"make-synthetic", "--out-dir", dir.path().string()}).code == 0);
  const auto r = run({"norms", "--manifest", (dir / "manifest.json").string(), "--proj-dim", "200"});
  REQUIRE(r.code == 0);
  const auto at = r.out.find("coefficient_of_variation,");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(r.out.substr(at + 25)) >= 0.0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 22);
}
