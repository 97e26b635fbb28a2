#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "symbnn/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = symbnn::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("symbnn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("bound") {
  const auto r = cli({"bound", "--pi", "1.0", "--target", "0.99"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["expected_chains"] == 1.0);
  CHECK(j["required_chains"] == 100);
  const auto skewed = json::parse(cli({"bound", "--pi", "0.57,0.35,0.08"}).out);
  CHECK(skewed["required_chains"] == 1317);
}

TEST_CASE("errors are structured") {
  const auto r = cli({"bound", "--pi", "0.5,0.6"});
  CHECK(r.code == 1);
  const json j = json::parse(r.err);
  CHECK(j["error"]["stage"] == "bound");
  CHECK(cli({"bound", "--pi", "abc"}).code == 1);
  CHECK(cli({"nonsense"}).code == 1);
  CHECK(cli({}).code == 1);
}

TEST_CASE("sample, evaluate, remove, kl-track, cluster") {
  const fs::path dir = scratch_dir("pipeline");
  const std::string d = dir.string();
  REQUIRE(cli({"gen-data", "--kind", "regression2d", "--n", "60", "--seed", "3", "--out", d}).code == 0);
  CHECK(fs::exists(dir / "meta.json"));
  std::ofstream(dir / "arch.json") << R"({"layers": [2, 3, 1], "activation": "tanh"})";
  const std::string arch = (dir / "arch.json").string();
  const std::vector<std::string> sample{"sample", "--arch", arch, "--data", (dir / "train.csv").string(),
                                        "--chains", "4", "--draws-per-chain", "1", "--seed", "7", "--warmup", "60"};
  auto a = sample;
  a.insert(a.end(), {"--out", (dir / "a.csv").string()});
  auto b = sample;
  b.insert(b.end(), {"--out", (dir / "b.csv").string()});
  REQUIRE(cli(a).code == 0);
  REQUIRE(cli({"--workers", "2", b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], b[8], b[9], b[10], b[11], b[12], b[13], b[14]}).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  const auto ev = cli({"evaluate", "--samples", (dir / "a.csv").string(), "--arch", arch, "--test", (dir / "test.csv").string()});
  REQUIRE(ev.code == 0);
  const json lp = json::parse(ev.out);
  CHECK(lp["per_point"].size() == 12);

  const auto rm = cli({"remove-symmetries", "--samples", (dir / "a.csv").string(), "--arch", arch, "--out",
                       (dir / "canon.csv").string(), "--report", (dir / "report.json").string()});
  REQUIRE(rm.code == 0);
  const auto ev2 = cli({"evaluate", "--samples", (dir / "canon.csv").string(), "--arch", arch, "--test", (dir / "test.csv").string()});
  CHECK(json::parse(ev2.out)["mean_lppd"].get<double>() == doctest::Approx(lp["mean_lppd"].get<double>()).epsilon(1e-12));

  const auto kl = cli({"kl-track", "--samples", (dir / "a.csv").string(), "--arch", arch, "--out", (dir / "kl.csv").string(),
                       "--grid-out", (dir / "grid.csv").string(), "--x-points", "11", "--y-points", "21"});
  REQUIRE(kl.code == 0);
  CHECK(slurp(dir / "kl.csv").rfind("draw_index,kl\n2,", 0) == 0);
  CHECK(slurp(dir / "grid.csv").rfind("x,y,density\n", 0) == 0);

  REQUIRE(cli({"cluster", "--samples", (dir / "canon.csv").string(), "--clusters", "2", "--knn", "2", "--out", (dir / "labels.csv").string()}).code == 0);
  CHECK(slurp(dir / "labels.csv").rfind("draw,label\n", 0) == 0);

  SUBCASE("dimension mismatch is caught before sampling") {
    std::ofstream(dir / "wide.json") << R"({"layers": [3, 3, 1]})";
    const auto bad = cli({"sample", "--arch", (dir / "wide.json").string(), "--data", (dir / "train.csv").string(), "--out", (dir / "x.csv").string()});
    CHECK(bad.code == 1);
    CHECK(json::parse(bad.err)["error"]["stage"] == "data");
  }
}

TEST_CASE("map and ensemble") {
  const fs::path dir = scratch_dir("map");
  REQUIRE(cli({"gen-data", "--n", "40", "--out", dir.string()}).code == 0);
  std::ofstream(dir / "arch.json") << R"({"layers": [2, 3, 1]})";
  const auto r = cli({"ensemble", "--arch", (dir / "arch.json").string(), "--data", (dir / "train.csv").string(), "--members", "3",
                      "--steps", "50", "--lr", "0.01", "--test", (dir / "test.csv").string(), "--out", (dir / "de.csv").string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["loss"].size() == 3);
  CHECK(j.contains("mean_lppd"));
  const auto m = cli({"map", "--arch", (dir / "arch.json").string(), "--data", (dir / "train.csv").string(), "--steps", "50", "--out", (dir / "map.csv").string()});
  CHECK(m.code == 0);
}

TEST_CASE("pipeline") {
  const fs::path dir = scratch_dir("experiment");
  const json cfg = {{"arch", {{"layers", {2, 3, 1}}}},
                    {"seed", 11},
                    {"dataset", {{"kind", "regression2d"}, {"n", 40}}},
                    {"sampler", {{"warmup_steps", 50}, {"chains", 3}}},
                    {"removal", {{"enabled", true}}},
                    {"out_dir", (dir / "out").string()}};
  std::ofstream(dir / "exp.json") << cfg.dump();
  const auto r = cli({"pipeline", "--config", (dir / "exp.json").string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["lppd"].contains("mean_lppd"));
  const std::string first = slurp(dir / "out" / "canonical.csv");
  REQUIRE(cli({"pipeline", "--config", (dir / "exp.json").string()}).code == 0);
  CHECK(slurp(dir / "out" / "canonical.csv") == first);
}
