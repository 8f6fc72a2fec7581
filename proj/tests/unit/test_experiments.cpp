#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kspin/error.hpp"
#include "kspin/experiments.hpp"

using namespace kspin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kspin_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small(const fs::path& out) {
  ExperimentConfig c;
  c.out = out.string();
  c.reads = 60;
  c.sweeps = 50;
  c.sweep_grid = {2, 10};
  c.qlearning_seeds = 2;
  c.qlearning_episodes = 3000;
  return c;
}

}  // namespace

TEST_CASE("settings text") {
  const auto s = parse_settings("# comment\nstates = 4..6 # trailing\n\nGamma= [0.6, 0.9]\nbeta-start = auto\n");
  CHECK(s.at("states") == "4..6");
  CHECK(s.at("gamma") == "[0.6, 0.9]");
  CHECK(s.at("beta_start") == "auto");
  CHECK_THROWS_WITH_AS(parse_settings("a = 1\nno equals here\n"), doctest::Contains("line 2"), ParseError);
}

TEST_CASE("applying settings") {
  ExperimentConfig c;
  apply_settings(c, {{"states", "4..6"}, {"gamma", "0.6,0.9"}, {"K", "3"}, {"m_or", "7"}, {"beta_end", "auto"},
                     {"sweep_grid", "[1, 2, 5]"}, {"random_order", "yes"}});
  CHECK(c.states == std::vector<std::size_t>{4, 5, 6});
  CHECK(c.gammas == std::vector<double>{0.6, 0.9});
  CHECK(c.order == 3u);
  CHECK(c.reduction_penalty == 7.0);
  CHECK_FALSE(c.beta_end.has_value());
  CHECK(c.sweep_grid == std::vector<std::size_t>{1, 2, 5});
  CHECK(c.random_order);
  apply_settings(c, {{"order", "auto"}});
  CHECK_FALSE(c.order.has_value());

  CHECK_THROWS_AS(apply_settings(c, {{"colour", "blue"}}), ValidationError);
  CHECK_THROWS_AS(apply_settings(c, {{"reads", "many"}}), ValidationError);
  CHECK_THROWS_AS(apply_settings(c, {{"states", "6..4"}}), ValidationError);
}

TEST_CASE("validation lists every problem") {
  ExperimentConfig c;
  c.states = {3};
  c.gammas = {1.2};
  c.reads = 0;
  try {
    c.validate();
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 3);
  }
}

TEST_CASE("file then overrides") {
  const auto dir = scratch("config");
  const auto file = dir / "run.cfg";
  std::ofstream(file) << "experiment = k-heatmap\nstates = 4,6\nseed = 9\n";
  const auto c = load_config(file.string(), {{"seed", "11"}});
  CHECK(c.experiment == "k-heatmap");
  CHECK(c.states == std::vector<std::size_t>{4, 6});
  CHECK(c.seed == 11u);
  CHECK(config_to_json(c).find("\"seed\":11") != std::string::npos);
  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string(), {}), ValidationError);
}

TEST_CASE("instance grid and compared states") {
  ExperimentConfig c;
  c.states = {4, 5};
  c.gammas = {0.6, 0.7, 0.8};
  const auto grid = instance_grid(c);
  CHECK(grid.size() == 6);
  const auto m = make_instance(c, grid.back());
  CHECK(m.num_states() == 5);
  CHECK(m.discount() == 0.8);
  CHECK(compared_states(c, m) == std::vector<std::size_t>{1, 2, 3});
  CHECK(resolve_order(c, make_instance(c, {6, 0.99})) == 3u);
  c.order = 2;
  CHECK(resolve_order(c, m) == 2u);
}

TEST_CASE("solve runner") {
  const auto dir = scratch("solve");
  auto c = small(dir);
  c.states = {6};
  c.gammas = {0.99, 0.8};
  c.order = 3;
  const auto records = run_solve(c);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK_FALSE(r.error.has_value());
    CHECK(r.recovered_by == "exhaustive");
    CHECK(r.feasible);
    CHECK(r.consistent);
    CHECK(r.agreement);
    CHECK(r.minimal_order == 3u);
    CHECK(r.consistent_with_minimal_order == true);
    REQUIRE(r.anneal_success.has_value());
    CHECK(r.anneal_success->reads == 60);
  }
  CHECK(records[0].recovered_policy.bits() ==
        std::vector<std::uint8_t>{0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0});
  const auto csv = slurp(dir / "solve.csv");
  CHECK(csv.rfind("# config: {", 0) == 0);
  CHECK(fs::exists(dir / "solve.json"));

  // same seed, same bytes
  const auto again = scratch("solve2");
  c.out = again.string();
  run_solve(c);
  auto strip = [](std::string s) { return s.substr(s.find('\n')); };
  CHECK(strip(slurp(again / "solve.csv")) == strip(csv));
}

TEST_CASE("truncation below the minimal order disagrees") {
  const auto dir = scratch("solve_k2");
  auto c = small(dir);
  c.states = {6};
  c.gammas = {0.99};
  c.order = 2;
  const auto r = run_solve(c).at(0);
  CHECK_FALSE(r.agreement);
  CHECK(r.consistent_with_minimal_order == true);
}

TEST_CASE("heatmap runner") {
  const auto dir = scratch("heatmap");
  auto c = small(dir);
  c.states = {4, 6};
  c.gammas = {0.9};
  const auto cells = run_k_heatmap(c);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].minimal_order == 2u);
  CHECK(cells[1].minimal_order == 3u);
  CHECK(cells[0].status == "ok");
  CHECK(fs::exists(dir / "k_heatmap.csv"));
}

TEST_CASE("tts runner") {
  const auto dir = scratch("tts");
  auto c = small(dir);
  c.states = {5};
  c.gammas = {0.6};
  c.reads = 200;
  const auto res = run_tts_sweep(c);
  REQUIRE(res.size() == 1);
  CHECK(res[0].rows.size() == 2);
  CHECK(res[0].ground_energy.has_value());
  CHECK(fs::exists(dir / "tts_sweep.csv"));
  CHECK(fs::exists(dir / "tts_optimal.csv"));
}

TEST_CASE("resources runner") {
  const auto dir = scratch("resources");
  auto c = small(dir);
  c.states = {4, 5, 6};
  c.gammas = {0.6};
  const auto s = run_resources(c);
  REQUIRE(s.rows.size() == 3);
  for (const auto& r : s.rows) CHECK(r.logical_variables >= r.base_variables);
  CHECK(s.r_squared >= 0.0);
  CHECK(s.r_squared <= 1.0);
  CHECK(fs::exists(dir / "resources.csv"));
  CHECK(fs::exists(dir / "resources_fit.json"));
}

TEST_CASE("oracle comparison runner") {
  const auto dir = scratch("oracle");
  auto c = small(dir);
  c.states = {5};
  c.gammas = {0.9};
  const auto res = run_oracle_compare(c);
  REQUIRE(res.size() == 1);
  CHECK(res[0].columns.size() == 5);
  CHECK(res[0].agreement.size() == 5);
  // value iteration against the exhaustive policy search
  CHECK(res[0].agreement[0][1]);
  CHECK(fs::exists(dir / "oracle_compare.csv"));
}

TEST_CASE("dispatch rejects unknown experiments") {
  ExperimentConfig c;
  c.experiment = "plot";
  CHECK_THROWS_AS(run_experiment(c), ValidationError);
}
