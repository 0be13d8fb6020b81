#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "pfpinn/config.hpp"
#include "pfpinn/problem.hpp"

using namespace pfpinn;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "preset": "senp-tension",
    "material": {"lambda": 121.15, "mu": 80.77, "Gc": 2.7e-3, "l0": 0.0125},
    "network": {"layers": [2, 50, 50, 50, 3]}
  })");
}

}  // namespace

TEST_CASE("defaults fill the optional sections") {
  const auto c = config_from_json(minimal());
  CHECK(c.budget.adam_iters == 1500);
  CHECK(c.budget.lbfgs_iters == 600);
  CHECK(c.transfer_budget == c.budget);
  CHECK(c.history == solver::HistoryPolicy::Live);
  CHECK(c.n_steps == 1);
  CHECK(c.transfer);
}

TEST_CASE("parse, serialize, parse is the identity") {
  auto j = minimal();
  j["seed"] = 99;
  j["history"] = {{"policy", "frozen"}, {"B", 500.0}};
  j["optimizer"] = {{"lbfgs", {{"memory", 7}, {"f_tol", 1e-9}}}, {"transfer", {{"lbfgs_iters", 40}}}};
  const auto a = config_from_json(j);
  const auto b = config_from_json(config_to_json(a));
  CHECK(a == b);
  CHECK(config_to_json(a).dump() == config_to_json(b).dump());
  CHECK(b.lbfgs.memory == 7);
  CHECK(b.transfer_budget.lbfgs_iters == 40);
  CHECK(b.transfer_budget.adam_iters == 1500);
}

TEST_CASE("missing material.l0 is named") {
  auto j = minimal();
  j["material"].erase("l0");
  CHECK_THROWS_WITH_AS(config_from_json(j), "material.l0 required", InputError);
}

TEST_CASE("invalid values are named") {
  auto j = minimal();
  j["material"]["l0"] = -1.0;
  CHECK_THROWS_WITH_AS(config_from_json(j), "material.l0 must be positive", InputError);
  j = minimal();
  j["network"]["layers"] = {2, 50, 2};
  CHECK_THROWS_AS(config_from_json(j), InputError);
  j = minimal();
  j["preset"] = "nope";
  CHECK_THROWS_AS(config_from_json(j), InputError);
  j = minimal();
  j["history"] = {{"policy", "sometimes"}};
  CHECK_THROWS_AS(config_from_json(j), InputError);
  j = minimal();
  j["load"] = {{"n_steps", 0}};
  CHECK_THROWS_WITH_AS(config_from_json(j), "load.n_steps must be >= 1", InputError);
}

TEST_CASE("unknown keys are rejected") {
  auto j = minimal();
  j["material"]["E"] = 1.0;
  CHECK_THROWS_WITH_AS(config_from_json(j), "unknown key 'material.E'", InputError);
}

TEST_CASE("every preset ships a config that validates") {
  const std::filesystem::path dir = std::filesystem::path(PFPINN_SOURCE_DIR) / "configs";
  int found = 0;
  for (const auto& name : solver::preset_names()) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const RunConfig c = load_config(entry.path().string());
      if (c.preset != name) continue;
      ++found;
      CHECK_NOTHROW(solver::make_problem(c.preset, c.material, c.refinement_levels));
      break;
    }
  }
  CHECK(found == static_cast<int>(solver::preset_names().size()));
}
