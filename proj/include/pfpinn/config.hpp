#pragma once

// Run configuration: a JSON document with nested sections.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "pfpinn/energy.hpp"
#include "pfpinn/fracture.hpp"
#include "pfpinn/network.hpp"
#include "pfpinn/optimize.hpp"

namespace pfpinn {

struct Budget {
  int adam_iters = 1500;
  int lbfgs_iters = 600;
  bool operator==(const Budget&) const = default;
};

struct RunConfig {
  std::string preset;
  fracture::Material material;
  network::MlpArchitecture network;
  std::uint64_t seed = 0;
  int gauss_per_dim = -1;       // -1: preset default
  int refinement_levels = -1;   // -1: preset default
  double delta_u = 0.0;
  int n_steps = 1;
  solver::HistoryPolicy history = solver::HistoryPolicy::Live;
  double history_B = 1000.0;
  bool transfer = true;
  Budget budget;                // step 0, and every step without transfer learning
  Budget transfer_budget;       // steps >= 1 with transfer learning
  optimize::AdamConfig adam;
  optimize::LbfgsConfig lbfgs;
  std::string out_dir = "out";
  int grid = -1;                // -1: preset default
  bool vtk = false;
  bool checkpoints = true;
  int threads = 1;
  int chunk = 1024;

  /// Throws InputError naming the offending field.
  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);
bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace pfpinn
