#include "pfpinn/config.hpp"

#include <fstream>
#include <set>

#include "pfpinn/problem.hpp"

namespace pfpinn {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InputError((section.empty() ? "config" : section) + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw InputError("unknown key '" + (section.empty() ? key : section + "." + key) + "'");
}

template <class T>
T required(const json& j, const std::string& section, const std::string& key) {
  const std::string name = section.empty() ? key : section + "." + key;
  if (!j.contains(key)) throw InputError(name + " required");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(name + " has the wrong type");
  }
}

template <class T>
void optional(const json& j, const std::string& section, const std::string& key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(section + "." + key + " has the wrong type");
  }
}

const json& section(const json& j, const std::string& name) {
  static const json empty = json::object();
  return j.contains(name) ? j.at(name) : empty;
}

}  // namespace

void RunConfig::validate() const {
  const auto& names = solver::preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end())
    throw InputError("preset: unknown preset '" + preset + "'");
  const int dim = preset == "bar1d" ? 1 : preset == "cube-tension" ? 3 : 2;
  material.validate(dim);
  network.validate_for_dimension(dim);
  if (gauss_per_dim != -1 && (gauss_per_dim < 1 || gauss_per_dim > 64))
    throw InputError("quadrature.gauss_per_dim must lie in [1, 64]");
  if (refinement_levels < -1) throw InputError("quadrature.refinement_levels must be >= 0");
  if (!std::isfinite(delta_u)) throw InputError("load.delta_u must be finite");
  if (n_steps < 1) throw InputError("load.n_steps must be >= 1");
  if (!(history_B > 0.0)) throw InputError("history.B must be positive");
  for (const Budget* b : {&budget, &transfer_budget})
    if (b->adam_iters < 0 || b->lbfgs_iters < 0) throw InputError("optimizer iteration budgets must be >= 0");
  if (!(adam.alpha > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0))
    throw InputError("optimizer.adam: need alpha > 0, 0 <= beta < 1, eps > 0");
  if (lbfgs.memory < 1) throw InputError("optimizer.lbfgs.memory must be >= 1");
  if (!(lbfgs.c1 > 0.0 && lbfgs.c1 < lbfgs.c2 && lbfgs.c2 < 1.0))
    throw InputError("optimizer.lbfgs: need 0 < c1 < c2 < 1");
  if (lbfgs.grad_tol < 0.0 || lbfgs.f_tol < 0.0) throw InputError("optimizer.lbfgs tolerances must be >= 0");
  if (lbfgs.max_linesearch < 1) throw InputError("optimizer.lbfgs.max_linesearch must be >= 1");
  if (grid != -1 && grid < 2) throw InputError("output.grid must be >= 2");
  if (threads < 1) throw InputError("parallel.threads must be >= 1");
  if (chunk < 1) throw InputError("parallel.chunk must be >= 1");
}

RunConfig config_from_json(const json& j) {
  check_keys(j, "", {"preset", "material", "network", "seed", "quadrature", "load", "history", "transfer_learning",
                     "optimizer", "output", "parallel"});
  RunConfig c;
  c.preset = required<std::string>(j, "", "preset");

  if (!j.contains("material")) throw InputError("material required");
  const json& m = j.at("material");
  check_keys(m, "material", {"lambda", "mu", "Gc", "l0"});
  c.material.lambda = required<double>(m, "material", "lambda");
  c.material.mu = required<double>(m, "material", "mu");
  c.material.Gc = required<double>(m, "material", "Gc");
  c.material.l0 = required<double>(m, "material", "l0");

  if (!j.contains("network")) throw InputError("network required");
  const json& n = j.at("network");
  check_keys(n, "network", {"layers"});
  c.network.layer_sizes = required<std::vector<int>>(n, "network", "layers");

  optional(j, "", "seed", c.seed);
  const json& q = section(j, "quadrature");
  check_keys(q, "quadrature", {"gauss_per_dim", "refinement_levels"});
  optional(q, "quadrature", "gauss_per_dim", c.gauss_per_dim);
  optional(q, "quadrature", "refinement_levels", c.refinement_levels);

  const json& l = section(j, "load");
  check_keys(l, "load", {"delta_u", "n_steps"});
  optional(l, "load", "delta_u", c.delta_u);
  optional(l, "load", "n_steps", c.n_steps);

  const json& h = section(j, "history");
  check_keys(h, "history", {"policy", "B"});
  std::string policy = solver::history_policy_name(c.history);
  optional(h, "history", "policy", policy);
  c.history = solver::history_policy_from_name(policy);
  optional(h, "history", "B", c.history_B);

  optional(j, "", "transfer_learning", c.transfer);

  const json& o = section(j, "optimizer");
  check_keys(o, "optimizer", {"adam", "lbfgs", "transfer"});
  const json& a = section(o, "adam");
  check_keys(a, "optimizer.adam", {"iters", "alpha", "beta1", "beta2", "eps"});
  optional(a, "optimizer.adam", "iters", c.budget.adam_iters);
  optional(a, "optimizer.adam", "alpha", c.adam.alpha);
  optional(a, "optimizer.adam", "beta1", c.adam.beta1);
  optional(a, "optimizer.adam", "beta2", c.adam.beta2);
  optional(a, "optimizer.adam", "eps", c.adam.eps);
  const json& b = section(o, "lbfgs");
  check_keys(b, "optimizer.lbfgs", {"iters", "memory", "c1", "c2", "grad_tol", "f_tol", "max_linesearch"});
  optional(b, "optimizer.lbfgs", "iters", c.budget.lbfgs_iters);
  optional(b, "optimizer.lbfgs", "memory", c.lbfgs.memory);
  optional(b, "optimizer.lbfgs", "c1", c.lbfgs.c1);
  optional(b, "optimizer.lbfgs", "c2", c.lbfgs.c2);
  optional(b, "optimizer.lbfgs", "grad_tol", c.lbfgs.grad_tol);
  optional(b, "optimizer.lbfgs", "f_tol", c.lbfgs.f_tol);
  optional(b, "optimizer.lbfgs", "max_linesearch", c.lbfgs.max_linesearch);
  c.transfer_budget = c.budget;
  const json& t = section(o, "transfer");
  check_keys(t, "optimizer.transfer", {"adam_iters", "lbfgs_iters"});
  optional(t, "optimizer.transfer", "adam_iters", c.transfer_budget.adam_iters);
  optional(t, "optimizer.transfer", "lbfgs_iters", c.transfer_budget.lbfgs_iters);

  const json& out = section(j, "output");
  check_keys(out, "output", {"dir", "grid", "vtk", "checkpoints"});
  optional(out, "output", "dir", c.out_dir);
  optional(out, "output", "grid", c.grid);
  optional(out, "output", "vtk", c.vtk);
  optional(out, "output", "checkpoints", c.checkpoints);

  const json& p = section(j, "parallel");
  check_keys(p, "parallel", {"threads", "chunk"});
  optional(p, "parallel", "threads", c.threads);
  optional(p, "parallel", "chunk", c.chunk);

  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["material"] = {{"lambda", c.material.lambda}, {"mu", c.material.mu}, {"Gc", c.material.Gc}, {"l0", c.material.l0}};
  j["network"] = {{"layers", c.network.layer_sizes}};
  j["seed"] = c.seed;
  j["quadrature"] = {{"gauss_per_dim", c.gauss_per_dim}, {"refinement_levels", c.refinement_levels}};
  j["load"] = {{"delta_u", c.delta_u}, {"n_steps", c.n_steps}};
  j["history"] = {{"policy", solver::history_policy_name(c.history)}, {"B", c.history_B}};
  j["transfer_learning"] = c.transfer;
  j["optimizer"] = {
      {"adam",
       {{"iters", c.budget.adam_iters},
        {"alpha", c.adam.alpha},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"eps", c.adam.eps}}},
      {"lbfgs",
       {{"iters", c.budget.lbfgs_iters},
        {"memory", c.lbfgs.memory},
        {"c1", c.lbfgs.c1},
        {"c2", c.lbfgs.c2},
        {"grad_tol", c.lbfgs.grad_tol},
        {"f_tol", c.lbfgs.f_tol},
        {"max_linesearch", c.lbfgs.max_linesearch}}},
      {"transfer", {{"adam_iters", c.transfer_budget.adam_iters}, {"lbfgs_iters", c.transfer_budget.lbfgs_iters}}}};
  j["output"] = {{"dir", c.out_dir}, {"grid", c.grid}, {"vtk", c.vtk}, {"checkpoints", c.checkpoints}};
  j["parallel"] = {{"threads", c.threads}, {"chunk", c.chunk}};
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

bool operator==(const RunConfig& a, const RunConfig& b) { return config_to_json(a) == config_to_json(b); }

}  // namespace pfpinn
