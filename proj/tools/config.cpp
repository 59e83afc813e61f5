#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

namespace tcmpc::app {

StateVector preset_initial_state() {
  StateVector x;
  x << 1.5, -1.77, 3.0, 1e-3, 3.4e-3, 0.0, 0.772, 0.463, 0.309, 0.309, -2.15e-4, 1e-3, -4.6e-3;
  return x;
}

RunConfig::RunConfig() { campaign.output_dir = "out"; }

namespace {

using Setter = std::function<void(RunConfig&, const YAML::Node&)>;

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

template <typename T>
T scalar(const std::string& key, const YAML::Node& n) {
  if (!n.IsScalar()) fail(key, "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, "cannot parse '" + n.Scalar() + "'");
  }
}

double positive(const std::string& key, const YAML::Node& n) {
  const double v = scalar<double>(key, n);
  if (!(v > 0.0)) fail(key, "must be positive");
  return v;
}

template <int Size>
Eigen::Matrix<double, Size, 1> vector_of(const std::string& key, const YAML::Node& n) {
  if (!n.IsSequence() || n.size() != Size) fail(key, "expected a list of " + std::to_string(Size) + " numbers");
  Eigen::Matrix<double, Size, 1> v;
  for (int i = 0; i < Size; ++i) v(i) = scalar<double>(key, n[i]);
  return v;
}

Integrator integrator_of(const std::string& key, const YAML::Node& n) {
  const auto s = scalar<std::string>(key, n);
  if (s == "euler") return Integrator::Euler;
  if (s == "rk4") return Integrator::Rk4;
  fail(key, "expected euler or rk4, got '" + s + "'");
}

std::string integrator_name(Integrator i) { return i == Integrator::Euler ? "euler" : "rk4"; }

bool bool_of(const std::string& key, const YAML::Node& n) {
  const auto s = scalar<std::string>(key, n);
  if (s == "true" || s == "on") return true;
  if (s == "false" || s == "off") return false;
  fail(key, "expected true or false, got '" + s + "'");
}

std::vector<IterationBudget> budgets_of(const std::string& key, const YAML::Node& n) {
  std::vector<IterationBudget> out;
  auto one = [&](const YAML::Node& item) {
    try {
      out.push_back(IterationBudget::parse(scalar<std::string>(key, item)));
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  };
  if (n.IsSequence()) {
    for (const auto& item : n) one(item);
  } else {
    for (const auto& item : parse_budget_list(scalar<std::string>(key, n))) out.push_back(item);
  }
  if (out.empty()) fail(key, "budget list is empty");
  return out;
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      // Experiment.
      {"seed", [](RunConfig& c, const YAML::Node& n) { c.campaign.seed = scalar<std::uint64_t>("seed", n); }},
      {"trials",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.trials = scalar<int>("trials", n);
         if (c.campaign.trials < 1) fail("trials", "must be >= 1");
       }},
      {"jmax", [](RunConfig& c, const YAML::Node& n) { c.campaign.grid = budgets_of("jmax", n); }},
      {"threads",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.threads = scalar<int>("threads", n);
         if (c.campaign.threads < 1) fail("threads", "must be >= 1");
       }},
      {"output_dir",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.output_dir = scalar<std::string>("output_dir", n); }},
      {"sampling_bounds",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.bounds = vector_of<kStateDim>("sampling_bounds", n);
         if (c.campaign.bounds.minCoeff() < 0.0) fail("sampling_bounds", "must be nonnegative");
       }},
      {"initial_state",
       [](RunConfig& c, const YAML::Node& n) {
         if (n.IsSequence()) {
           c.campaign.initial_state = vector_of<kStateDim>("initial_state", n);
           c.initial_state = "custom";
           return;
         }
         const auto s = scalar<std::string>("initial_state", n);
         if (s == "sample") {
           c.campaign.initial_state.reset();
         } else if (s == "docked") {
           c.campaign.initial_state = State13::docked().to_vector();
         } else if (s == "preset") {
           c.campaign.initial_state = preset_initial_state();
         } else {
           fail("initial_state", "expected sample, docked, preset or 13 numbers, got '" + s + "'");
         }
         c.initial_state = s;
       }},
      // Physical parameters.
      {"mean_motion",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.params.mean_motion = scalar<double>("mean_motion", n); }},
      {"deputy_mass",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.params.deputy_mass = positive("deputy_mass", n); }},
      {"inertia",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.ocp.params.inertia = vector_of<3>("inertia", n);
         if (c.campaign.ocp.params.inertia.minCoeff() <= 0.0) fail("inertia", "must be positive");
       }},
      {"literal_units",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.params.literal_units = bool_of("literal_units", n); }},
      // Subproblem.
      {"dt", [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.dt = positive("dt", n); }},
      {"horizon",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.ocp.horizon = scalar<int>("horizon", n);
         if (c.campaign.ocp.horizon < 1) fail("horizon", "must be >= 1");
       }},
      {"state_weights",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.ocp.state_weights = vector_of<kStateDim>("state_weights", n);
         if (c.campaign.ocp.state_weights.minCoeff() < 0.0) fail("state_weights", "must be nonnegative");
       }},
      {"input_weights",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.ocp.input_weights = vector_of<kControlDim>("input_weights", n);
         if (c.campaign.ocp.input_weights.minCoeff() < 0.0) fail("input_weights", "must be nonnegative");
       }},
      {"input_upper",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.upper = vector_of<kControlDim>("input_upper", n); }},
      {"input_lower",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.lower = vector_of<kControlDim>("input_lower", n); }},
      {"integrator",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.ocp.integrator = integrator_of("integrator", n); }},
      // Solver.
      {"solver_rule",
       [](RunConfig& c, const YAML::Node& n) {
         const auto s = scalar<std::string>("solver_rule", n);
         if (s == "box_ddp") {
           c.campaign.solver.rule = IterationRule::BoxDdp;
         } else if (s == "projected_gradient") {
           c.campaign.solver.rule = IterationRule::ProjectedGradient;
         } else {
           fail("solver_rule", "expected box_ddp or projected_gradient, got '" + s + "'");
         }
       }},
      {"opt_tol", [](RunConfig& c, const YAML::Node& n) { c.campaign.solver.opt_tol = positive("opt_tol", n); }},
      {"initial_step",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.solver.initial_step = positive("initial_step", n); }},
      {"shrink", [](RunConfig& c, const YAML::Node& n) { c.campaign.solver.shrink = scalar<double>("shrink", n); }},
      {"sufficient_decrease",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.solver.sufficient_decrease = scalar<double>("sufficient_decrease", n);
       }},
      {"step_growth",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.solver.step_growth = scalar<double>("step_growth", n); }},
      {"max_backtracks",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.solver.max_backtracks = scalar<int>("max_backtracks", n); }},
      // Mission.
      {"max_steps",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.mission.max_steps = scalar<int>("max_steps", n);
         if (c.campaign.mission.max_steps < 1) fail("max_steps", "must be >= 1");
       }},
      {"success_tol",
       [](RunConfig& c, const YAML::Node& n) { c.campaign.mission.success_tol = positive("success_tol", n); }},
      {"perturbation",
       [](RunConfig& c, const YAML::Node& n) {
         const auto s = scalar<std::string>("perturbation", n);
         auto& kind = c.campaign.mission.perturbation.kind;
         if (s == "off") {
           kind = PerturbationKind::Off;
         } else if (s == "uniform" || s == "on") {
           kind = PerturbationKind::Uniform;
         } else if (s == "symmetric") {
           kind = PerturbationKind::Symmetric;
         } else {
           fail("perturbation", "expected off, uniform or symmetric, got '" + s + "'");
         }
       }},
      {"perturbation_max",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.mission.perturbation.w_max = scalar<double>("perturbation_max", n);
         if (c.campaign.mission.perturbation.w_max < 0.0) fail("perturbation_max", "must be nonnegative");
       }},
      {"plant_integrator",
       [](RunConfig& c, const YAML::Node& n) {
         c.campaign.mission.plant_integrator = integrator_of("plant_integrator", n);
       }},
      {"warm_start",
       [](RunConfig& c, const YAML::Node& n) {
         const auto s = scalar<std::string>("warm_start", n);
         if (s == "shift") {
           c.campaign.mission.warm_start = WarmStart::Shift;
         } else if (s == "hold") {
           c.campaign.mission.warm_start = WarmStart::Hold;
         } else {
           fail("warm_start", "expected shift or hold, got '" + s + "'");
         }
       }},
  };
  return table;
}

void apply_scale(RunConfig& cfg, const std::string& scale) {
  if (scale == "desk") {
    cfg.campaign.trials = 20;
    cfg.campaign.grid = desk_budget_grid();
  } else if (scale == "full") {
    cfg.campaign.trials = 200;
    cfg.campaign.grid = full_budget_grid();
  } else {
    fail("scale", "expected desk or full, got '" + scale + "'");
  }
  cfg.scale = scale;
}

void apply_node(RunConfig& cfg, const std::string& key, const YAML::Node& value) {
  if (key == "scale") {
    apply_scale(cfg, scalar<std::string>(key, value));
    return;
  }
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) fail(key, "unknown key");
  it->second(cfg, value);
}

RunConfig from_root(const YAML::Node& doc) {
  RunConfig cfg;
  if (!doc || doc.IsNull()) return cfg;
  YAML::Node root = doc;
  if (root.IsMap() && root["config"] && root["config"].IsMap()) root = root["config"];
  if (!root.IsMap()) throw ConfigError("config: expected a mapping of key: value pairs");

  // scale first so explicit trials/jmax entries win regardless of order.
  if (root["scale"]) apply_node(cfg, "scale", root["scale"]);
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (key == "scale") continue;
    apply_node(cfg, key, kv.second);
  }
  try {
    cfg.campaign.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace

std::vector<IterationBudget> parse_budget_list(const std::string& text) {
  std::vector<IterationBudget> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char ch) { return std::isspace(ch); }),
               item.end());
    try {
      out.push_back(IterationBudget::parse(item));
    } catch (const std::invalid_argument& e) {
      fail("jmax", e.what());
    }
  }
  if (out.empty()) fail("jmax", "budget list is empty");
  return out;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_root(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  YAML::Node node;
  try {
    node = YAML::Load(value);
  } catch (const YAML::Exception&) {
    fail(key, "cannot parse '" + value + "'");
  }
  apply_node(cfg, key, node);
}

std::string config_to_json(const RunConfig& cfg, int indent) {
  using nlohmann::ordered_json;
  const CampaignConfig& c = cfg.campaign;
  auto vec = [](const auto& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  ordered_json grid = ordered_json::array();
  for (const auto& b : c.grid) grid.push_back(b.label());

  ordered_json j;
  j["scale"] = cfg.scale;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["jmax"] = grid;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir.string();
  j["sampling_bounds"] = vec(c.bounds);
  if (cfg.initial_state == "custom") {
    j["initial_state"] = vec(*c.initial_state);
  } else {
    j["initial_state"] = cfg.initial_state;
  }
  j["mean_motion"] = c.ocp.params.mean_motion;
  j["deputy_mass"] = c.ocp.params.deputy_mass;
  j["inertia"] = vec(c.ocp.params.inertia);
  j["literal_units"] = c.ocp.params.literal_units;
  j["dt"] = c.ocp.dt;
  j["horizon"] = c.ocp.horizon;
  j["state_weights"] = vec(c.ocp.state_weights);
  j["input_weights"] = vec(c.ocp.input_weights);
  j["input_upper"] = vec(c.ocp.upper);
  j["input_lower"] = vec(c.ocp.lower);
  j["integrator"] = integrator_name(c.ocp.integrator);
  j["solver_rule"] = c.solver.rule == IterationRule::BoxDdp ? "box_ddp" : "projected_gradient";
  j["opt_tol"] = c.solver.opt_tol;
  j["initial_step"] = c.solver.initial_step;
  j["shrink"] = c.solver.shrink;
  j["sufficient_decrease"] = c.solver.sufficient_decrease;
  j["step_growth"] = c.solver.step_growth;
  j["max_backtracks"] = c.solver.max_backtracks;
  j["max_steps"] = c.mission.max_steps;
  j["success_tol"] = c.mission.success_tol;
  switch (c.mission.perturbation.kind) {
    case PerturbationKind::Off: j["perturbation"] = "off"; break;
    case PerturbationKind::Uniform: j["perturbation"] = "uniform"; break;
    case PerturbationKind::Symmetric: j["perturbation"] = "symmetric"; break;
  }
  j["perturbation_max"] = c.mission.perturbation.w_max;
  j["plant_integrator"] = integrator_name(c.mission.plant_integrator);
  j["warm_start"] = c.mission.warm_start == WarmStart::Shift ? "shift" : "hold";
  return j.dump(indent);
}

}  // namespace tcmpc::app
