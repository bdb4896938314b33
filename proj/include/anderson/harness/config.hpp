#pragma once

// Experiment configuration: JSON document with sections `model`,
// `schedule`, `run` and `analysis`, validated field by field.

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"

namespace anderson::harness {

using nlohmann::json;

enum class Kind { spectrum, dos, wegner, minami, poisson, decompose, regularity, decay };

inline const std::vector<std::string>& kind_names() {
  static const std::vector<std::string> names{"spectrum", "dos",        "wegner",     "minami",
                                              "poisson",  "decompose",  "regularity", "decay"};
  return names;
}

inline std::string to_string(Kind k) { return kind_names()[static_cast<std::size_t>(k)]; }

/// Invalid configuration; `path` names the offending field.
struct ConfigError : std::runtime_error {
  std::string path;
  ConfigError(std::string p, const std::string& msg) : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

inline Kind kind_from_string(const std::string& s, const std::string& path = "kind") {
  const auto& n = kind_names();
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == s) return static_cast<Kind>(i);
  }
  throw ConfigError(path, "unknown experiment kind '" + s + "'");
}

struct ScheduleConfig {
  std::vector<int> levels;  // explicit L_0 < L_1 < ...; else built from L0/alpha/p/depth
  int L0 = 0;
  double alpha = 0.0;
  double p_exponent = 0.0;
  int depth = 0;
  std::optional<double> gamma;        // empty: calibrated
  std::optional<double> gamma_prime;  // empty: gamma_fit / 2

  bool operator==(const ScheduleConfig&) const = default;
};

struct ExperimentConfig {
  Kind kind = Kind::spectrum;
  ModelSpec model;
  double E0 = 0.0;
  ScheduleConfig schedule;
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;
  std::size_t first_index = 0;
  unsigned workers = 0;  // 0: ANDERSON_WORKERS or hardware
  std::string output = "run";
  json analysis = json::object();

  bool uses_schedule() const { return kind == Kind::decompose || kind == Kind::decay; }
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(path + "." + it.key(), "unknown field");
  }
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "missing required field");
  return j.at(key);
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline long long get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> get_number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline json potential_to_json(const PotentialSpec& p) {
  json j{{"kind", to_string(p.kind)}};
  switch (p.kind) {
    case PotentialKind::uniform: j["a"] = p.a; j["b"] = p.b; break;
    case PotentialKind::bernoulli: j["p"] = p.p; break;
    case PotentialKind::gaussian: j["mu"] = p.mu; j["sigma2"] = p.sigma2; break;
    case PotentialKind::custom: j["edges"] = p.edges; j["weights"] = p.weights; break;
  }
  return j;
}

inline PotentialSpec potential_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const auto kind_name = get_string(require(j, "kind", path), path + ".kind");
  PotentialKind kind;
  try {
    kind = potential_kind_from_string(kind_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ".kind", e.what());
  }
  PotentialSpec p;
  switch (kind) {
    case PotentialKind::uniform:
      reject_unknown(j, path, {"kind", "a", "b"});
      p = PotentialSpec{};
      p.kind = kind;
      p.a = get_number(require(j, "a", path), path + ".a");
      p.b = get_number(require(j, "b", path), path + ".b");
      break;
    case PotentialKind::bernoulli:
      reject_unknown(j, path, {"kind", "p"});
      p.kind = kind;
      p.p = get_number(require(j, "p", path), path + ".p");
      break;
    case PotentialKind::gaussian:
      reject_unknown(j, path, {"kind", "mu", "sigma2"});
      p.kind = kind;
      p.mu = get_number(require(j, "mu", path), path + ".mu");
      p.sigma2 = get_number(require(j, "sigma2", path), path + ".sigma2");
      break;
    case PotentialKind::custom:
      reject_unknown(j, path, {"kind", "edges", "weights"});
      p.kind = kind;
      p.edges = get_number_list(require(j, "edges", path), path + ".edges");
      p.weights = get_number_list(require(j, "weights", path), path + ".weights");
      break;
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

/// Defaults of the `analysis` section per kind; any key not listed is rejected.
inline json analysis_defaults(Kind k) {
  switch (k) {
    case Kind::spectrum: return {{"vectors", false}};
    case Kind::dos: return {{"halfwidth", 0.05}, {"tau", 100.0}, {"n_sigma", 3.0}};
    case Kind::wegner:
    case Kind::minami:
      return {{"window_center", json(nullptr)}, {"window_width", json(nullptr)}, {"window_count", 20},
              {"slack", 0.1}};
    case Kind::poisson:
      return {{"a", 50.0},
              {"n_hat", 0.0},
              {"rectangles", json::array({json::array({-2.0, 2.0})})},
              {"space_bins", 10},
              {"energy_bins", 5},
              {"alpha", 0.01},
              {"dispersion_tolerance", 0.15},
              {"block_side", 0},
              {"apriori", json(nullptr)}};
    case Kind::regularity: return {{"gamma", 0.5}, {"energies", json(nullptr)}, {"p_exponent", 1.0}};
    case Kind::decompose:
    case Kind::decay:
      return {{"a", 2.0},
              {"pilot_samples", 20},
              {"pilot_radius", 0.5},
              {"decoupled_samples", 10},
              {"distance_fraction", 0.95},
              {"decay_fraction", 0.95},
              {"null_array_t", json::array({1, 2, 3, 5})}};
  }
  return json::object();
}

inline json apriori_defaults() {
  return {{"interval", json(nullptr)}, {"sigma", 0.0}, {"tau", 1.0}, {"C_R", 2.0}, {"R", 2.0}, {"C_W", json(nullptr)},
          {"required_fraction", 0.99}};
}

inline json merge_defaults(const json& given, const json& defaults, const std::string& path) {
  if (!given.is_object()) throw ConfigError(path, "expected an object");
  json out = defaults;
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) throw ConfigError(path + "." + it.key(), "unknown field");
    const auto& d = defaults.at(it.key());
    const auto& v = it.value();
    const std::string p = path + "." + it.key();
    if (d.is_number() && !v.is_number()) throw ConfigError(p, "expected a number");
    if (d.is_number_integer() && !v.is_number_integer()) throw ConfigError(p, "expected an integer");
    if (d.is_boolean() && !v.is_boolean()) throw ConfigError(p, "expected a boolean");
    if (d.is_array() && !v.is_array()) throw ConfigError(p, "expected an array");
    out[it.key()] = v;
  }
  return out;
}

inline void validate_analysis(const ExperimentConfig& c) {
  const auto& a = c.analysis;
  auto positive = [&](const char* key) {
    if (!(a.at(key).get<double>() > 0)) throw ConfigError(std::string("analysis.") + key, "must be positive");
  };
  switch (c.kind) {
    case Kind::dos: positive("halfwidth"); positive("tau"); positive("n_sigma"); break;
    case Kind::wegner:
    case Kind::minami:
      if (!a["window_center"].is_null() && !a["window_center"].is_number()) {
        throw ConfigError("analysis.window_center", "expected a number");
      }
      if (!a["window_width"].is_null() && !(a["window_width"].is_number() && a["window_width"].get<double>() > 0)) {
        throw ConfigError("analysis.window_width", "must be a positive number");
      }
      if (a["window_count"].get<long long>() < 1) throw ConfigError("analysis.window_count", "must be >= 1");
      break;
    case Kind::poisson: {
      positive("a");
      const double A = a["a"].get<double>();
      const auto& rects = a["rectangles"];
      for (std::size_t i = 0; i < rects.size(); ++i) {
        const std::string p = "analysis.rectangles[" + std::to_string(i) + "]";
        const auto r = get_number_list(rects[i], p);
        if (r.size() != 2 && r.size() != 2 + 2 * static_cast<std::size_t>(c.model.dim)) {
          throw ConfigError(p, "expected [e_lo, e_hi] or [e_lo, e_hi, u_lo..., u_hi...]");
        }
        if (!(r[0] < r[1]) || r[0] < -A || r[1] > A) throw ConfigError(p, "energy range must lie in [-a, a)");
      }
      if (a["space_bins"].get<long long>() < 1) throw ConfigError("analysis.space_bins", "must be >= 1");
      if (a["energy_bins"].get<long long>() < 1) throw ConfigError("analysis.energy_bins", "must be >= 1");
      const auto bs = a["block_side"].get<long long>();
      if (bs < 0 || bs > c.model.side) throw ConfigError("analysis.block_side", "must lie in [0, L]");
      if (!a["apriori"].is_null()) {
        const auto ap = merge_defaults(a["apriori"], apriori_defaults(), "analysis.apriori");
        if (ap["interval"].is_null()) throw ConfigError("analysis.apriori.interval", "missing required field");
        const auto iv = get_number_list(ap["interval"], "analysis.apriori.interval");
        if (iv.size() != 2 || !(iv[0] < c.E0 && c.E0 < iv[1])) {
          throw ConfigError("analysis.apriori.interval", "expected [lo, hi] with lo < E0 < hi");
        }
        if (!(ap["tau"].get<double>() > 0)) throw ConfigError("analysis.apriori.tau", "must be positive");
      }
      break;
    }
    case Kind::regularity:
      positive("gamma");
      if (!a["energies"].is_null()) get_number_list(a["energies"], "analysis.energies");
      if (c.model.side % 2 == 0) throw ConfigError("model.L", "regularity boxes need an odd side");
      break;
    case Kind::decompose:
    case Kind::decay:
      positive("a");
      positive("pilot_radius");
      if (a["pilot_samples"].get<long long>() < 1) throw ConfigError("analysis.pilot_samples", "must be >= 1");
      if (a["decoupled_samples"].get<long long>() < 0) throw ConfigError("analysis.decoupled_samples", "must be >= 0");
      get_number_list(a["null_array_t"], "analysis.null_array_t");
      break;
    case Kind::spectrum: break;
  }
}

}  // namespace detail

/// Scale sequence L_0 < L_1 < ... of a decomposition run.
inline std::vector<int> schedule_levels(const ScheduleConfig& s, int dim) {
  if (!s.levels.empty()) return s.levels;
  // gamma only enters epsilon; build_schedule needs 0 < gamma' < gamma.
  return build_schedule(dim, s.L0, s.alpha, s.p_exponent, 2.0, 1.0, static_cast<std::size_t>(s.depth)).levels;
}

inline ExperimentConfig parse_config(const json& j, std::optional<Kind> kind_override = std::nullopt) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  detail::reject_unknown(j, "<root>", {"kind", "model", "E0", "schedule", "run", "analysis"});
  ExperimentConfig c;
  if (kind_override) {
    c.kind = *kind_override;
    if (j.contains("kind") && detail::get_string(j["kind"], "kind") != to_string(*kind_override)) {
      throw ConfigError("kind", "config is for '" + j["kind"].get<std::string>() + "', not '" +
                                    to_string(*kind_override) + "'");
    }
  } else {
    c.kind = kind_from_string(detail::get_string(detail::require(j, "kind", "<root>"), "kind"));
  }

  const auto& m = detail::require(j, "model", "<root>");
  if (!m.is_object()) throw ConfigError("model", "expected an object");
  detail::reject_unknown(m, "model", {"d", "L", "lambda", "bc", "potential"});
  const auto d = detail::get_integer(detail::require(m, "d", "model"), "model.d");
  if (d < 1 || d > 3) throw ConfigError("model.d", "must be 1, 2 or 3");
  c.model.dim = static_cast<int>(d);
  c.model.lambda = detail::get_number(detail::require(m, "lambda", "model"), "model.lambda");
  if (!(c.model.lambda >= 0)) throw ConfigError("model.lambda", "must be non-negative");
  const auto bc = detail::get_string(detail::require(m, "bc", "model"), "model.bc");
  try {
    c.model.bc = boundary_from_string(bc);
  } catch (const std::exception& e) {
    throw ConfigError("model.bc", e.what());
  }
  c.model.potential = detail::potential_from_json(detail::require(m, "potential", "model"), "model.potential");
  if (j.contains("E0")) c.E0 = detail::get_number(j["E0"], "E0");

  if (c.uses_schedule()) {
    const auto& s = detail::require(j, "schedule", "<root>");
    if (!s.is_object()) throw ConfigError("schedule", "expected an object");
    detail::reject_unknown(s, "schedule", {"levels", "L0", "alpha", "p", "depth", "gamma", "gamma_prime"});
    auto opt_number = [&](const char* key) -> std::optional<double> {
      if (!s.contains(key)) return std::nullopt;
      if (s[key].is_string() && s[key] == "auto") return std::nullopt;
      const double v = detail::get_number(s[key], std::string("schedule.") + key);
      if (!(v > 0)) throw ConfigError(std::string("schedule.") + key, "must be positive or \"auto\"");
      return v;
    };
    c.schedule.gamma = opt_number("gamma");
    c.schedule.gamma_prime = opt_number("gamma_prime");
    if (c.schedule.gamma && c.schedule.gamma_prime && !(*c.schedule.gamma_prime < *c.schedule.gamma)) {
      throw ConfigError("schedule.gamma_prime", "must be smaller than gamma");
    }
    if (s.contains("levels")) {
      const auto lv = detail::get_number_list(s["levels"], "schedule.levels");
      for (std::size_t i = 0; i < lv.size(); ++i) {
        if (lv[i] != std::floor(lv[i]) || lv[i] < 1) {
          throw ConfigError("schedule.levels[" + std::to_string(i) + "]", "expected a positive integer");
        }
        if (i > 0 && !(lv[i] > 2 * lv[i - 1])) {
          throw ConfigError("schedule.levels[" + std::to_string(i) + "]", "need L_k > 2 L_{k-1}");
        }
        c.schedule.levels.push_back(static_cast<int>(lv[i]));
      }
      if (c.schedule.levels.size() < 3) throw ConfigError("schedule.levels", "need at least three scales");
      if (s.contains("alpha")) c.schedule.alpha = detail::get_number(s["alpha"], "schedule.alpha");
      if (s.contains("p")) c.schedule.p_exponent = detail::get_number(s["p"], "schedule.p");
    } else {
      c.schedule.L0 = static_cast<int>(detail::get_integer(detail::require(s, "L0", "schedule"), "schedule.L0"));
      c.schedule.alpha = detail::get_number(detail::require(s, "alpha", "schedule"), "schedule.alpha");
      c.schedule.p_exponent = detail::get_number(detail::require(s, "p", "schedule"), "schedule.p");
      c.schedule.depth = static_cast<int>(detail::get_integer(detail::require(s, "depth", "schedule"), "schedule.depth"));
      if (c.schedule.depth < 3) throw ConfigError("schedule.depth", "need at least three scales");
      try {
        schedule_levels(c.schedule, c.model.dim);
      } catch (const std::exception& e) {
        throw ConfigError("schedule", e.what());
      }
    }
    if (m.contains("L")) throw ConfigError("model.L", "decomposition runs take their sizes from schedule");
    c.model.side = schedule_levels(c.schedule, c.model.dim).back();
  } else {
    if (j.contains("schedule")) throw ConfigError("schedule", "only used by decompose and decay");
    const auto L = detail::get_integer(detail::require(m, "L", "model"), "model.L");
    if (L < 1) throw ConfigError("model.L", "must be >= 1");
    c.model.side = static_cast<int>(L);
  }

  const json run = j.contains("run") ? j["run"] : json::object();
  if (!run.is_object()) throw ConfigError("run", "expected an object");
  detail::reject_unknown(run, "run", {"n_samples", "seed", "first_index", "workers", "output"});
  if (run.contains("n_samples")) {
    const auto n = detail::get_integer(run["n_samples"], "run.n_samples");
    if (n < 1) throw ConfigError("run.n_samples", "must be >= 1");
    c.n_samples = static_cast<std::size_t>(n);
  }
  if (run.contains("seed")) {
    if (!run["seed"].is_number_unsigned() && !(run["seed"].is_number_integer() && run["seed"].get<long long>() >= 0)) {
      throw ConfigError("run.seed", "expected a non-negative integer");
    }
    c.seed = run["seed"].get<std::uint64_t>();
  }
  if (run.contains("first_index")) {
    const auto f = detail::get_integer(run["first_index"], "run.first_index");
    if (f < 0) throw ConfigError("run.first_index", "must be >= 0");
    c.first_index = static_cast<std::size_t>(f);
  }
  if (run.contains("workers")) {
    const auto w = detail::get_integer(run["workers"], "run.workers");
    if (w < 0) throw ConfigError("run.workers", "must be >= 0");
    c.workers = static_cast<unsigned>(w);
  }
  if (run.contains("output")) c.output = detail::get_string(run["output"], "run.output");

  c.analysis = detail::merge_defaults(j.contains("analysis") ? j["analysis"] : json::object(),
                                      detail::analysis_defaults(c.kind), "analysis");
  if (c.kind == Kind::poisson && !c.analysis["apriori"].is_null()) {
    c.analysis["apriori"] = detail::merge_defaults(c.analysis["apriori"], detail::apriori_defaults(), "analysis.apriori");
  }
  detail::validate_analysis(c);
  return c;
}

inline json emit_config(const ExperimentConfig& c) {
  json model{{"d", c.model.dim},
             {"lambda", c.model.lambda},
             {"bc", to_string(c.model.bc)},
             {"potential", detail::potential_to_json(c.model.potential)}};
  json j{{"kind", to_string(c.kind)}, {"model", model}, {"E0", c.E0}};
  if (c.uses_schedule()) {
    json s = json::object();
    if (!c.schedule.levels.empty()) {
      s["levels"] = c.schedule.levels;
      if (c.schedule.alpha > 0) s["alpha"] = c.schedule.alpha;
      if (c.schedule.p_exponent > 0) s["p"] = c.schedule.p_exponent;
    } else {
      s["L0"] = c.schedule.L0;
      s["alpha"] = c.schedule.alpha;
      s["p"] = c.schedule.p_exponent;
      s["depth"] = c.schedule.depth;
    }
    s["gamma"] = c.schedule.gamma ? json(*c.schedule.gamma) : json("auto");
    s["gamma_prime"] = c.schedule.gamma_prime ? json(*c.schedule.gamma_prime) : json("auto");
    j["schedule"] = s;
  } else {
    j["model"]["L"] = c.model.side;
  }
  j["run"] = {{"n_samples", c.n_samples},
              {"seed", c.seed},
              {"first_index", c.first_index},
              {"workers", c.workers},
              {"output", c.output}};
  j["analysis"] = c.analysis;
  return j;
}

/// FNV-1a of the canonical config without the fields that do not change
/// any payload (sample range, workers, output path).
inline std::string config_hash(const ExperimentConfig& c) {
  json j = emit_config(c);
  j["run"].erase("n_samples");
  j["run"].erase("first_index");
  j["run"].erase("workers");
  j["run"].erase("output");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline ExperimentConfig load_config(const std::string& path, std::optional<Kind> kind = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, kind);
}

}  // namespace anderson::harness
