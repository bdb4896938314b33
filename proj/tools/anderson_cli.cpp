// anderson: run Monte Carlo experiments on the Anderson model.

#include "CLI11.hpp"
#include "json.hpp"

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anderson/harness/config.hpp"
#include "anderson/harness/runner.hpp"

namespace {

using anderson::harness::json;

struct Overrides {
  std::string config;
  std::optional<int> d, L;
  std::optional<double> lambda, E0;
  std::optional<std::string> bc, potential;
  std::optional<std::vector<int>> levels;
  std::optional<long long> n_samples, first_index, workers;
  std::optional<unsigned long long> seed;
  std::optional<std::string> output;
  std::vector<std::string> set;
};

/// "uniform:a,b", "bernoulli:p", "gaussian:mu,sigma2" or a JSON object.
json parse_potential(const std::string& s) {
  if (!s.empty() && s.front() == '{') return json::parse(s);
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  std::vector<double> v;
  if (colon != std::string::npos) {
    std::stringstream ss(s.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  }
  auto need = [&](std::size_t n) {
    if (v.size() != n) throw anderson::harness::ConfigError("model.potential", "'" + s + "' has the wrong arity");
  };
  if (kind == "uniform") {
    need(2);
    return {{"kind", kind}, {"a", v[0]}, {"b", v[1]}};
  }
  if (kind == "bernoulli") {
    need(1);
    return {{"kind", kind}, {"p", v[0]}};
  }
  if (kind == "gaussian") {
    need(2);
    return {{"kind", kind}, {"mu", v[0]}, {"sigma2", v[1]}};
  }
  throw anderson::harness::ConfigError("model.potential", "unknown shorthand '" + s + "'");
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw anderson::harness::ConfigError(path, "cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw anderson::harness::ConfigError(path, std::string("malformed JSON: ") + e.what());
  }
}

/// analysis.key.sub=VALUE with VALUE parsed as JSON, or kept as a string.
void apply_set(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw anderson::harness::ConfigError(assignment, "expected key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) (*node)[parts[i]] = json::object();
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = value;
}

json build_config(const std::string& kind, const Overrides& o) {
  json j = o.config.empty() ? json::object() : load_json(o.config);
  if (!j.contains("kind")) j["kind"] = kind;
  auto& m = j["model"];
  if (!m.is_object()) m = json::object();
  if (o.d) m["d"] = *o.d;
  if (o.L) m["L"] = *o.L;
  if (o.lambda) m["lambda"] = *o.lambda;
  if (o.bc) m["bc"] = *o.bc;
  if (o.potential) m["potential"] = parse_potential(*o.potential);
  if (o.E0) j["E0"] = *o.E0;
  if (o.levels) j["schedule"]["levels"] = *o.levels;
  if (o.n_samples) j["run"]["n_samples"] = *o.n_samples;
  if (o.first_index) j["run"]["first_index"] = *o.first_index;
  if (o.workers) j["run"]["workers"] = *o.workers;
  if (o.seed) j["run"]["seed"] = *o.seed;
  if (o.output) j["run"]["output"] = *o.output;
  for (const auto& s : o.set) apply_set(j, s);
  return j;
}

void add_run_options(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--d", o.d, "lattice dimension");
  sub->add_option("-L,--L", o.L, "box side");
  sub->add_option("--lambda", o.lambda, "disorder strength");
  sub->add_option("--bc", o.bc, "boundary condition: dirichlet | periodic");
  sub->add_option("--potential", o.potential, "uniform:a,b | bernoulli:p | gaussian:mu,sigma2 | JSON object");
  sub->add_option("--E0", o.E0, "reference energy");
  sub->add_option("--levels", o.levels, "explicit scale sequence")->delimiter(',');
  sub->add_option("-n,--n-samples", o.n_samples, "number of realizations");
  sub->add_option("--first-index", o.first_index, "first realization index");
  sub->add_option("-s,--seed", o.seed, "master seed");
  sub->add_option("-w,--workers", o.workers, "worker threads (0: ANDERSON_WORKERS or hardware)");
  sub->add_option("-o,--output", o.output, "output directory");
  sub->add_option("--set", o.set, "override any field, e.g. analysis.a=25");
}

void print_summary(const anderson::harness::RunResult& r, const std::string& dir) {
  const auto& rep = r.report;
  std::cout << "kind " << rep["kind"].get<std::string>() << ", " << rep["n_records"] << " records, "
            << rep["n_skipped"] << " skipped, hash " << rep["config_hash"].get<std::string>() << '\n';
  for (auto it = rep["checks"].begin(); it != rep["checks"].end(); ++it) {
    std::cout << "  " << (it.value().get<bool>() ? "ok      " : "REJECTED") << ' ' << it.key() << '\n';
  }
  std::cout << "report: " << dir << "/report.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  namespace h = anderson::harness;
  CLI::App app{"Anderson model experiments"};
  app.set_version_flag("--version", ANDERSON_VERSION);
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::pair<CLI::App*, std::string>> runs;
  for (const auto& k : h::kind_names()) {
    auto* sub = app.add_subcommand(k, "run a " + k + " experiment");
    add_run_options(sub, o);
    runs.emplace_back(sub, k);
  }

  std::vector<std::string> merge_inputs;
  std::string merge_output = "merged";
  auto* merge = app.add_subcommand("merge", "merge record files with one config hash");
  merge->add_option("inputs", merge_inputs, "records.jsonl files")->required()->check(CLI::ExistingFile);
  merge->add_option("-o,--output", merge_output, "output directory");

  std::string report_input, report_output;
  auto* report = app.add_subcommand("report", "recompute the report from a record file");
  report->add_option("records", report_input, "records.jsonl file")->required()->check(CLI::ExistingFile);
  report->add_option("-o,--output", report_output, "output directory (default: next to the records)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (merge->parsed()) {
      const auto r = h::merge(merge_inputs, merge_output);
      print_summary(r, merge_output);
      return r.exit_code;
    }
    if (report->parsed()) {
      const auto set = h::read_records(report_input);
      if (report_output.empty()) {
        report_output = std::filesystem::path(report_input).parent_path().string();
        if (report_output.empty()) report_output = ".";
      }
      const auto r = h::report_from_records(set, report_output);
      print_summary(r, report_output);
      return r.exit_code;
    }
    for (const auto& [sub, kind] : runs) {
      if (!sub->parsed()) continue;
      const auto cfg = h::parse_config(build_config(kind, o), h::kind_from_string(kind));
      const auto r = h::run(cfg, &std::cerr);
      if (kind == "spectrum") {
        std::cout << "eigenvalues (realization " << cfg.first_index << "): "
                  << r.report["results"]["eigenvalues"].dump() << '\n';
      }
      print_summary(r, cfg.output);
      return r.exit_code;
    }
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return h::exit_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return h::exit_error;
  }
  return h::exit_error;
}
