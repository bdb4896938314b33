#pragma once

// run(config): realizations in parallel, one record writer, resume from a
// partial record file, then analysis into report.json and summary.csv.

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "anderson/harness/config.hpp"
#include "anderson/harness/experiments.hpp"
#include "anderson/harness/records.hpp"
#include "anderson/parallel.hpp"

namespace anderson::harness {

enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_rejected = 2 };

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path records() const { return dir / "records.jsonl"; }
  std::filesystem::path report() const { return dir / "report.json"; }
  std::filesystem::path summary() const { return dir / "summary.csv"; }
};

struct RunResult {
  int exit_code = exit_ok;
  json report;
  std::size_t computed = 0;  // realizations computed by this call
  std::size_t resumed = 0;   // realizations found on disk
};

inline std::string csv_summary(const Analysis& a) {
  std::ostringstream os;
  os << "section,key,estimate,stderr\n" << std::setprecision(12);
  for (const auto& r : a.rows) os << r.section << ',' << r.key << ',' << r.estimate << ',' << r.std_error << '\n';
  return os.str();
}

inline json build_report(const ExperimentConfig& c, const RecordSet& set, const Analysis& a) {
  json indices = json::array();
  if (!set.records.empty()) indices = {set.records.front().index, set.records.back().index};
  return {{"kind", to_string(c.kind)},
          {"config", emit_config(c)},
          {"config_hash", set.hash},
          {"version", ANDERSON_VERSION},
          {"n_records", set.records.size()},
          {"n_skipped", a.skipped},
          {"index_range", indices},
          {"results", a.results},
          {"checks", a.checks},
          {"hypothesis_ok", a.ok()}};
}

inline void write_outputs(const RunPaths& paths, const json& report, const Analysis& a) {
  std::ofstream(paths.report()) << report.dump(2) << '\n';
  std::ofstream(paths.summary()) << csv_summary(a);
}

/// Analysis of an existing record set, written next to `dir`.
inline RunResult report_from_records(const RecordSet& set, const std::filesystem::path& dir) {
  const auto c = parse_config(set.config);
  if (config_hash(c) != set.hash) throw RecordError("record header hash does not match its config");
  const auto ctx = prepare(c);
  const auto a = analyze(c, ctx, set.records);
  RunResult out;
  out.report = build_report(c, set, a);
  std::filesystem::create_directories(dir);
  write_outputs({dir}, out.report, a);
  out.exit_code = a.ok() ? exit_ok : exit_rejected;
  return out;
}

inline RunResult run(const ExperimentConfig& c, std::ostream* log = nullptr) {
  const RunPaths paths{c.output};
  std::filesystem::create_directories(paths.dir);
  const std::string hash = config_hash(c);
  json canonical = emit_config(c);

  std::set<std::size_t> done;
  bool append = false;
  RunResult out;
  if (std::filesystem::exists(paths.records())) {
    const auto existing = read_records(paths.records().string(), true);
    if (existing.hash != hash) {
      throw RecordError(paths.records().string() + ": written by a different config (hash " + existing.hash +
                        ", this config " + hash + ")");
    }
    for (const auto& r : existing.records) done.insert(r.index);
    append = true;
  }

  const auto ctx = prepare(c);
  std::vector<std::size_t> todo;
  for (std::size_t i = c.first_index; i < c.first_index + c.n_samples; ++i) {
    if (!done.count(i)) todo.push_back(i);
  }
  out.resumed = c.n_samples - todo.size();
  if (log && out.resumed) *log << "resuming: " << out.resumed << " realizations already recorded\n";

  {
    RecordWriter writer(paths.records().string(), canonical, hash, append);
    parallel_for(todo.size(), resolve_workers(c.workers), [&](std::size_t t) {
      const auto start = std::chrono::steady_clock::now();
      Record r;
      r.index = todo[t];
      try {
        r.payload = realize(c, ctx, r.index);
      } catch (const std::exception& e) {
        r.payload = {{"skipped", true}, {"reason", e.what()}};
      }
      r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      writer.write(r);
    });
  }
  out.computed = todo.size();

  auto set = read_records(paths.records().string());
  std::erase_if(set.records, [&](const Record& r) {
    return r.index < c.first_index || r.index >= c.first_index + c.n_samples;
  });
  const auto a = analyze(c, ctx, set.records);
  out.report = build_report(c, set, a);
  write_outputs(paths, out.report, a);
  out.exit_code = a.ok() ? exit_ok : exit_rejected;
  return out;
}

/// Merges record files into `dir`/records.jsonl and reports on the union.
inline RunResult merge(const std::vector<std::string>& inputs, const std::filesystem::path& dir) {
  std::vector<RecordSet> parts;
  for (const auto& p : inputs) parts.push_back(read_records(p));
  const auto merged = merge_records(parts);
  std::filesystem::create_directories(dir);
  write_records((dir / "records.jsonl").string(), merged);
  return report_from_records(merged, dir);
}

}  // namespace anderson::harness
