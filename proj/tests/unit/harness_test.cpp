#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "anderson/harness/config.hpp"
#include "anderson/harness/records.hpp"
#include "anderson/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace anderson::harness;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("anderson_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json spectrum_json() {
  return json::parse(R"({"kind":"spectrum","model":{"d":1,"L":3,"lambda":0,"bc":"dirichlet",
                         "potential":{"kind":"uniform","a":0,"b":1}}})");
}

json poisson_json(const fs::path& out, int workers) {
  auto j = json::parse(R"({"kind":"poisson","model":{"d":1,"L":200,"lambda":5,"bc":"periodic",
                           "potential":{"kind":"uniform","a":-0.5,"b":0.5}},
                           "run":{"n_samples":12,"seed":17},
                           "analysis":{"a":10,"block_side":50,"apriori":{"interval":[-4.5,4.5]}}})");
  j["run"]["workers"] = workers;
  j["run"]["output"] = out.string();
  return j;
}

json wegner_json(const fs::path& out, std::size_t first, std::size_t n) {
  auto j = json::parse(R"({"kind":"wegner","model":{"d":1,"L":40,"lambda":1,"bc":"dirichlet",
                           "potential":{"kind":"uniform","a":0,"b":1}},"E0":0.5,
                           "run":{"seed":5,"workers":1},"analysis":{"window_count":4}})");
  j["run"]["first_index"] = first;
  j["run"]["n_samples"] = n;
  j["run"]["output"] = out.string();
  return j;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> payloads(const fs::path& records) {
  std::vector<json> out;
  for (const auto& r : read_records(records.string()).records) out.push_back(json{{"i", r.index}, {"p", r.payload}});
  return out;
}

}  // namespace

TEST(Config, EmitParseRoundTrip) {
  const std::vector<std::string> configs = {
      spectrum_json().dump(),
      poisson_json("x", 2).dump(),
      R"({"kind":"decompose","model":{"d":1,"lambda":5,"bc":"periodic",
          "potential":{"kind":"gaussian","mu":0,"sigma2":1}},"schedule":{"levels":[8,23,110],"gamma":0.4}})",
      R"({"kind":"decay","model":{"d":2,"lambda":3,"bc":"dirichlet","potential":{"kind":"bernoulli","p":0.3}},
          "schedule":{"L0":4,"alpha":1.2,"p":10,"depth":3}})",
      R"({"kind":"regularity","model":{"d":1,"L":9,"lambda":5,"bc":"dirichlet",
          "potential":{"kind":"custom","edges":[0,0.5,1],"weights":[1,3]}},"analysis":{"energies":[0,0.5]}})"};
  for (const auto& text : configs) {
    const auto c = parse_config(json::parse(text));
    const auto once = emit_config(c);
    EXPECT_EQ(emit_config(parse_config(once)), once) << text;
    EXPECT_EQ(config_hash(parse_config(once)), config_hash(c));
  }
}

TEST(Config, ErrorsNameTheField) {
  auto expect_path = [](json j, const std::string& path) {
    try {
      parse_config(j);
      ADD_FAILURE() << "accepted invalid config, expected error at " << path;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.path, path) << e.what();
    }
  };
  auto j = spectrum_json();
  j["model"].erase("lambda");
  expect_path(j, "model.lambda");
  j = spectrum_json();
  j["model"]["lambda"] = -1;
  expect_path(j, "model.lambda");
  j = spectrum_json();
  j["model"]["Lx"] = 3;
  expect_path(j, "model.Lx");
  j = spectrum_json();
  j["analysis"] = {{"vectorz", true}};
  expect_path(j, "analysis.vectorz");
  j = spectrum_json();
  j["kind"] = "spectra";
  expect_path(j, "kind");
  j = spectrum_json();
  j["model"]["potential"] = {{"kind", "uniform"}, {"a", 1}, {"b", 0}};
  expect_path(j, "model.potential");
  j = json::parse(R"({"kind":"decompose","model":{"d":1,"lambda":5,"bc":"periodic",
      "potential":{"kind":"uniform","a":0,"b":1}},"schedule":{"levels":[8,12,110]}})");
  expect_path(j, "schedule.levels[1]");
}

TEST(Config, HashIgnoresSampleRangeAndWorkers) {
  auto a = poisson_json("out_a", 1);
  auto b = poisson_json("out_b", 8);
  b["run"]["n_samples"] = 99;
  b["run"]["first_index"] = 7;
  EXPECT_EQ(config_hash(parse_config(a)), config_hash(parse_config(b)));
  b["run"]["seed"] = 18;
  EXPECT_NE(config_hash(parse_config(a)), config_hash(parse_config(b)));
}

TEST(Records, PartialTailIsTruncated) {
  const auto dir = scratch("truncate");
  const auto path = (dir / "records.jsonl").string();
  RecordSet set{spectrum_json(), "abc", {}};
  for (std::size_t i = 0; i < 3; ++i) set.records.push_back({i, json{{"x", i}}, 1.0, "t"});
  write_records(path, set);
  const auto full = fs::file_size(path);
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"type":"record","index":3,"payload":{"x":)";
  }
  const auto ignored = read_records(path, false);
  EXPECT_EQ(ignored.records.size(), 3u);
  EXPECT_GT(fs::file_size(path), full);
  const auto cut = read_records(path, true);
  EXPECT_EQ(cut.records.size(), 3u);
  EXPECT_EQ(fs::file_size(path), full);
  {
    std::ofstream out(path, std::ios::app);
    out << json{{"type", "record"}, {"index", 3}, {"payload", 1}}.dump() << '\n';
  }
  EXPECT_EQ(read_records(path, true).records.size(), 3u) << "a record without the end marker is partial";
  EXPECT_EQ(fs::file_size(path), full);
}

TEST(Records, MergeUnionAndCollisions) {
  auto part = [](std::size_t lo, std::size_t hi, const std::string& hash) {
    RecordSet s{json::object(), hash, {}};
    for (std::size_t i = lo; i < hi; ++i) s.records.push_back({i, json{{"v", i}}, 0.0, "t"});
    return s;
  };
  const auto m = merge_records({part(100, 200, "h"), part(0, 100, "h")});
  ASSERT_EQ(m.records.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(m.records[i].index, i);
  EXPECT_THROW(merge_records({part(0, 100, "h"), part(99, 150, "h")}), RecordError);
  EXPECT_THROW(merge_records({part(0, 100, "h"), part(100, 150, "g")}), RecordError);
}

TEST(Run, SpectrumExample) {
  auto j = spectrum_json();
  j["run"] = {{"output", scratch("spectrum").string()}};
  const auto r = run(parse_config(j));
  EXPECT_EQ(r.exit_code, exit_ok);
  const auto ev = r.report["results"]["eigenvalues"].get<std::vector<double>>();
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_NEAR(ev[0], -std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(ev[1], 0.0, 1e-12);
  EXPECT_NEAR(ev[2], std::sqrt(2.0), 1e-12);
}

TEST(Run, WorkerCountDoesNotChangeRecords) {
  const auto d1 = scratch("w1"), d8 = scratch("w8");
  const auto r1 = run(parse_config(poisson_json(d1, 1)));
  const auto r8 = run(parse_config(poisson_json(d8, 8)));
  EXPECT_EQ(payloads(d1 / "records.jsonl"), payloads(d8 / "records.jsonl"));
  EXPECT_EQ(r1.report["results"], r8.report["results"]);
}

TEST(Run, ResumeAfterInterruptedWrite) {
  const auto fresh = scratch("fresh"), resumed = scratch("resumed");
  run(parse_config(wegner_json(fresh, 0, 10)));
  run(parse_config(wegner_json(resumed, 0, 6)));
  {
    std::ofstream out(resumed / "records.jsonl", std::ios::app);
    out << R"({"type":"record","index":6,"pay)";
  }
  const auto r = run(parse_config(wegner_json(resumed, 0, 10)));
  EXPECT_EQ(r.resumed, 6u);
  EXPECT_EQ(r.computed, 4u);
  EXPECT_EQ(payloads(fresh / "records.jsonl"), payloads(resumed / "records.jsonl"));
}

TEST(Run, ResumeRejectsOtherConfig) {
  const auto dir = scratch("other");
  run(parse_config(wegner_json(dir, 0, 2)));
  auto j = wegner_json(dir, 0, 2);
  j["run"]["seed"] = 6;
  EXPECT_THROW(run(parse_config(j)), RecordError);
}

TEST(Run, MergeMatchesSingleRun) {
  const auto a = scratch("shard_a"), b = scratch("shard_b"), single = scratch("single"), merged = scratch("merged");
  run(parse_config(wegner_json(a, 0, 10)));
  run(parse_config(wegner_json(b, 10, 10)));
  const auto s = run(parse_config(wegner_json(single, 0, 20)));
  const auto m = merge({(a / "records.jsonl").string(), (b / "records.jsonl").string()}, merged);
  EXPECT_EQ(m.report["n_records"], 20);
  EXPECT_EQ(m.report["results"], s.report["results"]);
  EXPECT_EQ(payloads(merged / "records.jsonl"), payloads(single / "records.jsonl"));
  EXPECT_THROW(merge({(a / "records.jsonl").string(), (a / "records.jsonl").string()}, scratch("dup")), RecordError);
}

TEST(Cli, SpectrumExampleAndMissingLambda) {
  const auto dir = scratch("cli");
  const std::string cli = ANDERSON_CLI_PATH;
  const std::string ok = cli + " spectrum --d 1 -L 3 --lambda 0 --bc dirichlet --potential uniform:0,1 -o " +
                         (dir / "run").string() + " > " + (dir / "out.txt").string() + " 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(ok.c_str())), 0);
  const auto report = json::parse(read_file(dir / "run" / "report.json"));
  EXPECT_NEAR(report["results"]["eigenvalues"][2].get<double>(), std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(fs::exists(dir / "run" / "summary.csv"));

  const std::string bad = cli + " spectrum --d 1 -L 3 --bc dirichlet --potential uniform:0,1 -o " +
                          (dir / "bad").string() + " > " + (dir / "err.txt").string() + " 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 1);
  EXPECT_NE(read_file(dir / "err.txt").find("model.lambda"), std::string::npos);
}

TEST(Cli, ConfigFileAndExitTwoOnRejection) {
  const auto dir = scratch("cli_reject");
  const auto cfg = dir / "free.json";
  std::ofstream(cfg) << R"({"kind":"poisson","model":{"d":1,"L":400,"lambda":0,"bc":"periodic",
                           "potential":{"kind":"uniform","a":-0.5,"b":0.5}},"E0":0.3,
                           "run":{"n_samples":40},"analysis":{"a":20}})";
  const std::string cmd = std::string(ANDERSON_CLI_PATH) + " poisson -c " + cfg.string() + " -o " +
                          (dir / "run").string() + " > /dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 2);
  const std::string rep = std::string(ANDERSON_CLI_PATH) + " report " + (dir / "run" / "records.jsonl").string() +
                          " -o " + (dir / "again").string() + " > /dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(rep.c_str())), 2);
  EXPECT_EQ(json::parse(read_file(dir / "run" / "report.json"))["results"],
            json::parse(read_file(dir / "again" / "report.json"))["results"]);
}
