// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "anderson/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace anderson::harness;

namespace {

const fs::path runs_dir = fs::current_path() / "acceptance_runs";

json load(const std::string& name) {
  std::ifstream in(fs::path(ANDERSON_SOURCE_DIR) / "configs" / name);
  return json::parse(in);
}

struct Timed {
  RunResult result;
  double seconds = 0.0;
  fs::path dir;
};

Timed execute(json j, const std::string& tag, unsigned workers) {
  Timed t;
  t.dir = runs_dir / tag;
  fs::remove_all(t.dir);
  j["run"]["output"] = t.dir.string();
  j["run"]["workers"] = workers;
  const auto start = std::chrono::steady_clock::now();
  t.result = run(parse_config(j));
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

std::vector<json> sorted_payloads(const fs::path& dir) {
  std::vector<json> out;
  for (const auto& r : read_records((dir / "records.jsonl").string()).records) {
    out.push_back(json{{"index", r.index}, {"payload", r.payload}});
  }
  return out;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Line {
  bool pass = false;
  std::string text;
};

}  // namespace

int main() {
  fs::create_directories(runs_dir);
  std::vector<Line> lines(11);
  auto clock = [] { return std::chrono::steady_clock::now(); };
  auto since = [](auto t0) { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  // 1: free path and ring spectra against the closed forms.
  std::vector<std::pair<std::string, json>> spectrum_configs;
  for (const std::string bc : {"dirichlet", "periodic"}) {
    for (int L : {3, 50, 500, 2000}) {
      auto j = load("spectrum_free_path.json");
      j["model"]["L"] = L;
      j["model"]["bc"] = bc;
      spectrum_configs.emplace_back("spectrum_" + bc + "_" + std::to_string(L), j);
    }
  }
  {
    const auto t0 = clock();
    double worst = 0.0;
    for (const auto& [tag, j] : spectrum_configs) {
      const auto r = execute(j, tag + "_w1", 1);
      const int L = j["model"]["L"].get<int>();
      std::vector<double> exact;
      for (int k = 0; k < L; ++k) {
        exact.push_back(j["model"]["bc"] == "dirichlet" ? 2.0 * std::cos(std::numbers::pi * (k + 1) / (L + 1))
                                                          : 2.0 * std::cos(2.0 * std::numbers::pi * k / L));
      }
      std::sort(exact.begin(), exact.end());
      const auto got = r.result.report["results"]["eigenvalues"].get<std::vector<double>>();
      if (got.size() != exact.size()) {
        worst = INFINITY;
        continue;
      }
      for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got[k] - exact[k]));
    }
    const double secs = since(t0);
    lines[1] = {worst <= 1e-10 && secs < 10.0,
                fmt("eigensolver oracle, path and ring, L in {3,50,500,2000}: max |error| %.2e (tol 1e-10), "
                    "%.1f s (limit 10 s)",
                    worst, secs)};
  }

  // 2: free ring DOS at E0 = 0.
  {
    const auto j = load("dos_free_ring.json");
    const auto r = execute(j, "dos_free_ring", 1);
    const auto& res = r.result.report["results"];
    const double target = 1.0 / (2.0 * std::numbers::pi);
    const double hist = res["histogram"]["n_hat"].get<double>();
    const double rel = std::abs(hist - target) / target;
    const int L = j["model"]["L"].get<int>();
    const double hw = j["analysis"]["halfwidth"].get<double>();
    std::size_t exact_count = 0;
    for (int k = 0; k < L; ++k) {
      const double e = 2.0 * std::cos(2.0 * std::numbers::pi * k / L);
      exact_count += e >= -hw && e < hw;
    }
    const double exact_dos = static_cast<double>(exact_count) / (L * 2.0 * hw);
    const bool agree = r.result.report["checks"]["estimators_agree"].get<bool>();
    lines[2] = {rel <= 0.02 && std::abs(hist - exact_dos) <= 1e-12 && agree && r.seconds < 30.0,
                fmt("free DOS, ring L=4096: histogram %.5f vs 1/(2pi) %.5f (rel %.2f%%, tol 2%%), circulant count "
                    "%.5f, Cauchy %.5f (|z| %.2f, tol 3), %.1f s (limit 30 s)",
                    hist, target, 100.0 * rel, exact_dos, res["cauchy"]["n_hat"].get<double>(),
                    std::abs(res["agreement"]["z"].get<double>()), r.seconds)};
  }

  // 3: Wegner ratios.
  {
    const auto r = execute(load("wegner_mid.json"), "wegner_mid", 1);
    const auto& res = r.result.report["results"];
    double worst = 0.0;
    for (const auto& w : res["windows"]) worst = std::max(worst, w["ratio"].get<double>());
    const bool ok = r.result.report["checks"]["ratios_within_bound"].get<bool>();
    lines[3] = {ok && worst <= 1.1 && r.seconds < 300.0,
                fmt("Wegner, lambda=1, L=200, 2000 samples, 20 windows: max ratio %.4f (limit 1.1), %.1f s "
                    "(limit 300 s)",
                    worst, r.seconds)};
  }

  // 5, 6, 9: Poisson suite, block sums and the a-priori tail bound on one run.
  const auto poisson = execute(load("poisson_lambda5.json"), "poisson_lambda5_w1", 1);
  const auto control = execute(load("poisson_free_control.json"), "poisson_free_control", 1);
  {
    const auto& res = poisson.result.report["results"];
    const auto& c0 = res["counting"][0];
    const bool gaps_ok = !res["gaps"]["rejected"].get<bool>();
    const double disp = c0["dispersion"].get<double>();
    const bool disp_ok = std::abs(disp - 1.0) <= 0.15;
    const bool unif_ok = !res["uniformity"]["rejected"].get<bool>();
    const auto& cc = control.result.report["results"]["counting"][0];
    const double cdisp = cc["dispersion"].is_null() ? NAN : cc["dispersion"].get<double>();
    const double cse = cc["dispersion_se"].is_null() ? 0.0 : cc["dispersion_se"].get<double>();
    const bool control_ok = std::isfinite(cdisp) && std::abs(cdisp - 1.0) - 0.15 > 3.0 * cse;
    const double secs = poisson.seconds + control.seconds;
    lines[5] = {gaps_ok && disp_ok && unif_ok && control_ok && secs < 900.0,
                fmt("Poisson, lambda=5, ring L=1000, 500 samples: gap KS p=%.3f (reject < 0.01), var/mean %.3f "
                    "(tol |.-1| <= 0.15), uniformity p=%.3f (reject < 0.01), lambda=0 control var/mean %.3f "
                    "(se %.3f, must exceed tolerance by 3 se), %.1f s (limit 900 s)",
                    res["gaps"]["p_value"].get<double>(), disp, res["uniformity"]["p_value"].get<double>(), cdisp,
                    cse, secs)};

    const auto& b = res["blocks"][0];
    const double two = b["at_least_two"]["mean"].get<double>();
    const double one = b["at_least_one"]["mean"].get<double>();
    lines[6] = {b["multi_ok"].get<bool>() && two <= 0.05 && b["single_ok"].get<bool>(),
                fmt("block sums, side 100: sum_p P(eta_p>=2) %.4f (limit 0.05), sum_p P(eta_p>=1) %.4f vs "
                    "n_hat|A| %.4f (z %.2f, limit 3)",
                    two, one, b["target"].get<double>(), b["z"].get<double>())};

    const auto& ap = res["apriori"];
    lines[9] = {ap["accepted"].get<bool>() && poisson.seconds < 300.0,
                fmt("a-priori tail bound, g=f_i, I=(-4.5,4.5), 500 samples: mean xi %.4f (se %.4f) vs bound %.4f "
                    "at 99%% one-sided, out-of-I part within C_R/(r^2|L|) in %.1f%% (need 99%%), pointwise %.1f%%, "
                    "%.1f s (limit 300 s)",
                    ap["mean"]["mean"].get<double>(), ap["mean"]["se"].get<double>(), ap["rhs"].get<double>(),
                    100.0 * ap["outside_fraction"].get<double>(), 100.0 * ap["pointwise_fraction"].get<double>(), poisson.seconds)};
  }

  // 7, 8 and the B-term part of 4: decomposition levels (8,23,110) and (23,110,1154).
  const auto dec = execute(load("decompose_lambda5.json"), "decompose_lambda5", 1);
  const auto& dres = dec.result.report["results"];
  const auto& dchecks = dec.result.report["checks"];
  {
    bool perfect = true, within = true;
    std::string detail;
    for (const auto& lv : dres["levels"]) {
      const std::string tag = "k" + std::to_string(lv["k"].get<int>()) + "_";
      perfect = perfect && dchecks[tag + "decoupled_perfect"].get<bool>();
      within = within && dchecks[tag + "distance_fraction"].get<bool>();
      detail += fmt(" k=%d: within %.3f of %zu pairs (bound %.3g), decoupled %d/%d, discrepancy %.4f (se %.4f);",
                    lv["k"].get<int>(), lv["matching"]["fraction_within"].get<double>(),
                    lv["matching"]["pairs"].get<std::size_t>(), lv["matching"]["distance_bound"].get<double>(),
                    lv["decoupled"]["perfect"].get<int>(), lv["decoupled"]["n"].get<int>(),
                    lv["matching"]["discrepancy"]["mean"].get<double>(),
                    lv["matching"]["discrepancy"]["se"].is_null() ? 0.0
                                                                  : lv["matching"]["discrepancy"]["se"].get<double>());
    }
    const bool decreasing = dres["discrepancy_decreasing"].get<bool>();
    lines[7] = {perfect && within && decreasing && dec.seconds < 1200.0,
                fmt("decomposition matching, lambda=5, scales (8,23,110,1154), 500 samples, gamma'=%.4f:",
                    dres["gamma_prime"].get<double>()) +
                    detail +
                    fmt(" decreasing %s, %.1f s (limit 1200 s)", decreasing ? "yes" : "no", dec.seconds)};

    bool decay = true, structural = true, gram = true;
    detail.clear();
    for (const auto& lv : dres["levels"]) {
      const std::string tag = "k" + std::to_string(lv["k"].get<int>()) + "_";
      decay = decay && dchecks[tag + "decay_D"].get<bool>();
      structural = structural && lv["quasimode"]["structural_fraction"].get<double>() == 1.0;
      gram = gram && lv["quasimode"]["gram_positive_fraction"].get<double>() == 1.0;
      detail += fmt(" k=%d: D-mass <= %.3g in %.1f%% of %zu, quasimode identity %.1f%% of %zu, Gram positive "
                    "%.1f%% of %zu blocks;",
                    lv["k"].get<int>(), lv["decay"]["D"]["threshold"].get<double>(),
                    100.0 * lv["decay"]["D"]["pass_fraction"]["estimate"].get<double>(),
                    lv["decay"]["D"]["n"].get<std::size_t>(),
                    100.0 * lv["quasimode"]["structural_fraction"].get<double>(), lv["quasimode"]["n"].get<std::size_t>(),
                    100.0 * lv["quasimode"]["gram_positive_fraction"].get<double>(),
                    lv["quasimode"]["multi_blocks"].get<std::size_t>());
    }
    lines[8] = {decay && structural && gram && dec.seconds < 600.0,
                fmt("eigenfunction localization, gamma_fit=%.4f:", dres["gamma_fit"].get<double>()) + detail +
                    fmt(" %.1f s (limit 600 s)", dec.seconds)};
  }

  // 4: Minami ratios and the B-term of the block decomposition.
  {
    const auto r = execute(load("minami_mid.json"), "minami_mid", 1);
    const auto& res = r.result.report["results"];
    double worst = 0.0;
    for (const auto& w : res["windows"]) worst = std::max(worst, w["ratio"].get<double>());
    bool b_ok = true;
    std::string detail;
    for (const auto& lv : dres["levels"]) {
      const std::string tag = "k" + std::to_string(lv["k"].get<int>()) + "_";
      const auto& mv = lv["minami_variant"];
      const double B = mv["B"]["mean"].get<double>();
      b_ok = b_ok && dchecks[tag + "minami_b_mechanism"].get<bool>() && B <= mv["minami_bound"].get<double>();
      detail += fmt(" k=%d: B %.4f <= 2||f|| sum E[N(N-1)] %.3f, Minami-normalized %.3g;", lv["k"].get<int>(), B,
                    mv["mechanism_bound"].get<double>(), mv["minami_bound"].get<double>());
    }
    const bool bounded = r.result.report["checks"]["ratios_bounded"].get<bool>();
    lines[4] = {bounded && b_ok && r.seconds < 300.0,
                fmt("Minami, lambda=1, L=200, 2000 samples: max ratio %.4f vs C_M %.4f (+3 se),",
                    worst, res["bound"].get<double>()) +
                    detail + fmt(" %.1f s (limit 300 s)", r.seconds)};
  }

  // 10: worker count does not change records.
  {
    const auto t0 = clock();
    bool same = true;
    for (const auto& [tag, j] : spectrum_configs) {
      execute(j, tag + "_w8", 8);
      same = same && sorted_payloads(runs_dir / (tag + "_w1")) == sorted_payloads(runs_dir / (tag + "_w8"));
    }
    const auto p8 = execute(load("poisson_lambda5.json"), "poisson_lambda5_w8", 8);
    const auto a = sorted_payloads(poisson.dir), b = sorted_payloads(p8.dir);
    const bool poisson_same = a == b && a.size() == 500;
    const double secs = since(t0);
    lines[10] = {same && poisson_same,
                 fmt("reproducibility, workers 1 vs 8: spectrum configs %s, Poisson config %s (%zu records), %.1f s",
                     same ? "identical" : "DIFFER", poisson_same ? "identical" : "DIFFER", a.size(), secs)};
  }

  bool all = true;
  for (int i = 1; i <= 10; ++i) {
    std::cout << "AC" << i << (lines[i].pass ? " PASS " : " FAIL ") << lines[i].text << '\n';
    all = all && lines[i].pass;
  }
  return all ? 0 : 1;
}
