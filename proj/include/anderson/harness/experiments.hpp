#pragma once

// Per-kind realization payloads and the analyses that turn a record set
// into a report.

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "anderson/green.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/harness/config.hpp"
#include "anderson/harness/records.hpp"
#include "anderson/pointprocess.hpp"
#include "anderson/regularity.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/apriori.hpp"
#include "anderson/stats/decay.hpp"
#include "anderson/stats/decomposition.hpp"
#include "anderson/stats/dos.hpp"
#include "anderson/stats/matching.hpp"
#include "anderson/stats/poisson.hpp"
#include "anderson/stats/quasimode.hpp"
#include "anderson/stats/wegner.hpp"

namespace anderson::harness {

struct CsvRow {
  std::string section;
  std::string key;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct Analysis {
  json results = json::object();
  json checks = json::object();
  std::vector<CsvRow> rows;
  std::size_t skipped = 0;

  bool ok() const {
    for (auto it = checks.begin(); it != checks.end(); ++it) {
      if (!it.value().get<bool>()) return false;
    }
    return true;
  }
};

struct LevelSetup {
  int k = 0;
  int L_km1 = 0, L_k = 0, L_kp1 = 0;
  Decomposition dec;
  stats::Level level;
  std::uint64_t master = 0;
};

/// Everything derived from the config once per run.
struct Context {
  std::vector<Interval> windows;
  std::vector<Rectangle> rectangles;
  std::optional<Decomposition> block_dec;
  std::vector<LevelSetup> levels;
  double gamma_fit = std::numeric_limits<double>::quiet_NaN();
  double gamma_prime = 0.0;
  std::vector<double> energies;
};

namespace detail {

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json estimate(const stats::MeanEstimate& m) {
  return {{"mean", number(m.mean)}, {"se", number(m.std_error)}, {"n", m.n}};
}

inline double se_or_zero(const stats::MeanEstimate& m) { return m.infinite_ci() ? 0.0 : m.std_error; }

inline json proportion(const stats::ProportionInterval& p) {
  return {{"estimate", p.estimate}, {"lo", p.lo}, {"hi", p.hi}};
}

inline ModelSpec with_side(ModelSpec m, int side) {
  m.side = side;
  return m;
}

inline json eigen_entry(double E, std::span<const double> u) {
  json a = json::array({E});
  for (double x : u) a.push_back(x);
  return a;
}

inline stats::LevelEigen read_eigen(const json& a) {
  stats::LevelEigen e;
  e.E = a.at(0).get<double>();
  for (std::size_t i = 1; i < a.size(); ++i) e.u.push_back(a[i].get<double>());
  return e;
}

inline Rectangle read_rectangle(const json& r, int dim) {
  const auto v = r.get<std::vector<double>>();
  if (v.size() == 2) return Rectangle::energy_slab(v[0], v[1], dim);
  Rectangle out{v[0], v[1], {}, {}};
  for (int a = 0; a < dim; ++a) {
    out.u_lo.push_back(v[2 + static_cast<std::size_t>(a)]);
    out.u_hi.push_back(v[2 + static_cast<std::size_t>(dim + a)]);
  }
  return out;
}

inline stats::TailFunction tail_function(const json& ap) {
  return stats::TailFunction::cauchy(ap["sigma"].get<double>(), ap["tau"].get<double>(), ap["C_R"].get<double>(),
                                     ap["R"].get<double>());
}

inline double gamma_prime_of(const ExperimentConfig& c, double gamma_fit) {
  if (c.schedule.gamma_prime) return *c.schedule.gamma_prime;
  if (c.schedule.gamma) return *c.schedule.gamma / 2.0;
  return gamma_fit / 2.0;
}

/// Median amplitude decay rate of eigenfunctions near E0 on pilot boxes.
inline double calibrate_gamma(const ExperimentConfig& c, int side) {
  const auto model = with_side(c.model, side);
  const auto master = stream_seed(c.seed, 0x9e3779b9ULL);
  const auto n = c.analysis["pilot_samples"].get<std::size_t>();
  const double radius = c.analysis["pilot_radius"].get<double>();
  std::vector<double> rates;
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = sample_hamiltonian(model, master, i);
    const auto w = eigen_window(h, c.E0, radius);
    for (std::size_t j = 0; j < w.data.size(); ++j) {
      rates.push_back(stats::decay_rate(w.data.eigenvectors.col(static_cast<Eigen::Index>(j)), h.box(),
                                        w.data.center(j), c.model.bc == BoundaryCondition::periodic));
    }
  }
  return stats::gamma_fit(rates);
}

}  // namespace detail

inline Context prepare(const ExperimentConfig& c) {
  Context ctx;
  const auto& a = c.analysis;
  const double volume = static_cast<double>(c.model.box().size());
  switch (c.kind) {
    case Kind::wegner:
    case Kind::minami: {
      const double center = a["window_center"].is_null() ? c.E0 : a["window_center"].get<double>();
      const double width = a["window_width"].is_null() ? 1.0 / volume : a["window_width"].get<double>();
      ctx.windows = stats::window_grid(center, width, a["window_count"].get<std::size_t>());
      break;
    }
    case Kind::poisson: {
      for (const auto& r : a["rectangles"]) ctx.rectangles.push_back(detail::read_rectangle(r, c.model.dim));
      const int bs = a["block_side"].get<int>();
      if (bs > 0) ctx.block_dec = decompose(c.model.box(), bs, 0);
      break;
    }
    case Kind::regularity:
      ctx.energies = a["energies"].is_null() ? std::vector<double>{c.E0} : a["energies"].get<std::vector<double>>();
      break;
    case Kind::decompose:
    case Kind::decay: {
      const auto L = schedule_levels(c.schedule, c.model.dim);
      if (!c.schedule.gamma_prime && !c.schedule.gamma) {
        ctx.gamma_fit = detail::calibrate_gamma(c, L[std::min<std::size_t>(2, L.size() - 1)]);
      }
      ctx.gamma_prime = detail::gamma_prime_of(c, ctx.gamma_fit);
      if (!(ctx.gamma_prime > 0)) throw std::runtime_error("decay-rate calibration failed (no usable eigenfunctions)");
      for (std::size_t k = 1; k + 1 < L.size(); ++k) {
        const auto parent = LatticeBox::unit_frame(c.model.dim, L[k + 1]);
        LevelSetup s{static_cast<int>(k), L[k - 1], L[k], L[k + 1], decompose(parent, L[k], L[k - 1]), {},
                     stream_seed(c.seed, k)};
        s.level.E0 = c.E0;
        s.level.a = a["a"].get<double>();
        s.level.epsilon = std::exp(-ctx.gamma_prime * s.L_km1 / 2.0);
        s.level.volume = static_cast<double>(parent.size());
        s.level.block_volume = std::pow(static_cast<double>(s.L_k), c.model.dim);
        ctx.levels.push_back(std::move(s));
      }
      break;
    }
    case Kind::spectrum:
    case Kind::dos: break;
  }
  return ctx;
}

namespace detail {

inline json level_payload(const stats::LevelRealization& r) {
  json blocks = json::array();
  for (const auto& b : r.sample.blocks) {
    json pc = json::array(), bb = json::array();
    for (const auto& x : b.parent_core) pc.push_back(eigen_entry(x.E, x.u));
    for (const auto& x : b.block) bb.push_back(eigen_entry(x.E, x.u));
    blocks.push_back({{"pc", pc}, {"b", bb}, {"ps", b.parent_strip}, {"bs", b.block_strip},
                      {"nS", b.n_shell_S}, {"nT", b.n_shell_T}});
  }
  json qm = json::array();
  for (const auto& q : r.quasimodes) qm.push_back({q.energy, q.residual, q.outside, q.parent_residual});
  json rates = json::array();
  for (double x : r.rates) rates.push_back(number(x));
  return {{"total", r.sample.parent_total}, {"rem", r.sample.parent_remainder}, {"regular", r.sample.regular_proxy},
          {"core_J", r.parent_core_J},     {"strip_J", r.parent_strip_J},      {"in_J", r.parent_in_J},
          {"blocks", blocks},              {"mD", r.mass_D},                   {"mS", r.mass_S},
          {"mT", r.mass_T},                {"rates", rates},                   {"qm", qm},
          {"gram", r.gram_min},            {"claim", r.claim_bound},           {"overlap", r.max_overlap},
          {"eta", r.eta_A}};
}

inline stats::LevelSample read_level_sample(const json& p) {
  stats::LevelSample s;
  s.parent_total = p["total"].get<double>();
  s.parent_remainder = p["rem"].get<double>();
  s.regular_proxy = p["regular"].get<bool>();
  for (const auto& b : p["blocks"]) {
    stats::BlockData d;
    for (const auto& x : b["pc"]) d.parent_core.push_back(read_eigen(x));
    for (const auto& x : b["b"]) d.block.push_back(read_eigen(x));
    d.parent_strip = b["ps"].get<double>();
    d.block_strip = b["bs"].get<double>();
    d.n_shell_S = b["nS"].get<double>();
    d.n_shell_T = b["nT"].get<double>();
    s.blocks.push_back(std::move(d));
  }
  return s;
}

inline TestFunction level_test_function(const stats::Level& lv, int dim) {
  return TestFunction::indicator(Rectangle::energy_slab(-lv.a, lv.a, dim));
}

}  // namespace detail

/// Payload of realization `index`; throws on solver failure.
inline json realize(const ExperimentConfig& c, const Context& ctx, std::size_t index) {
  const auto& a = c.analysis;
  switch (c.kind) {
    case Kind::spectrum: {
      const auto h = sample_hamiltonian(c.model, c.seed, index);
      const bool vectors = a["vectors"].get<bool>();
      const auto s = eigendecompose(h, SolveOptions{vectors, std::numeric_limits<std::size_t>::max()});
      json p{{"eigenvalues", s.eigenvalues}};
      if (vectors) {
        json centers = json::array();
        for (std::size_t j = 0; j < s.size(); ++j) centers.push_back(s.center(j));
        p["centers"] = centers;
      }
      return p;
    }
    case Kind::dos: {
      const auto h = sample_hamiltonian(c.model, c.seed, index);
      const double hw = a["halfwidth"].get<double>();
      double cauchy = std::numeric_limits<double>::quiet_NaN();
      try {
        cauchy = stats::cauchy_dos_value(h, c.E0, a["tau"].get<double>());
      } catch (const SingularEnergyError&) {
      }
      return {{"count", count_in(h, Interval::around(c.E0, hw))}, {"cauchy", detail::number(cauchy)}};
    }
    case Kind::wegner:
    case Kind::minami: {
      const auto h = sample_hamiltonian(c.model, c.seed, index);
      const auto s = eigendecompose(h, SolveOptions{false, std::numeric_limits<std::size_t>::max()});
      std::vector<std::size_t> counts;
      for (const auto& w : ctx.windows) counts.push_back(count_eigenvalues(s, w));
      return {{"counts", counts}};
    }
    case Kind::poisson: {
      const auto h = sample_hamiltonian(c.model, c.seed, index);
      const double V = static_cast<double>(h.size());
      const double A = a["a"].get<double>();
      const auto& box = h.box();
      const auto w = eigen_window(h, c.E0, 2.0 * A / V);
      json atoms = json::array();
      for (std::size_t j = 0; j < w.data.size(); ++j) {
        const double e = V * (w.data.eigenvalues[j] - c.E0);
        if (!(e >= -2.0 * A && e < 2.0 * A)) continue;
        atoms.push_back(detail::eigen_entry(e, anderson::detail::scaled_site(box, box.site(w.data.center(j)))));
      }
      json p{{"atoms", atoms}};
      if (ctx.block_dec) {
        const auto& dec = *ctx.block_dec;
        double reach = 0.0;
        for (const auto& r : ctx.rectangles) reach = std::max({reach, std::abs(r.e_lo), std::abs(r.e_hi)});
        const auto blocks = stats::block_operators(h, dec);
        json counts = json::array();
        std::vector<std::vector<Atom>> block_atoms;
        for (std::size_t q = 0; q < blocks.size(); ++q) {
          const auto bw = eigen_window(blocks[q], c.E0, reach / V * (1.0 + 1e-9));
          std::vector<Atom> at;
          for (std::size_t j = 0; j < bw.data.size(); ++j) {
            at.push_back({V * (bw.data.eigenvalues[j] - c.E0),
                          anderson::detail::scaled_site(box, dec.blocks[q].site(bw.data.center(j))), 1.0});
          }
          block_atoms.push_back(std::move(at));
        }
        for (const auto& r : ctx.rectangles) {
          std::vector<std::size_t> per_block;
          for (const auto& at : block_atoms) {
            per_block.push_back(static_cast<std::size_t>(std::count_if(at.begin(), at.end(), [&](const Atom& x) {
              return r.contains(x);
            })));
          }
          counts.push_back(per_block);
        }
        p["blocks"] = counts;
      }
      if (!a["apriori"].is_null()) {
        const auto& ap = a["apriori"];
        const auto iv = ap["interval"].get<std::vector<double>>();
        const auto s = eigendecompose(h, SolveOptions{false, std::numeric_limits<std::size_t>::max()});
        const auto v = stats::apriori_value(s.eigenvalues, detail::tail_function(ap), c.E0, {iv[0], iv[1]}, V);
        p["xi"] = v.xi;
        p["outside"] = v.outside;
      }
      return p;
    }
    case Kind::regularity: {
      const Point center(static_cast<std::size_t>(c.model.dim), 0);
      const auto box = LatticeBox::centered(center, c.model.side);
      const auto h = assemble(box, sample_potential(c.model.potential, box, c.seed, index), c.model.lambda,
                              BoundaryCondition::dirichlet);
      return {{"verdict", to_string(regularity_over_grid(h, ctx.energies, a["gamma"].get<double>(), center))}};
    }
    case Kind::decompose:
    case Kind::decay: {
      json levels = json::array();
      const auto decoupled_n = a["decoupled_samples"].get<std::size_t>();
      for (const auto& s : ctx.levels) {
        const auto h = sample_hamiltonian(detail::with_side(c.model, s.L_kp1), s.master, index);
        const auto blocks = stats::block_operators(h, s.dec);
        const auto r = stats::realize_level(h, s.dec, s.level, ctx.gamma_prime, blocks);
        json lp = detail::level_payload(r);
        lp["k"] = s.k;
        if (index < decoupled_n) {
          const auto d = stats::realize_level(assemble_decoupled(h, s.dec), s.dec, s.level, ctx.gamma_prime, blocks);
          const auto m = stats::match_level(d.sample, s.level, detail::level_test_function(s.level, c.model.dim), 1.0);
          double worst = 0.0;
          for (double x : m.distances) worst = std::max(worst, x);
          lp["decoupled"] = {{"pairs", m.distances.size()},
                             {"max_distance", worst},
                             {"unmatched_parent", m.unmatched_parent},
                             {"injective", m.injective}};
        }
        levels.push_back(lp);
      }
      return {{"levels", levels}};
    }
  }
  return json::object();
}

namespace detail {

inline std::vector<const json*> usable(const std::vector<Record>& records, std::size_t& skipped) {
  std::vector<const json*> out;
  for (const auto& r : records) {
    if (r.payload.contains("skipped")) {
      ++skipped;
    } else {
      out.push_back(&r.payload);
    }
  }
  return out;
}

inline void analyze_spectrum(const ExperimentConfig&, const std::vector<const json*>& p, Analysis& out) {
  if (p.empty()) throw std::runtime_error("spectrum: no usable realizations");
  const auto first = (*p.front())["eigenvalues"].get<std::vector<double>>();
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* x : p) {
    const auto& ev = (*x)["eigenvalues"];
    if (!ev.empty()) {
      lo = std::min(lo, ev.front().get<double>());
      hi = std::max(hi, ev.back().get<double>());
    }
  }
  out.results = {{"eigenvalues", first}, {"spectrum_min", number(lo)}, {"spectrum_max", number(hi)}};
  for (std::size_t j = 0; j < first.size(); ++j) out.rows.push_back({"eigenvalue", std::to_string(j), first[j], 0.0});
}

inline json dos_json(const stats::DOSEstimate& d) {
  return {{"n_hat", d.n_hat},       {"std_error", d.std_error},     {"binning_error", d.binning_error},
          {"bandwidth", d.bandwidth}, {"n_samples", d.n_samples}, {"n_skipped", d.n_skipped},
          {"method", stats::to_string(d.method)}};
}

inline void analyze_dos(const ExperimentConfig& c, const std::vector<const json*>& p, Analysis& out) {
  std::vector<double> counts, values;
  for (const auto* x : p) {
    counts.push_back((*x)["count"].get<double>());
    values.push_back(read_number((*x)["cauchy"]));
  }
  const double V = static_cast<double>(c.model.box().size());
  const auto& a = c.analysis;
  const auto hist = stats::dos_from_counts(counts, V, c.E0, a["halfwidth"].get<double>());
  const auto cauchy = stats::dos_from_cauchy_values(values, V, c.E0, a["tau"].get<double>());
  const auto agree = stats::compare_dos(hist, cauchy, a["n_sigma"].get<double>());
  out.results = {{"histogram", dos_json(hist)},
                 {"cauchy", dos_json(cauchy)},
                 {"agreement", {{"difference", agree.difference}, {"sigma", agree.sigma}, {"z", number(agree.z)}}}};
  out.checks["estimators_agree"] = agree.agree;
  out.rows.push_back({"dos", "histogram", hist.n_hat, hist.total_error()});
  out.rows.push_back({"dos", "cauchy", cauchy.n_hat, cauchy.total_error()});
  out.skipped += cauchy.n_skipped;
}

inline stats::CountTable count_table(const std::vector<const json*>& p) {
  stats::CountTable t;
  for (const auto* x : p) t.push_back((*x)["counts"].get<std::vector<double>>());
  return t;
}

inline json window_json(const stats::WindowRatio& w) {
  return {{"lo", w.window.lo}, {"hi", w.window.hi}, {"ratio", w.ratio}, {"se", number(w.estimate.std_error)},
          {"ci_hi", number(w.ci_hi)}};
}

inline void analyze_wegner(const ExperimentConfig& c, const Context& ctx, const std::vector<const json*>& p,
                           Analysis& out) {
  const auto r = stats::wegner_from_counts(count_table(p), ctx.windows, static_cast<double>(c.model.box().size()),
                                           stats::wegner_bound(c.model.potential, c.model.lambda));
  json w = json::array();
  bool within = true;
  const double limit = r.bound + c.analysis["slack"].get<double>();
  for (const auto& x : r.windows) {
    w.push_back(window_json(x));
    within = within && x.ratio <= limit;
    out.rows.push_back({"wegner", std::to_string(0.5 * (x.window.lo + x.window.hi)), x.ratio,
                        se_or_zero(x.estimate)});
  }
  out.results = {{"windows", w}, {"C_W_hat", r.C_W_hat}, {"bound", number(r.bound)}, {"limit", number(limit)},
                 {"infinite_ci", r.infinite_ci}, {"n_samples", r.n_samples}};
  out.checks["ratios_within_bound"] = within;
}

inline void analyze_minami(const ExperimentConfig& c, const Context& ctx, const std::vector<const json*>& p,
                           Analysis& out) {
  const auto r = stats::minami_from_counts(count_table(p), ctx.windows, static_cast<double>(c.model.box().size()),
                                           stats::minami_bound(c.model.potential, c.model.lambda));
  json w = json::array();
  bool within = true;
  for (std::size_t i = 0; i < r.windows.size(); ++i) {
    const auto& x = r.windows[i];
    auto wj = window_json(x);
    wj["factorial_moment"] = r.factorial_moment[i];
    w.push_back(wj);
    within = within && std::isfinite(x.ratio) && x.ratio <= r.bound + 3.0 * se_or_zero(x.estimate);
    out.rows.push_back({"minami", std::to_string(0.5 * (x.window.lo + x.window.hi)), x.ratio,
                        se_or_zero(x.estimate)});
  }
  out.results = {{"windows", w}, {"C_M_hat", r.C_M_hat}, {"bound", number(r.bound)}, {"infinite_ci", r.infinite_ci},
                 {"n_samples", r.n_samples}};
  out.checks["ratios_bounded"] = within;
}

inline void analyze_poisson(const ExperimentConfig& c, const Context& ctx, const std::vector<const json*>& p,
                            Analysis& out) {
  const auto& a = c.analysis;
  std::vector<stats::PoissonSample> samples;
  for (const auto* x : p) {
    stats::PoissonSample s;
    for (const auto& e : (*x)["atoms"]) {
      const auto le = read_eigen(e);
      s.atoms.push_back({le.E, le.u, 1.0});
    }
    if (x->contains("blocks")) s.block_counts = (*x)["blocks"].get<std::vector<std::vector<double>>>();
    samples.push_back(std::move(s));
  }
  stats::PoissonOptions opt;
  opt.a = a["a"].get<double>();
  opt.n_hat = a["n_hat"].get<double>();
  opt.rectangles = ctx.rectangles;
  opt.space_bins = a["space_bins"].get<int>();
  opt.energy_bins = a["energy_bins"].get<int>();
  opt.alpha = a["alpha"].get<double>();
  opt.dispersion_tolerance = a["dispersion_tolerance"].get<double>();
  const auto rep = stats::poisson_suite(samples, c.model.dim, opt);
  json counting = json::array();
  for (const auto& x : rep.counting) {
    counting.push_back({{"e_lo", x.rectangle.e_lo},
                        {"e_hi", x.rectangle.e_hi},
                        {"measure", x.rectangle.measure()},
                        {"target_mean", x.target_mean},
                        {"mean", estimate(x.counts)},
                        {"variance", x.variance},
                        {"variance_se", x.variance_se},
                        {"dispersion", x.dispersion},
                        {"dispersion_se", x.dispersion_se},
                        {"dispersion_ok", x.dispersion_ok},
                        {"chi_square", x.chi_square.statistic},
                        {"df", x.chi_square.df},
                        {"p_value", x.chi_square.p_value},
                        {"rejected", x.rejected}});
    out.rows.push_back({"counting_mean", std::to_string(x.rectangle.e_lo) + ":" + std::to_string(x.rectangle.e_hi),
                        x.counts.mean, se_or_zero(x.counts)});
    out.rows.push_back({"dispersion", std::to_string(x.rectangle.e_lo) + ":" + std::to_string(x.rectangle.e_hi),
                        x.dispersion, x.dispersion_se});
  }
  json blocks = json::array();
  for (const auto& b : rep.blocks) {
    blocks.push_back({{"e_lo", b.rectangle.e_lo},
                      {"e_hi", b.rectangle.e_hi},
                      {"at_least_two", estimate(b.at_least_two)},
                      {"at_least_one", estimate(b.at_least_one)},
                      {"target", b.target},
                      {"sigma", b.sigma},
                      {"z", b.z},
                      {"multi_ok", b.multi_ok},
                      {"single_ok", b.single_ok}});
    out.rows.push_back({"blocks_at_least_one", std::to_string(b.rectangle.e_lo), b.at_least_one.mean,
                        se_or_zero(b.at_least_one)});
    out.rows.push_back({"blocks_at_least_two", std::to_string(b.rectangle.e_lo), b.at_least_two.mean,
                        se_or_zero(b.at_least_two)});
  }
  out.results = {{"n_realizations", rep.n_realizations},
                 {"n_atoms", rep.n_atoms},
                 {"n_hat", rep.n_hat},
                 {"n_hat_se", rep.n_hat_se},
                 {"n_hat_estimated", rep.n_hat_estimated},
                 {"underpowered", rep.underpowered},
                 {"gaps", {{"ks", rep.gaps.statistic}, {"p_value", rep.gaps.p_value}, {"n", rep.gaps.n},
                           {"rejected", rep.gaps_rejected}}},
                 {"counting", counting},
                 {"uniformity", {{"chi_square", rep.uniformity.statistic}, {"df", rep.uniformity.df},
                                 {"p_value", rep.uniformity.p_value}, {"rejected", rep.uniformity_rejected}}},
                 {"independence", {{"chi_square", rep.independence.statistic}, {"df", rep.independence.df},
                                   {"p_value", rep.independence.p_value},
                                   {"rejected", rep.independence_rejected}}},
                 {"blocks", blocks},
                 {"accepted", rep.accepted}};
  out.rows.push_back({"n_hat", "E0", rep.n_hat, rep.n_hat_se});
  out.rows.push_back({"gaps", "ks_p_value", rep.gaps.p_value, 0.0});
  out.checks["poisson_suite"] = rep.accepted;

  if (!a["apriori"].is_null()) {
    const auto& ap = a["apriori"];
    const auto iv = ap["interval"].get<std::vector<double>>();
    const double C_W = ap["C_W"].is_null() ? stats::wegner_bound(c.model.potential, c.model.lambda)
                                           : ap["C_W"].get<double>();
    std::vector<stats::AprioriValue> values;
    for (const auto* x : p) values.push_back({(*x)["xi"].get<double>(), (*x)["outside"].get<double>()});
    const auto r = stats::apriori_summary(values, tail_function(ap), c.E0, {iv[0], iv[1]},
                                          static_cast<double>(c.model.box().size()), C_W,
                                          ap["required_fraction"].get<double>());
    out.results["apriori"] = {{"mean", estimate(r.mean)},
                              {"integral", r.integral},
                              {"tail_bound", r.tail_bound},
                              {"rhs", r.rhs},
                              {"C_W", C_W},
                              {"mean_ok", r.mean_ok},
                              {"outside_fraction", r.outside_fraction},
                              {"pointwise_fraction", r.pointwise_fraction},
                              {"accepted", r.accepted}};
    out.rows.push_back({"apriori", "xi_mean", r.mean.mean, se_or_zero(r.mean)});
    out.rows.push_back({"apriori", "rhs", r.rhs, 0.0});
    out.checks["apriori"] = r.accepted;
  }
}

inline void analyze_regularity(const ExperimentConfig& c, const std::vector<const json*>& p, Analysis& out) {
  std::vector<Verdict> v;
  for (const auto* x : p) {
    const auto s = (*x)["verdict"].get<std::string>();
    v.push_back(s == "regular" ? Verdict::regular : s == "singular" ? Verdict::singular : Verdict::undecided);
  }
  const auto e = summarize_regularity(v, c.model.side, c.analysis["p_exponent"].get<double>());
  out.results = {{"n", e.n},
                 {"regular", e.n_regular},
                 {"undecided", e.n_undecided},
                 {"singular", e.n_singular},
                 {"probability", proportion(e.probability)},
                 {"target", e.target},
                 {"meets_target", e.meets_target}};
  out.rows.push_back({"regularity", "probability", e.probability.estimate,
                      0.5 * (e.probability.hi - e.probability.lo)});
}

inline json decay_json(const stats::DecayReport& r) {
  return {{"region", stats::to_string(r.region)},
          {"n", r.masses.size()},
          {"passed", r.passed},
          {"threshold", r.threshold},
          {"pass_fraction", proportion(r.pass_fraction)},
          {"max_mass", r.masses.empty() ? 0.0 : *std::max_element(r.masses.begin(), r.masses.end())}};
}

inline void analyze_levels(const ExperimentConfig& c, const Context& ctx, const std::vector<const json*>& p,
                           Analysis& out, bool full) {
  const auto& a = c.analysis;
  const double C_M = stats::minami_bound(c.model.potential, c.model.lambda);
  json levels = json::array();
  std::vector<double> discrepancy_means;
  for (std::size_t li = 0; li < ctx.levels.size(); ++li) {
    const auto& s = ctx.levels[li];
    const auto& lv = s.level;
    const auto f = level_test_function(lv, c.model.dim);
    std::vector<stats::MatchingSample> ms;
    std::vector<double> mD, mS, mT, rates, gram, claim, overlap;
    std::vector<std::vector<double>> eta;
    std::size_t irregular = 0, qn = 0, q_struct = 0, q_theory = 0, gram_pos = 0, gram_claim = 0;
    std::size_t dec_n = 0, dec_perfect = 0;
    bool identity = true;
    double min_gram = INFINITY;
    const double theory = std::sqrt(2.0) * std::exp(-ctx.gamma_prime * s.L_km1 / 2.0);
    for (const auto* x : p) {
      const auto& lp = (*x)["levels"].at(li);
      const auto sample = read_level_sample(lp);
      irregular += !sample.regular_proxy;
      ms.push_back(stats::match_level(sample, lv, f, 1.0));
      for (const auto& v : lp["mD"]) mD.push_back(v.get<double>());
      for (const auto& v : lp["mS"]) mS.push_back(v.get<double>());
      for (const auto& v : lp["mT"]) mT.push_back(v.get<double>());
      for (const auto& v : lp["rates"]) rates.push_back(read_number(v));
      for (const auto& q : lp["qm"]) {
        const double res = q[1].get<double>(), outm = q[2].get<double>(), pres = q[3].get<double>();
        ++qn;
        q_struct += res <= std::sqrt(2.0) * outm + pres + 1e-15;
        q_theory += res <= theory;
      }
      const auto g = lp["gram"].get<std::vector<double>>();
      const auto cb = lp["claim"].get<std::vector<double>>();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gram.push_back(g[i]);
        gram_pos += stats::gram_certifies_independence(g[i]);
        gram_claim += g[i] >= cb[i];
        min_gram = std::min(min_gram, g[i]);
      }
      for (const auto& v : lp["overlap"]) overlap.push_back(v.get<double>());
      eta.push_back(lp["eta"].get<std::vector<double>>());
      identity = identity && lp["core_J"].get<std::size_t>() + lp["strip_J"].get<std::size_t>() +
                                     static_cast<std::size_t>(lp["rem"].get<double>()) ==
                                 lp["in_J"].get<std::size_t>();
      if (lp.contains("decoupled")) {
        const auto& d = lp["decoupled"];
        ++dec_n;
        dec_perfect += d["unmatched_parent"].get<std::size_t>() == 0 && d["injective"].get<bool>() &&
                       d["max_distance"].get<double>() <= 1e-9;
      }
    }
    const double bound = std::pow(static_cast<double>(s.L_k), c.model.dim) * lv.epsilon;
    const auto mr = stats::matching_report(ms, bound, 1.0);
    const auto mv = stats::minami_variant(ms, lv, 1.0, C_M);
    const auto dD = stats::decay_report(stats::Region::D, mD, ctx.gamma_prime, s.L_km1);
    const auto dS = stats::decay_report(stats::Region::S, mS, ctx.gamma_prime, s.L_km1);
    const auto dT = stats::decay_report(stats::Region::T, mT, ctx.gamma_prime, s.L_km1);
    const double level_gamma = stats::gamma_fit(rates);
    const std::size_t n = p.size();
    const double omega_target = c.schedule.alpha > 0 && c.schedule.p_exponent > 0
                                    ? stats::omega_complement_target(s.L_km1, c.schedule.p_exponent, c.model.dim,
                                                                     c.schedule.alpha)
                                    : std::numeric_limits<double>::quiet_NaN();
    const auto t_grid = a["null_array_t"].get<std::vector<double>>();
    const auto na = stats::null_array_check(eta, t_grid);
    const std::size_t multi = gram.size();

    json lj{{"k", s.k},
            {"scales", {s.L_km1, s.L_k, s.L_kp1}},
            {"epsilon", lv.epsilon},
            {"J", {lv.J().lo, lv.J().hi}},
            {"blocks", s.dec.block_count()},
            {"decay",
             {{"D", decay_json(dD)}, {"S", decay_json(dS)}, {"T", decay_json(dT)}, {"gamma_fit", number(level_gamma)}}},
            {"omega", {{"complement", n ? static_cast<double>(irregular) / static_cast<double>(n) : 0.0},
                       {"target", number(omega_target)}}}};
    if (full) {
      lj["matching"] = {{"pairs", mr.pairs},
                        {"distance_bound", mr.distance_bound},
                        {"fraction_within", mr.fraction_within},
                        {"max_distance", mr.max_distance},
                        {"unmatched_parent", mr.unmatched_parent},
                        {"unmatched_block", mr.unmatched_block},
                        {"unmatched_within_terms", mr.unmatched_within_terms},
                        {"injective", mr.injective},
                        {"discrepancy", estimate(mr.discrepancy)},
                        {"discrepancy_total", estimate(mr.discrepancy_total)},
                        {"term_I", estimate(mr.term_I)},
                        {"term_II", estimate(mr.term_II)},
                        {"term_III", estimate(mr.term_III)},
                        {"term_IV", estimate(mr.term_IV)},
                        {"boundary_centers", estimate(mr.boundary_centers)}};
      lj["minami_variant"] = {{"A1", estimate(mv.A1)},
                              {"A2", estimate(mv.A2)},
                              {"B", estimate(mv.B)},
                              {"events_single", mv.events_single},
                              {"events_multi", mv.events_multi},
                              {"events_empty", mv.events_empty},
                              {"empty_nonzero", mv.empty_nonzero},
                              {"proxy_blocks", mv.proxy_blocks},
                              {"upper_bound_holds", mv.upper_bound_holds},
                              {"factorial_moment_sum", estimate(mv.factorial_moment_sum)},
                              {"mechanism_bound", mv.mechanism_bound},
                              {"mechanism_bound_se", mv.mechanism_bound_se},
                              {"minami_bound", mv.minami_bound},
                              {"C_M", C_M},
                              {"b_fraction", mv.b_fraction}};
      lj["quasimode"] = {{"n", qn},
                         {"structural_fraction", qn ? static_cast<double>(q_struct) / static_cast<double>(qn) : 1.0},
                         {"theory_fraction", qn ? static_cast<double>(q_theory) / static_cast<double>(qn) : 1.0},
                         {"theory_bound", theory},
                         {"multi_blocks", multi},
                         {"gram_positive_fraction",
                          multi ? static_cast<double>(gram_pos) / static_cast<double>(multi) : 1.0},
                         {"gram_above_claim_fraction",
                          multi ? static_cast<double>(gram_claim) / static_cast<double>(multi) : 1.0},
                         {"min_gram", number(min_gram)},
                         {"max_overlap", overlap.empty() ? 0.0 : *std::max_element(overlap.begin(), overlap.end())}};
      lj["null_array"] = {{"sup_single", na.sup_single}, {"thresholds", na.thresholds}, {"tail", na.tail}};
      lj["counting_identity"] = identity;
      lj["decoupled"] = {{"n", dec_n}, {"perfect", dec_perfect}};
      discrepancy_means.push_back(mr.discrepancy.mean);

      const std::string tag = "k" + std::to_string(s.k) + "_";
      out.checks[tag + "decoupled_perfect"] = dec_perfect == dec_n;
      out.checks[tag + "distance_fraction"] = mr.fraction_within >= a["distance_fraction"].get<double>();
      out.checks[tag + "injective"] = mr.injective;
      out.checks[tag + "counting_identity"] = identity;
      out.checks[tag + "quasimode_structural"] = q_struct == qn;
      out.checks[tag + "gram_independent"] = gram_pos == multi;
      out.checks[tag + "minami_b_mechanism"] = mv.B.mean <= mv.mechanism_bound + 3.0 * mv.mechanism_bound_se +
                                                                3.0 * se_or_zero(mv.B);
      out.rows.push_back({"discrepancy", "k" + std::to_string(s.k), mr.discrepancy.mean, se_or_zero(mr.discrepancy)});
      out.rows.push_back({"fraction_within", "k" + std::to_string(s.k), mr.fraction_within, 0.0});
      out.rows.push_back({"minami_B", "k" + std::to_string(s.k), mv.B.mean, se_or_zero(mv.B)});
      out.rows.push_back({"null_array_sup", "k" + std::to_string(s.k), na.sup_single, 0.0});
    }
    const std::string tag = "k" + std::to_string(s.k) + "_";
    out.checks[tag + "decay_D"] = dD.pass_fraction.estimate >= a["decay_fraction"].get<double>();
    out.rows.push_back({"decay_D_pass", "k" + std::to_string(s.k), dD.pass_fraction.estimate, 0.0});
    out.rows.push_back({"decay_S_pass", "k" + std::to_string(s.k), dS.pass_fraction.estimate, 0.0});
    out.rows.push_back({"decay_T_pass", "k" + std::to_string(s.k), dT.pass_fraction.estimate, 0.0});
    levels.push_back(lj);
  }
  out.results = {{"gamma_fit", number(ctx.gamma_fit)}, {"gamma_prime", ctx.gamma_prime}, {"levels", levels}};
  if (full && discrepancy_means.size() >= 2) {
    bool decreasing = true;
    for (std::size_t i = 1; i < discrepancy_means.size(); ++i) {
      decreasing = decreasing && discrepancy_means[i] < discrepancy_means[i - 1];
    }
    out.results["discrepancy_decreasing"] = decreasing;
    out.checks["discrepancy_decreasing"] = decreasing;
  }
}

}  // namespace detail

inline Analysis analyze(const ExperimentConfig& c, const Context& ctx, const std::vector<Record>& records) {
  Analysis out;
  const auto p = detail::usable(records, out.skipped);
  if (p.empty()) throw std::runtime_error("no usable realizations to analyze");
  switch (c.kind) {
    case Kind::spectrum: detail::analyze_spectrum(c, p, out); break;
    case Kind::dos: detail::analyze_dos(c, p, out); break;
    case Kind::wegner: detail::analyze_wegner(c, ctx, p, out); break;
    case Kind::minami: detail::analyze_minami(c, ctx, p, out); break;
    case Kind::poisson: detail::analyze_poisson(c, ctx, p, out); break;
    case Kind::regularity: detail::analyze_regularity(c, p, out); break;
    case Kind::decompose: detail::analyze_levels(c, ctx, p, out, true); break;
    case Kind::decay: detail::analyze_levels(c, ctx, p, out, false); break;
  }
  return out;
}

}  // namespace anderson::harness
