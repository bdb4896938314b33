#pragma once

// Scaled eigenvalue / localization-center point processes on R x K,
// K = (0,1]^d, and the weighted measure with |psi_j(x)|^2 masses.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "anderson/lattice.hpp"
#include "anderson/spectral.hpp"

namespace anderson {

struct Atom {
  double e = 0.0;
  std::vector<double> u;
  double w = 1.0;

  bool operator==(const Atom&) const = default;
};

/// Energy axis [e_lo, e_hi), space axes (lo, hi].
struct Rectangle {
  double e_lo = 0.0;
  double e_hi = 0.0;
  std::vector<double> u_lo;
  std::vector<double> u_hi;

  /// J x K.
  static Rectangle energy_slab(double lo, double hi, int dim) {
    return {lo, hi, std::vector<double>(static_cast<std::size_t>(dim), 0.0),
            std::vector<double>(static_cast<std::size_t>(dim), 1.0)};
  }

  bool contains_energy(double e) const { return e >= e_lo && e < e_hi; }
  bool contains_space(std::span<const double> u) const {
    if (u.size() != u_lo.size()) throw std::invalid_argument("Rectangle: dimension mismatch");
    for (std::size_t a = 0; a < u.size(); ++a) {
      if (!(u[a] > u_lo[a] && u[a] <= u_hi[a])) return false;
    }
    return true;
  }
  bool contains(const Atom& x) const { return contains_energy(x.e) && contains_space(x.u); }

  double measure() const {
    double m = std::max(0.0, e_hi - e_lo);
    for (std::size_t a = 0; a < u_lo.size(); ++a) m *= std::max(0.0, u_hi[a] - u_lo[a]);
    return m;
  }
};

struct ScaledPointProcess {
  int dim = 1;
  double E0 = 0.0;
  int side = 0;         // L used in the space scaling
  double volume = 0.0;  // |Lambda| used in the energy scaling
  std::uint64_t realization = 0;
  std::vector<Atom> atoms;

  std::size_t size() const { return atoms.size(); }
};

/// Same layout; every atom carries a weight |psi_j(x)|^2.
struct WeightedMeasure {
  int dim = 1;
  double E0 = 0.0;
  int side = 0;
  double volume = 0.0;
  std::uint64_t realization = 0;
  std::vector<Atom> atoms;

  double total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.w;
    return m;
  }
};

struct TestFunction {
  enum class Kind { zero, indicator, cauchy, generic };

  Kind kind = Kind::zero;
  double support = 0.0;  // a with pi_e(supp f) in [-a, a]; infinite for the Cauchy kernel
  std::function<double(double, std::span<const double>)> fn;

  double operator()(double e, std::span<const double> u) const { return fn ? fn(e, u) : 0.0; }

  static TestFunction zero() { return {Kind::zero, 0.0, {}}; }

  static TestFunction indicator(Rectangle a) {
    const double bound = std::max(std::abs(a.e_lo), std::abs(a.e_hi));
    return {Kind::indicator, bound, [a = std::move(a)](double e, std::span<const double> u) {
              return a.contains_energy(e) && a.contains_space(u) ? 1.0 : 0.0;
            }};
  }

  /// 1_B(u) f_zeta(e), f_zeta(e) = tau / ((e - sigma)^2 + tau^2), zeta = sigma + i tau.
  static TestFunction cauchy(double sigma, double tau, Rectangle space) {
    if (!(tau > 0.0)) throw std::invalid_argument("cauchy test function: tau must be positive");
    return {Kind::cauchy, std::numeric_limits<double>::infinity(),
            [sigma, tau, b = std::move(space)](double e, std::span<const double> u) {
              if (!b.contains_space(u)) return 0.0;
              const double x = e - sigma;
              return tau / (x * x + tau * tau);
            }};
  }

  /// Arbitrary bounded f; values outside |e| <= a are taken as zero.
  static TestFunction generic(std::function<double(double, std::span<const double>)> f, double a) {
    return {Kind::generic, a, [f = std::move(f), a](double e, std::span<const double> u) {
              return std::abs(e) <= a ? f(e, u) : 0.0;
            }};
  }
};

namespace detail {

inline std::vector<double> scaled_site(const LatticeBox& frame, const Point& x) {
  std::vector<double> u(static_cast<std::size_t>(frame.dim()));
  for (std::size_t a = 0; a < u.size(); ++a) {
    u[a] = static_cast<double>(x[a] - frame.origin()[a] + 1) / frame.side();
  }
  return u;
}

}  // namespace detail

/// X_j = (|Lambda|(E_j - E0), x_j / L) with sites read as {1..L}^d.
inline ScaledPointProcess build_process(const SpectralData& s, const LatticeBox& box, double E0,
                                        std::uint64_t realization = 0) {
  if (s.dimension != box.size()) throw std::invalid_argument("build_process: spectral data does not match box");
  if (s.centers.size() != s.size()) throw std::invalid_argument("build_process: eigenvectors required");
  ScaledPointProcess pp{box.dim(), E0, box.side(), static_cast<double>(box.size()), realization, {}};
  pp.atoms.reserve(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    pp.atoms.push_back({pp.volume * (s.eigenvalues[j] - E0), detail::scaled_site(box, box.site(s.center(j))), 1.0});
  }
  return pp;
}

/// eta_{k+1,p}: block eigenpairs scaled with the parent volume and side;
/// centers are mapped to parent sites.
inline std::vector<ScaledPointProcess> build_block_processes(const Decomposition& dec,
                                                             std::span<const SpectralData> blocks, double E0,
                                                             std::uint64_t realization = 0) {
  if (blocks.size() != dec.block_count()) {
    throw std::invalid_argument("build_block_processes: " + std::to_string(blocks.size()) +
                                " spectra for " + std::to_string(dec.block_count()) + " blocks");
  }
  const auto& parent = dec.parent;
  std::vector<ScaledPointProcess> out;
  out.reserve(blocks.size());
  for (std::size_t p = 0; p < blocks.size(); ++p) {
    const auto& s = blocks[p];
    const auto& block = dec.blocks[p];
    if (s.dimension != block.size() || s.centers.size() != s.size()) {
      throw std::invalid_argument("build_block_processes: spectral data does not match block");
    }
    ScaledPointProcess pp{parent.dim(), E0, parent.side(), static_cast<double>(parent.size()), realization, {}};
    pp.atoms.reserve(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      pp.atoms.push_back(
          {pp.volume * (s.eigenvalues[j] - E0), detail::scaled_site(parent, block.site(s.center(j))), 1.0});
    }
    out.push_back(std::move(pp));
  }
  return out;
}

template <class Measure>
std::size_t count(const Measure& m, const Rectangle& a) {
  return static_cast<std::size_t>(
      std::count_if(m.atoms.begin(), m.atoms.end(), [&](const Atom& x) { return a.contains(x); }));
}

/// Weighted mass of A; equals count for an unweighted process.
template <class Measure>
double mass(const Measure& m, const Rectangle& a) {
  double s = 0.0;
  for (const auto& x : m.atoms) {
    if (a.contains(x)) s += x.w;
  }
  return s;
}

template <class Measure>
double integrate(const Measure& m, const TestFunction& f) {
  if (f.kind == TestFunction::Kind::zero) return 0.0;
  double s = 0.0;
  for (const auto& x : m.atoms) s += x.w * f(x.e, x.u);
  return s;
}

/// Sorted scaled energies.
inline std::vector<double> marginal_energy(const ScaledPointProcess& pp) {
  std::vector<double> e;
  e.reserve(pp.atoms.size());
  for (const auto& a : pp.atoms) e.push_back(a.e);
  std::sort(e.begin(), e.end());
  return e;
}

/// Centers of atoms with energy in [lo, hi).
inline std::vector<std::vector<double>> marginal_space(const ScaledPointProcess& pp, double lo, double hi) {
  std::vector<std::vector<double>> out;
  for (const auto& a : pp.atoms) {
    if (a.e >= lo && a.e < hi) out.push_back(a.u);
  }
  return out;
}

inline std::vector<std::vector<double>> marginal_space(const ScaledPointProcess& pp, Interval j) {
  return marginal_space(pp, j.lo, j.hi);
}

inline ScaledPointProcess restrict_energy(const ScaledPointProcess& pp, double lo, double hi) {
  ScaledPointProcess out = pp;
  out.atoms.clear();
  for (const auto& a : pp.atoms) {
    if (a.e >= lo && a.e < hi) out.atoms.push_back(a);
  }
  return out;
}

/// Atoms (L^d (E_j - E0), x / L, |psi_j(x)|^2) for E_j in `window`, all sites x.
inline WeightedMeasure build_weighted(const SpectralData& s, const LatticeBox& box, double E0, Interval window,
                                      std::uint64_t realization = 0) {
  if (!std::isfinite(window.lo) || !std::isfinite(window.hi)) {
    throw std::invalid_argument("build_weighted: window must be bounded");
  }
  if (s.dimension != box.size() || !s.has_vectors()) {
    throw std::invalid_argument("build_weighted: eigenvectors of the box operator required");
  }
  WeightedMeasure wm{box.dim(), E0, box.side(), static_cast<double>(box.size()), realization, {}};
  std::vector<std::vector<double>> u(box.size());
  for (std::size_t x = 0; x < box.size(); ++x) u[x] = detail::scaled_site(box, box.site(x));
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (!detail::in_half_open(s.eigenvalues[j], window)) continue;
    const double e = wm.volume * (s.eigenvalues[j] - E0);
    const auto col = s.eigenvectors.col(static_cast<Eigen::Index>(j));
    for (std::size_t x = 0; x < box.size(); ++x) {
      const double v = col[static_cast<Eigen::Index>(x)];
      wm.atoms.push_back({e, u[x], v * v});
    }
  }
  return wm;
}

// Line format: realization_id,e,u_1,...,u_d[,w]. Doubles use the shortest
// round-trip representation.

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  out.append(buf, end);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw std::invalid_argument("atom record: bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string format_atom(std::uint64_t realization, const Atom& a, bool weighted) {
  std::string out = std::to_string(realization);
  out += ',';
  detail::append_double(out, a.e);
  for (double x : a.u) {
    out += ',';
    detail::append_double(out, x);
  }
  if (weighted) {
    out += ',';
    detail::append_double(out, a.w);
  }
  return out;
}

struct AtomRecord {
  std::uint64_t realization = 0;
  Atom atom;
};

inline AtomRecord parse_atom(std::string_view line, int dim, bool weighted) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  const std::size_t want = 2 + static_cast<std::size_t>(dim) + (weighted ? 1 : 0);
  if (fields.size() != want) {
    throw std::invalid_argument("atom record: expected " + std::to_string(want) + " fields, got " +
                                std::to_string(fields.size()));
  }
  AtomRecord r;
  auto [end, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), r.realization);
  if (ec != std::errc{} || end != fields[0].data() + fields[0].size()) {
    throw std::invalid_argument("atom record: bad realization id");
  }
  r.atom.e = detail::parse_double(fields[1]);
  for (int a = 0; a < dim; ++a) r.atom.u.push_back(detail::parse_double(fields[2 + static_cast<std::size_t>(a)]));
  if (weighted) r.atom.w = detail::parse_double(fields.back());
  return r;
}

template <class Measure>
std::string serialize(const Measure& m) {
  constexpr bool weighted = std::is_same_v<Measure, WeightedMeasure>;
  std::string out;
  for (const auto& a : m.atoms) {
    out += format_atom(m.realization, a, weighted);
    out += '\n';
  }
  return out;
}

}  // namespace anderson
