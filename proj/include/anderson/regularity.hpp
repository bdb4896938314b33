#pragma once

// (gamma, E)-regularity of a centered box: sup over eps of the Green function
// from the center to the boundary, bracketed between a grid maximum and an
// eigen-expansion bound.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson/green.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/common.hpp"

namespace anderson {

enum class Verdict { regular, singular, undecided };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::regular: return "regular";
    case Verdict::singular: return "singular";
    case Verdict::undecided: return "undecided";
  }
  return "?";
}

struct RegularityReport {
  LatticeBox box;
  double energy = 0.0;
  double gamma = 0.0;
  double threshold = 0.0;
  double sup_estimate = 0.0;
  double upper_certificate = 0.0;
  Verdict verdict = Verdict::undecided;
  bool energy_in_spectrum = false;
};

/// {0} followed by 16 log-spaced points in [1e-8, 1].
inline std::vector<double> broadening_grid() {
  std::vector<double> g{0.0};
  for (int i = 0; i < 16; ++i) g.push_back(std::pow(10.0, -8.0 + 8.0 * i / 15.0));
  return g;
}

inline RegularityReport regularity_check(const Hamiltonian& h, double E, double gamma,
                                         std::span<const int> x_center) {
  const auto& box = h.box();
  if (box.side() % 2 == 0) throw std::invalid_argument("regularity_check: box side must be odd");
  Point expected(box.origin());
  for (auto& c : expected) c += box.side() / 2;
  if (!std::equal(expected.begin(), expected.end(), x_center.begin(), x_center.end())) {
    throw std::invalid_argument("regularity_check: box is not centered at x_center");
  }
  const auto x = *box.index_of(x_center);
  const auto boundary = boundary_sets(box).inner;

  RegularityReport r{box, E, gamma, std::exp(-gamma * box.side() / 2.0), 0.0, 0.0, Verdict::undecided, false};

  const auto spec = eigendecompose(h);
  const double scale = std::max(1.0, h.matrix().norm_bound());
  double min_gap = std::numeric_limits<double>::infinity();
  for (double e : spec.eigenvalues) min_gap = std::min(min_gap, std::abs(e - E));
  if (min_gap <= 1e-12 * scale) {
    r.energy_in_spectrum = true;
    r.sup_estimate = r.upper_certificate = std::numeric_limits<double>::infinity();
    r.verdict = Verdict::singular;
    return r;
  }

  for (auto y : boundary) {
    double s = 0.0;
    for (std::size_t n = 0; n < spec.size(); ++n) {
      const auto col = static_cast<Eigen::Index>(n);
      s += std::abs(spec.eigenvectors(static_cast<Eigen::Index>(x), col) *
                    spec.eigenvectors(static_cast<Eigen::Index>(y), col)) /
           std::abs(spec.eigenvalues[n] - E);
    }
    r.upper_certificate = std::max(r.upper_certificate, s);
  }
  // Rounding allowance so that the bracket holds in floating point.
  r.upper_certificate *= 1.0 + 1e-9;

  for (double eps : broadening_grid()) {
    Resolvent res(h.matrix(), {E, eps});
    if (res.near_singular()) {
      r.energy_in_spectrum = true;
      r.sup_estimate = r.upper_certificate = std::numeric_limits<double>::infinity();
      r.verdict = Verdict::singular;
      return r;
    }
    const auto g = res.column(x);
    for (auto y : boundary) r.sup_estimate = std::max(r.sup_estimate, std::abs(g[static_cast<Eigen::Index>(y)]));
  }

  if (r.upper_certificate <= r.threshold) {
    r.verdict = Verdict::regular;
  } else if (r.sup_estimate > r.threshold) {
    r.verdict = Verdict::singular;
  } else {
    r.verdict = Verdict::undecided;
  }
  return r;
}

/// Combined verdict for a grid of energies: regular iff all are regular,
/// singular if any is singular.
inline Verdict regularity_over_grid(const Hamiltonian& h, std::span<const double> energies, double gamma,
                                    std::span<const int> x_center) {
  bool undecided = false;
  for (double E : energies) {
    const auto r = regularity_check(h, E, gamma, x_center);
    if (r.verdict == Verdict::singular) return Verdict::singular;
    if (r.verdict == Verdict::undecided) undecided = true;
  }
  return undecided ? Verdict::undecided : Verdict::regular;
}

struct RegularityEstimate {
  std::size_t n = 0;
  std::size_t n_regular = 0;
  std::size_t n_undecided = 0;
  std::size_t n_singular = 0;
  stats::ProportionInterval probability;  // of "regular", undecided counted as not regular
  double target = 0.0;                     // 1 - L^{-p}
  bool meets_target = false;               // Wilson upper bound >= target
};

inline RegularityEstimate summarize_regularity(std::span<const Verdict> verdicts, int side, double p_exponent) {
  if (verdicts.empty()) throw std::invalid_argument("regularity_probability: n_samples must be >= 1");
  RegularityEstimate est;
  est.n = verdicts.size();
  for (auto v : verdicts) {
    if (v == Verdict::regular) ++est.n_regular;
    if (v == Verdict::undecided) ++est.n_undecided;
    if (v == Verdict::singular) ++est.n_singular;
  }
  est.probability = stats::wilson(est.n_regular, est.n);
  est.target = 1.0 - std::pow(static_cast<double>(side), -p_exponent);
  est.meets_target = est.probability.hi >= est.target;
  return est;
}

/// Monte Carlo P(Lambda_L(0) is (gamma,E)-regular for every E in the grid).
inline RegularityEstimate regularity_probability(const PotentialSpec& spec, int dim, int side, double lambda,
                                                 std::span<const double> energies, double gamma,
                                                 std::size_t n_samples, std::uint64_t seed,
                                                 double p_exponent = 1.0) {
  if (n_samples == 0) throw std::invalid_argument("regularity_probability: n_samples must be >= 1");
  const Point center(static_cast<std::size_t>(dim), 0);
  const auto box = LatticeBox::centered(center, side);
  std::vector<Verdict> verdicts;
  verdicts.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto h = assemble(box, sample_potential(spec, box, seed, i), lambda, BoundaryCondition::dirichlet);
    verdicts.push_back(regularity_over_grid(h, energies, gamma, center));
  }
  return summarize_regularity(verdicts, side, p_exponent);
}

}  // namespace anderson
