#pragma once

// Eigenfunction mass outside D_p / S_p / T_p against e^{-gamma' L_{k-1}/2},
// and the decay rate fitted from tail masses.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "anderson/lattice.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/common.hpp"

namespace anderson::stats {

enum class Region { D, S, T };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::D: return "D_p";
    case Region::S: return "S_p";
    case Region::T: return "T_p";
  }
  return "?";
}

/// ||(1 - chi_sub) psi||, summed over the complement.
inline double outside_mass(const Eigen::VectorXd& psi, std::span<const std::size_t> sub) {
  const auto in = site_mask(static_cast<std::size_t>(psi.size()), sub);
  double s = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (!in[static_cast<std::size_t>(i)]) s += psi[i] * psi[i];
  }
  return std::sqrt(s);
}

inline int box_distance(const LatticeBox& box, std::size_t x, std::size_t y, bool periodic) {
  int d = 0;
  for (int a = 0; a < box.dim(); ++a) {
    int t = std::abs(box.coord(x, a) - box.coord(y, a));
    if (periodic) t = std::min(t, box.side() - t);
    d += t;
  }
  return d;
}

/// T(r) = sum of psi(x)^2 over sites at distance > r from `center`, r = 0..max.
inline std::vector<double> tail_profile(const Eigen::VectorXd& psi, const LatticeBox& box, std::size_t center,
                                        bool periodic) {
  std::vector<double> shell;
  for (std::size_t x = 0; x < box.size(); ++x) {
    const auto r = static_cast<std::size_t>(box_distance(box, x, center, periodic));
    if (shell.size() <= r) shell.resize(r + 1, 0.0);
    shell[r] += psi[static_cast<Eigen::Index>(x)] * psi[static_cast<Eigen::Index>(x)];
  }
  std::vector<double> tail(shell.size(), 0.0);
  double acc = 0.0;
  for (std::size_t r = shell.size(); r-- > 0;) {
    tail[r] = acc;
    acc += shell[r];
  }
  return tail;
}

/// Amplitude decay rate: minus the OLS slope of 0.5 ln T(r) on r over
/// r >= 1 with T(r) >= floor. NaN with fewer than three usable points.
inline double decay_rate(const Eigen::VectorXd& psi, const LatticeBox& box, std::size_t center, bool periodic,
                         double floor = 1e-24) {
  const auto tail = tail_profile(psi, box, center, periodic);
  std::vector<double> xs, ys;
  for (std::size_t r = 1; r < tail.size(); ++r) {
    if (!(tail[r] >= floor)) break;
    xs.push_back(static_cast<double>(r));
    ys.push_back(0.5 * std::log(tail[r]));
  }
  if (xs.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  return -ols_slope(xs, ys);
}

/// Median of the finite positive rates.
inline double gamma_fit(std::span<const double> rates) {
  std::vector<double> ok;
  for (double r : rates) {
    if (std::isfinite(r) && r > 0) ok.push_back(r);
  }
  return median(ok);
}

struct DecayReport {
  Region region = Region::D;
  std::vector<double> masses;
  double gamma_prime = 0.0;
  double threshold = 0.0;  // e^{-gamma' L_{k-1} / 2}
  std::size_t passed = 0;
  ProportionInterval pass_fraction;
  double gamma_fit = std::numeric_limits<double>::quiet_NaN();
  double omega_target = 0.0;  // L_{k-1}^{-2p + 2 d alpha^2}
};

inline DecayReport decay_report(Region region, std::vector<double> masses, double gamma_prime, int L_km1,
                                double fitted_gamma = std::numeric_limits<double>::quiet_NaN(),
                                double omega_target = 0.0) {
  DecayReport r;
  r.region = region;
  r.gamma_prime = gamma_prime;
  r.threshold = std::exp(-gamma_prime * L_km1 / 2.0);
  r.masses = std::move(masses);
  for (double m : r.masses) r.passed += m <= r.threshold;
  r.pass_fraction = r.masses.empty() ? ProportionInterval{0.0, 0.0, 1.0} : wilson(r.passed, r.masses.size());
  r.gamma_fit = fitted_gamma;
  r.omega_target = omega_target;
  return r;
}

inline double omega_complement_target(int L_km1, double p_exponent, int dim, double alpha) {
  return std::pow(static_cast<double>(L_km1), -2.0 * p_exponent + 2.0 * dim * alpha * alpha);
}

}  // namespace anderson::stats
