#pragma once

// Density of states at E0: eigenvalue histogram and Cauchy-kernel
// (Im Tr G) estimators.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson/green.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/parallel.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/common.hpp"

namespace anderson::stats {

enum class DosMethod { histogram, cauchy };

inline std::string to_string(DosMethod m) { return m == DosMethod::histogram ? "histogram" : "cauchy"; }

struct DOSEstimate {
  double E0 = 0.0;
  double n_hat = 0.0;
  DosMethod method = DosMethod::histogram;
  double bandwidth = 0.0;  // halfwidth, or tau / |Lambda| for the Cauchy kernel
  double std_error = 0.0;
  double binning_error = 0.0;  // histogram only: sqrt(mean N / R) / (|Lambda| 2h)
  std::size_t n_samples = 0;
  std::size_t n_skipped = 0;

  double total_error() const { return std::hypot(std_error, binning_error); }
};

inline DOSEstimate dos_from_counts(std::span<const double> counts, double volume, double E0, double halfwidth) {
  if (counts.empty()) throw std::invalid_argument("dos histogram: zero samples");
  if (!(halfwidth > 0)) throw std::invalid_argument("dos histogram: halfwidth must be positive");
  const auto m = MeanEstimate::of(counts);
  const double norm = volume * 2.0 * halfwidth;
  DOSEstimate d;
  d.E0 = E0;
  d.method = DosMethod::histogram;
  d.bandwidth = halfwidth;
  d.n_hat = m.mean / norm;
  d.std_error = m.infinite_ci() ? 0.0 : m.std_error / norm;
  d.binning_error = std::sqrt(m.mean / static_cast<double>(counts.size())) / norm;
  d.n_samples = counts.size();
  return d;
}

/// n_hat = E_hat[N(H, [E0 - h, E0 + h))] / (|Lambda| 2h).
inline DOSEstimate estimate_dos_histogram(const HamiltonianStream& stream, double E0, double halfwidth,
                                          std::size_t n_samples, unsigned workers = 1) {
  if (n_samples == 0) throw std::invalid_argument("dos histogram: zero samples");
  if (!(halfwidth > 0)) throw std::invalid_argument("dos histogram: halfwidth must be positive");
  double volume = 0.0;
  const auto counts = parallel_map<double>(n_samples, workers, [&](std::size_t i) {
    const auto h = stream(i);
    if (i == 0) volume = static_cast<double>(h.size());
    return static_cast<double>(count_in(h, Interval::around(E0, halfwidth)));
  });
  return dos_from_counts(counts, volume, E0, halfwidth);
}

/// (1 / (pi |Lambda|)) Im Tr G(E0 + i tau / |Lambda|).
inline double cauchy_dos_value(const Hamiltonian& h, double E0, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("dos cauchy: tau must be positive");
  const double n = static_cast<double>(h.size());
  const auto tr = resolvent_trace(h.matrix(), {E0, tau / n});
  return tr.imag() / (std::numbers::pi * n);
}

/// Values that are not finite are skipped and counted in n_skipped.
inline DOSEstimate dos_from_cauchy_values(std::span<const double> values, double volume, double E0, double tau) {
  std::vector<double> kept;
  for (double v : values) {
    if (std::isfinite(v)) kept.push_back(v);
  }
  if (kept.empty()) throw std::invalid_argument("dos cauchy: zero usable samples");
  const auto m = MeanEstimate::of(kept);
  DOSEstimate d;
  d.E0 = E0;
  d.method = DosMethod::cauchy;
  d.bandwidth = tau / volume;
  d.n_hat = m.mean;
  d.std_error = m.infinite_ci() ? 0.0 : m.std_error;
  d.n_samples = kept.size();
  d.n_skipped = values.size() - kept.size();
  return d;
}

inline DOSEstimate estimate_dos_cauchy(const HamiltonianStream& stream, double E0, double tau,
                                       std::size_t n_samples, unsigned workers = 1) {
  if (n_samples == 0) throw std::invalid_argument("dos cauchy: zero samples");
  double volume = 0.0;
  const auto values = parallel_map<double>(n_samples, workers, [&](std::size_t i) {
    const auto h = stream(i);
    if (i == 0) volume = static_cast<double>(h.size());
    try {
      return cauchy_dos_value(h, E0, tau);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
  return dos_from_cauchy_values(values, volume, E0, tau);
}

struct DosAgreement {
  double difference = 0.0;
  double sigma = 0.0;
  double z = 0.0;
  bool agree = false;
};

inline DosAgreement compare_dos(const DOSEstimate& a, const DOSEstimate& b, double n_sigma = 3.0) {
  DosAgreement r;
  r.difference = a.n_hat - b.n_hat;
  r.sigma = std::hypot(a.total_error(), b.total_error());
  r.z = r.sigma > 0 ? std::abs(r.difference) / r.sigma : (r.difference == 0 ? 0.0 : INFINITY);
  r.agree = r.z <= n_sigma;
  return r;
}

}  // namespace anderson::stats
