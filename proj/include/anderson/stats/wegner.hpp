#pragma once

// Wegner and Minami scans: E[N(H, J)] / (|Lambda||J|) and
// E[N(N-1)] / (|Lambda||J|)^2 over a family of windows J.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/hamiltonian.hpp"
#include "anderson/parallel.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/common.hpp"

namespace anderson::stats {

/// `count` adjacent windows [c + (i - count/2) w, c + (i - count/2 + 1) w).
inline std::vector<Interval> window_grid(double center, double width, std::size_t count) {
  if (!(width > 0)) throw std::invalid_argument("window_grid: width must be positive");
  std::vector<Interval> w;
  const double start = center - 0.5 * static_cast<double>(count) * width;
  for (std::size_t i = 0; i < count; ++i) {
    w.push_back({start + static_cast<double>(i) * width, start + static_cast<double>(i + 1) * width});
  }
  return w;
}

/// counts[r][w] = N(H_r, J_w).
using CountTable = std::vector<std::vector<double>>;

inline CountTable window_counts(const HamiltonianStream& stream, std::span<const Interval> windows,
                                std::size_t n_samples, unsigned workers = 1) {
  return parallel_map<std::vector<double>>(n_samples, workers, [&](std::size_t i) {
    const auto s = eigendecompose(stream(i), SolveOptions{false, std::numeric_limits<std::size_t>::max()});
    std::vector<double> c;
    c.reserve(windows.size());
    for (const auto& j : windows) c.push_back(static_cast<double>(count_eigenvalues(s, j)));
    return c;
  });
}

struct WindowRatio {
  Interval window;
  MeanEstimate estimate;  // of the per-realization normalized quantity
  double ratio = 0.0;
  double ci_hi = 0.0;  // ratio + 1.96 SE (infinite when n = 1)
};

struct WegnerReport {
  std::vector<WindowRatio> windows;
  double C_W_hat = 0.0;
  double bound = 0.0;  // ||rho||_inf / lambda
  double volume = 0.0;
  std::size_t n_samples = 0;
  bool infinite_ci = false;
};

struct MinamiReport {
  std::vector<WindowRatio> windows;  // estimate of N(N-1), ratio normalized by (|Lambda||J|)^2
  std::vector<double> factorial_moment;
  double C_M_hat = 0.0;
  double bound = 0.0;  // pi^2 (||rho||_inf / lambda)^2
  double volume = 0.0;
  std::size_t n_samples = 0;
  bool infinite_ci = false;
};

namespace detail {

inline std::vector<double> column(const CountTable& t, std::size_t w) {
  std::vector<double> c;
  c.reserve(t.size());
  for (const auto& row : t) c.push_back(row.at(w));
  return c;
}

}  // namespace detail

inline WegnerReport wegner_from_counts(const CountTable& counts, std::span<const Interval> windows, double volume,
                                       double bound) {
  if (counts.empty()) throw std::invalid_argument("wegner: zero samples");
  WegnerReport r;
  r.bound = bound;
  r.volume = volume;
  r.n_samples = counts.size();
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const double norm = volume * windows[w].length();
    auto c = detail::column(counts, w);
    for (auto& x : c) x /= norm;
    WindowRatio wr{windows[w], MeanEstimate::of(c), 0.0, 0.0};
    wr.ratio = wr.estimate.mean;
    wr.ci_hi = wr.ratio + 1.959963984540054 * wr.estimate.std_error;
    r.infinite_ci = r.infinite_ci || wr.estimate.infinite_ci();
    r.C_W_hat = std::max(r.C_W_hat, wr.ratio);
    r.windows.push_back(wr);
  }
  return r;
}

inline MinamiReport minami_from_counts(const CountTable& counts, std::span<const Interval> windows, double volume,
                                       double bound) {
  if (counts.empty()) throw std::invalid_argument("minami: zero samples");
  MinamiReport r;
  r.bound = bound;
  r.volume = volume;
  r.n_samples = counts.size();
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const double norm = std::pow(volume * windows[w].length(), 2);
    auto c = detail::column(counts, w);
    // sum_{k >= 2} k (k-1) P_hat(N = k) is the empirical mean of N (N - 1).
    for (auto& x : c) x = x * (x - 1.0);
    const auto fm = MeanEstimate::of(c);
    r.factorial_moment.push_back(fm.mean);
    for (auto& x : c) x /= norm;
    WindowRatio wr{windows[w], MeanEstimate::of(c), 0.0, 0.0};
    wr.ratio = wr.estimate.mean;
    wr.ci_hi = wr.ratio + 1.959963984540054 * wr.estimate.std_error;
    r.infinite_ci = r.infinite_ci || wr.estimate.infinite_ci();
    r.C_M_hat = std::max(r.C_M_hat, wr.ratio);
    r.windows.push_back(wr);
  }
  return r;
}

inline double wegner_bound(const PotentialSpec& spec, double lambda) { return spec.density_sup() / lambda; }

inline double minami_bound(const PotentialSpec& spec, double lambda) {
  return std::numbers::pi * std::numbers::pi * std::pow(spec.density_sup() / lambda, 2);
}

inline WegnerReport wegner_scan(const ModelSpec& model, std::span<const Interval> windows, std::size_t n_samples,
                                std::uint64_t seed, unsigned workers = 1) {
  const auto counts = window_counts(model_stream(model, seed), windows, n_samples, workers);
  return wegner_from_counts(counts, windows, static_cast<double>(model.box().size()),
                            wegner_bound(model.potential, model.lambda));
}

inline MinamiReport minami_scan(const ModelSpec& model, std::span<const Interval> windows, std::size_t n_samples,
                                std::uint64_t seed, unsigned workers = 1) {
  const auto counts = window_counts(model_stream(model, seed), windows, n_samples, workers);
  return minami_from_counts(counts, windows, static_cast<double>(model.box().size()),
                            minami_bound(model.potential, model.lambda));
}

}  // namespace anderson::stats
