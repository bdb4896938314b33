#pragma once

// Single-site distributions and reproducible disorder realizations.

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson/lattice.hpp"

namespace anderson {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream for realization `index` under `master`.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

enum class PotentialKind { uniform, bernoulli, gaussian, custom };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::uniform: return "uniform";
    case PotentialKind::bernoulli: return "bernoulli";
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::custom: return "custom";
  }
  return "?";
}

inline PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "uniform") return PotentialKind::uniform;
  if (s == "bernoulli") return PotentialKind::bernoulli;
  if (s == "gaussian") return PotentialKind::gaussian;
  if (s == "custom") return PotentialKind::custom;
  throw std::invalid_argument("unknown potential kind '" + s + "'");
}

/// Law of V(0). `custom` is a piecewise-constant density given by bin edges
/// and non-negative bin weights (normalized internally).
struct PotentialSpec {
  PotentialKind kind = PotentialKind::uniform;
  double a = 0.0;  // uniform lower bound
  double b = 1.0;  // uniform upper bound
  double p = 0.5;  // bernoulli P(V = +1)
  double mu = 0.0;
  double sigma2 = 1.0;
  std::vector<double> edges;
  std::vector<double> weights;

  static PotentialSpec uniform(double lo, double hi) {
    PotentialSpec s;
    s.kind = PotentialKind::uniform;
    s.a = lo;
    s.b = hi;
    s.validate();
    return s;
  }
  static PotentialSpec bernoulli(double prob) {
    PotentialSpec s;
    s.kind = PotentialKind::bernoulli;
    s.p = prob;
    s.validate();
    return s;
  }
  static PotentialSpec gaussian(double mean, double variance) {
    PotentialSpec s;
    s.kind = PotentialKind::gaussian;
    s.mu = mean;
    s.sigma2 = variance;
    s.validate();
    return s;
  }
  static PotentialSpec custom(std::vector<double> bin_edges, std::vector<double> bin_weights) {
    PotentialSpec s;
    s.kind = PotentialKind::custom;
    s.edges = std::move(bin_edges);
    s.weights = std::move(bin_weights);
    s.validate();
    return s;
  }

  void validate() const {
    switch (kind) {
      case PotentialKind::uniform:
        if (!(b > a)) throw std::invalid_argument("uniform potential needs a < b");
        break;
      case PotentialKind::bernoulli:
        if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bernoulli potential needs 0 < p < 1");
        break;
      case PotentialKind::gaussian:
        if (!(sigma2 > 0.0)) throw std::invalid_argument("gaussian potential needs sigma2 > 0");
        break;
      case PotentialKind::custom: {
        if (edges.size() < 2 || weights.size() + 1 != edges.size()) {
          throw std::invalid_argument("custom potential needs n+1 edges for n weights");
        }
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
          if (!(edges[i + 1] > edges[i])) throw std::invalid_argument("custom potential edges must increase");
        }
        double total = 0.0;
        for (double w : weights) {
          if (!(w >= 0.0)) throw std::invalid_argument("custom potential weights must be non-negative");
          total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("custom potential weights sum to zero");
        break;
      }
    }
  }

  /// ||rho||_inf, or +inf when V(0) has no bounded density.
  double density_sup() const {
    constexpr double pi = 3.14159265358979323846;
    switch (kind) {
      case PotentialKind::uniform: return 1.0 / (b - a);
      case PotentialKind::bernoulli: return std::numeric_limits<double>::infinity();
      case PotentialKind::gaussian: return 1.0 / std::sqrt(2.0 * pi * sigma2);
      case PotentialKind::custom: {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double sup = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
          sup = std::max(sup, weights[i] / total / (edges[i + 1] - edges[i]));
        }
        return sup;
      }
    }
    return std::numeric_limits<double>::infinity();
  }

  bool operator==(const PotentialSpec&) const = default;
};

/// Draws i.i.d. values of V(0) from one engine.
class PotentialSampler {
 public:
  explicit PotentialSampler(const PotentialSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.kind == PotentialKind::custom) {
      bins_ = std::discrete_distribution<std::size_t>(spec_.weights.begin(), spec_.weights.end());
    }
  }

  double operator()(std::mt19937_64& eng) {
    switch (spec_.kind) {
      case PotentialKind::uniform:
        return std::uniform_real_distribution<double>(spec_.a, spec_.b)(eng);
      case PotentialKind::bernoulli:
        return std::bernoulli_distribution(spec_.p)(eng) ? 1.0 : -1.0;
      case PotentialKind::gaussian:
        return std::normal_distribution<double>(spec_.mu, std::sqrt(spec_.sigma2))(eng);
      case PotentialKind::custom: {
        const auto i = bins_(eng);
        return std::uniform_real_distribution<double>(spec_.edges[i], spec_.edges[i + 1])(eng);
      }
    }
    return 0.0;
  }

 private:
  PotentialSpec spec_;
  std::discrete_distribution<std::size_t> bins_;
};

struct DisorderRealization {
  LatticeBox box;
  std::vector<double> values;  // indexed like box sites
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

inline DisorderRealization sample_potential(const PotentialSpec& spec, const LatticeBox& box,
                                            std::uint64_t seed, std::uint64_t index) {
  std::mt19937_64 eng(stream_seed(seed, index));
  PotentialSampler draw(spec);
  DisorderRealization r{box, std::vector<double>(box.size()), seed, index};
  for (auto& v : r.values) v = draw(eng);
  return r;
}

/// Values of `r` on the sites of `sub` (which must lie inside r.box).
inline DisorderRealization restrict_realization(const DisorderRealization& r, const LatticeBox& sub) {
  DisorderRealization out{sub, std::vector<double>(sub.size()), r.seed, r.index};
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const auto idx = r.box.index_of(sub.site(i));
    if (!idx) throw std::invalid_argument("restrict_realization: sub-box not contained in box");
    out.values[i] = r.values[*idx];
  }
  return out;
}

}  // namespace anderson
