#pragma once

// Boxes in Z^d, their boundaries, length-scale schedules and the block
// decomposition of a box into D_p / C_p / S_p / T_p.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <iterator>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anderson {

using Point = std::vector<int>;

inline int l1_distance(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("l1_distance: dimension mismatch");
  }
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

/// Axis-aligned box of side L in Z^d. Sites are enumerated lexicographically
/// (axis 0 slowest), so the lexicographic minimum of any site subset is the
/// one with the smallest index.
class LatticeBox {
 public:
  static LatticeBox from_origin(int dim, int side, Point origin) {
    if (dim <= 0) throw std::invalid_argument("LatticeBox: dimension must be positive");
    if (side <= 0) throw std::invalid_argument("LatticeBox: side must be positive");
    if (origin.size() != static_cast<std::size_t>(dim)) {
      throw std::invalid_argument("LatticeBox: origin has wrong dimension");
    }
    return LatticeBox(dim, side, std::move(origin));
  }

  /// {1..L}^d, the frame used for scaled point processes.
  static LatticeBox unit_frame(int dim, int side) {
    return from_origin(dim, side, Point(static_cast<std::size_t>(std::max(dim, 0)), 1));
  }

  /// Lambda_L(x): odd side only, so every site is within l1 radius L/2 per
  /// axis of the center and |Lambda| = L^d.
  static LatticeBox centered(const Point& center, int side) {
    if (side <= 0 || side % 2 == 0) {
      throw std::invalid_argument("LatticeBox::centered: side must be odd and positive");
    }
    Point origin(center);
    for (auto& c : origin) c -= side / 2;
    return from_origin(static_cast<int>(center.size()), side, std::move(origin));
  }

  int dim() const { return dim_; }
  int side() const { return side_; }
  const Point& origin() const { return origin_; }
  std::size_t size() const { return size_; }

  int coord(std::size_t index, int axis) const {
    return static_cast<int>((index / stride_[static_cast<std::size_t>(axis)]) %
                            static_cast<std::size_t>(side_)) +
           origin_[static_cast<std::size_t>(axis)];
  }

  Point site(std::size_t index) const {
    Point p(static_cast<std::size_t>(dim_));
    for (int a = 0; a < dim_; ++a) p[static_cast<std::size_t>(a)] = coord(index, a);
    return p;
  }

  std::vector<Point> sites() const {
    std::vector<Point> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back(site(i));
    return out;
  }

  std::optional<std::size_t> index_of(std::span<const int> p) const {
    if (p.size() != static_cast<std::size_t>(dim_)) return std::nullopt;
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
      const int off = p[static_cast<std::size_t>(a)] - origin_[static_cast<std::size_t>(a)];
      if (off < 0 || off >= side_) return std::nullopt;
      idx += static_cast<std::size_t>(off) * stride_[static_cast<std::size_t>(a)];
    }
    return idx;
  }

  bool contains(std::span<const int> p) const { return index_of(p).has_value(); }

  /// Offset of a site along an axis, in [0, side).
  int offset(std::size_t index, int axis) const {
    return coord(index, axis) - origin_[static_cast<std::size_t>(axis)];
  }

  /// Index of the neighbor one step along +-axis, wrapping if `periodic`.
  std::optional<std::size_t> neighbor(std::size_t index, int axis, int step,
                                      bool periodic) const {
    const int off = offset(index, axis);
    int next = off + step;
    if (next < 0 || next >= side_) {
      if (!periodic) return std::nullopt;
      next = ((next % side_) + side_) % side_;
    }
    const auto stride = stride_[static_cast<std::size_t>(axis)];
    return index - static_cast<std::size_t>(off) * stride + static_cast<std::size_t>(next) * stride;
  }

  bool operator==(const LatticeBox& other) const {
    return dim_ == other.dim_ && side_ == other.side_ && origin_ == other.origin_;
  }

 private:
  LatticeBox(int dim, int side, Point origin)
      : dim_(dim), side_(side), origin_(std::move(origin)), size_(1),
        stride_(static_cast<std::size_t>(dim)) {
    for (int a = dim_ - 1; a >= 0; --a) {
      stride_[static_cast<std::size_t>(a)] = size_;
      size_ *= static_cast<std::size_t>(side_);
    }
  }

  int dim_;
  int side_;
  Point origin_;
  std::size_t size_;
  std::vector<std::size_t> stride_;
};

struct EdgePair {
  Point inside;
  Point outside;
  bool operator==(const EdgePair&) const = default;
};

/// inner = sites with a neighbor outside; edge_pairs = <y,y'> with y inside,
/// y' outside, |y-y'| = 1. Pairs are listed by site index, then axis, then
/// the -1 step before the +1 step.
struct BoundarySets {
  std::vector<std::size_t> inner;
  std::vector<EdgePair> edge_pairs;
};

inline BoundarySets boundary_sets(const LatticeBox& box) {
  BoundarySets out;
  for (std::size_t i = 0; i < box.size(); ++i) {
    bool on_boundary = false;
    for (int a = 0; a < box.dim(); ++a) {
      for (int step : {-1, +1}) {
        if (!box.neighbor(i, a, step, false)) {
          Point y = box.site(i);
          Point outside = y;
          outside[static_cast<std::size_t>(a)] += step;
          out.edge_pairs.push_back({std::move(y), std::move(outside)});
          on_boundary = true;
        }
      }
    }
    if (on_boundary) out.inner.push_back(i);
  }
  return out;
}

/// Sites of `subset` (sorted indices of `box`) with a lattice neighbor not in
/// `subset`; neighbors outside the box count as outside the subset.
inline std::vector<std::size_t> inner_boundary(const LatticeBox& box,
                                               std::span<const std::size_t> subset) {
  std::vector<char> member(box.size(), 0);
  for (auto s : subset) member[s] = 1;
  std::vector<std::size_t> out;
  for (auto s : subset) {
    bool edge = false;
    for (int a = 0; a < box.dim() && !edge; ++a) {
      for (int step : {-1, +1}) {
        auto n = box.neighbor(s, a, step, false);
        if (!n || !member[*n]) {
          edge = true;
          break;
        }
      }
    }
    if (edge) out.push_back(s);
  }
  return out;
}

/// All sites of `box` within l1 distance `radius` of `sources`. The box is
/// convex, so lattice-graph distance inside it equals the l1 distance.
inline std::vector<std::size_t> l1_neighborhood(const LatticeBox& box,
                                                std::span<const std::size_t> sources,
                                                int radius) {
  std::vector<int> dist(box.size(), -1);
  std::deque<std::size_t> queue;
  for (auto s : sources) {
    if (dist[s] < 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    if (dist[cur] >= radius) continue;
    for (int a = 0; a < box.dim(); ++a) {
      for (int step : {-1, +1}) {
        auto n = box.neighbor(cur, a, step, false);
        if (n && dist[*n] < 0) {
          dist[*n] = dist[cur] + 1;
          queue.push_back(*n);
        }
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (dist[i] >= 0) out.push_back(i);
  }
  return out;
}

/// L_{k+1} = round(L_k^alpha) with 1 < alpha < 2p/(p+2d) and gamma' < gamma.
struct ScaleSchedule {
  int dim = 1;
  int L0 = 0;
  double alpha = 0.0;
  double p_exponent = 0.0;
  double gamma = 0.0;
  double gamma_prime = 0.0;
  std::vector<int> levels;

  static double alpha_bound(double p, int dim) { return 2.0 * p / (p + 2.0 * dim); }

  /// epsilon_{k-1} = exp(-gamma' L_{k-1} / 2), defined for k >= 1.
  double epsilon(std::size_t k) const {
    if (k == 0 || k > levels.size()) {
      throw std::out_of_range("ScaleSchedule::epsilon: level out of range");
    }
    return std::exp(-gamma_prime * levels[k - 1] / 2.0);
  }
};

inline ScaleSchedule build_schedule(int dim, int L0, double alpha, double p_exponent,
                                    double gamma, double gamma_prime, std::size_t depth) {
  if (dim <= 0) throw std::invalid_argument("build_schedule: dimension must be positive");
  if (L0 <= 0) throw std::invalid_argument("build_schedule: L0 must be positive");
  if (depth == 0) throw std::invalid_argument("build_schedule: depth must be positive");
  if (p_exponent <= 0) throw std::invalid_argument("build_schedule: p must be positive");
  const double bound = ScaleSchedule::alpha_bound(p_exponent, dim);
  if (!(alpha > 1.0 && alpha < bound)) {
    throw std::invalid_argument("build_schedule: alpha must lie in (1, 2p/(p+2d)) = (1, " +
                                std::to_string(bound) + ")");
  }
  if (!(gamma_prime > 0.0 && gamma_prime < gamma)) {
    throw std::invalid_argument("build_schedule: need 0 < gamma' < gamma");
  }
  ScaleSchedule s{dim, L0, alpha, p_exponent, gamma, gamma_prime, {L0}};
  while (s.levels.size() < depth) {
    const double next = std::round(std::pow(static_cast<double>(s.levels.back()), alpha));
    if (next > 1e9) throw std::overflow_error("build_schedule: level overflows");
    const int n = static_cast<int>(next);
    if (n <= s.levels.back()) {
      throw std::invalid_argument("build_schedule: levels must strictly increase (L0 too small)");
    }
    s.levels.push_back(n);
  }
  return s;
}

/// Parent box cut into disjoint cubes D_p of side L_k, tiled from the parent
/// origin; sites left over when L_k does not divide the side are kept in
/// `remainder`. All site lists are sorted parent indices.
struct Decomposition {
  LatticeBox parent;
  int block_side = 0;  // L_k
  int strip = 0;       // L_{k-1}
  std::vector<LatticeBox> blocks;
  std::vector<std::vector<std::size_t>> block_sites;
  std::vector<std::vector<std::size_t>> cores;     // C_p
  std::vector<std::vector<std::size_t>> shells_S;  // S_p
  std::vector<std::vector<std::size_t>> shells_T;  // T_p
  std::vector<std::size_t> remainder;
  std::vector<std::ptrdiff_t> block_of;  // per parent site, -1 in the remainder
  std::vector<char> in_core;

  std::size_t block_count() const { return blocks.size(); }
};

inline Decomposition decompose(const LatticeBox& parent, int L_k, int L_km1) {
  if (L_km1 < 0) throw std::invalid_argument("decompose: L_{k-1} must be non-negative");
  if (L_k <= 2 * L_km1) {
    throw std::invalid_argument("decompose: need L_k > 2 L_{k-1}, otherwise C_p is empty");
  }
  if (L_k > parent.side()) throw std::invalid_argument("decompose: L_k exceeds parent side");

  Decomposition dec{parent, L_k, L_km1, {}, {}, {}, {}, {}, {}, {}, {}};
  const int dim = parent.dim();
  const int per_axis = parent.side() / L_k;
  std::size_t n_blocks = 1;
  for (int a = 0; a < dim; ++a) n_blocks *= static_cast<std::size_t>(per_axis);

  dec.block_of.assign(parent.size(), -1);
  dec.in_core.assign(parent.size(), 0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    Point origin(parent.origin());
    std::size_t rest = b;
    for (int a = dim - 1; a >= 0; --a) {
      origin[static_cast<std::size_t>(a)] += static_cast<int>(rest % static_cast<std::size_t>(per_axis)) * L_k;
      rest /= static_cast<std::size_t>(per_axis);
    }
    dec.blocks.push_back(LatticeBox::from_origin(dim, L_k, origin));
  }

  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto& block = dec.blocks[b];
    std::vector<std::size_t> sites;
    std::vector<std::size_t> core;
    std::vector<std::size_t> strip_sites;
    sites.reserve(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) {
      const auto p = block.site(i);
      const auto idx = *parent.index_of(p);
      sites.push_back(idx);
      int depth = L_k;
      for (int a = 0; a < dim; ++a) {
        const int off = block.offset(i, a);
        depth = std::min({depth, off, L_k - 1 - off});
      }
      if (depth >= L_km1) {
        core.push_back(idx);
      } else {
        strip_sites.push_back(idx);
      }
    }
    std::sort(sites.begin(), sites.end());
    std::sort(core.begin(), core.end());
    std::sort(strip_sites.begin(), strip_sites.end());
    for (auto s : sites) dec.block_of[s] = static_cast<std::ptrdiff_t>(b);
    for (auto s : core) dec.in_core[s] = 1;

    std::vector<std::size_t> shell_S;
    if (!strip_sites.empty()) {
      const auto edge = inner_boundary(parent, strip_sites);
      shell_S = l1_neighborhood(parent, edge, L_km1);
    }
    std::vector<std::size_t> shell_T;
    std::set_intersection(shell_S.begin(), shell_S.end(), sites.begin(), sites.end(),
                          std::back_inserter(shell_T));
    dec.block_sites.push_back(std::move(sites));
    dec.cores.push_back(std::move(core));
    dec.shells_S.push_back(std::move(shell_S));
    dec.shells_T.push_back(std::move(shell_T));
  }
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (dec.block_of[i] < 0) dec.remainder.push_back(i);
  }
  return dec;
}

}  // namespace anderson
