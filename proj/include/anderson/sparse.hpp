#pragma once

// Row-compressed real symmetric matrix with the structure queries the
// solvers dispatch on.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/tridiagonal.hpp"

namespace anderson {

class SymmetricSparse {
 public:
  struct Entry {
    std::size_t col;
    double value;
  };

  SymmetricSparse() = default;
  explicit SymmetricSparse(std::size_t n) : diag_(n, 0.0), rows_(n) {}

  std::size_t size() const { return diag_.size(); }
  double diagonal(std::size_t i) const { return diag_[i]; }
  std::span<const Entry> row(std::size_t i) const { return rows_[i]; }

  void add_diagonal(std::size_t i, double v) { diag_.at(i) += v; }

  /// Adds v at (i,j) and (j,i); i == j adds 2v on the diagonal.
  void add_symmetric(std::size_t i, std::size_t j, double v) {
    if (i >= size() || j >= size()) throw std::out_of_range("SymmetricSparse: index out of range");
    if (i == j) {
      diag_[i] += 2.0 * v;
      return;
    }
    add_entry(i, j, v);
    add_entry(j, i, v);
  }

  double entry(std::size_t i, std::size_t j) const {
    if (i == j) return diag_[i];
    for (const auto& e : rows_[i]) {
      if (e.col == j) return e.value;
    }
    return 0.0;
  }

  std::size_t nonzeros() const {
    std::size_t nnz = 0;
    for (const auto& r : rows_) nnz += r.size();
    return nnz + size();
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < size(); ++i) {
      double s = diag_[i] * x[i];
      for (const auto& e : rows_[i]) s += e.value * x[e.col];
      y[i] = s;
    }
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(x.size());
    multiply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
             std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
    return y;
  }

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < size(); ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag_[i];
      for (const auto& e : rows_[i]) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.col)) = e.value;
      }
    }
    return m;
  }

  /// Max absolute row sum, an upper bound on the spectral norm.
  double norm_bound() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      double s = std::abs(diag_[i]);
      for (const auto& e : rows_[i]) s += std::abs(e.value);
      m = std::max(m, s);
    }
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (double d : diag_) t += d;
    return t;
  }

  /// Principal submatrix on `sites` (strictly increasing indices), i.e. the
  /// Dirichlet restriction to that site set.
  SymmetricSparse restricted(std::span<const std::size_t> sites) const {
    std::vector<std::ptrdiff_t> local(size(), -1);
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (sites[k] >= size()) throw std::out_of_range("restricted: site out of range");
      if (k > 0 && sites[k] <= sites[k - 1]) {
        throw std::invalid_argument("restricted: sites must be strictly increasing");
      }
      local[sites[k]] = static_cast<std::ptrdiff_t>(k);
    }
    SymmetricSparse out(sites.size());
    for (std::size_t k = 0; k < sites.size(); ++k) {
      out.diag_[k] = diag_[sites[k]];
      for (const auto& e : rows_[sites[k]]) {
        if (local[e.col] >= 0) {
          out.rows_[k].push_back({static_cast<std::size_t>(local[e.col]), e.value});
        }
      }
    }
    return out;
  }

  /// Connected components of the off-diagonal graph, each a sorted index
  /// list; components are ordered by their smallest index.
  std::vector<std::vector<std::size_t>> components() const {
    std::vector<std::ptrdiff_t> label(size(), -1);
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < size(); ++s) {
      if (label[s] >= 0) continue;
      const auto id = static_cast<std::ptrdiff_t>(out.size());
      out.emplace_back();
      label[s] = id;
      stack.push_back(s);
      while (!stack.empty()) {
        const auto cur = stack.back();
        stack.pop_back();
        out.back().push_back(cur);
        for (const auto& e : rows_[cur]) {
          if (e.value != 0.0 && label[e.col] < 0) {
            label[e.col] = id;
            stack.push_back(e.col);
          }
        }
      }
      std::sort(out.back().begin(), out.back().end());
    }
    return out;
  }

  /// The matrix as a path or ring in natural index order, if it is one.
  std::optional<CyclicTridiagonal> as_cyclic_tridiagonal() const {
    const std::size_t n = size();
    CyclicTridiagonal t{diag_, std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& e : rows_[i]) {
        if (e.value == 0.0) continue;
        const std::size_t j = e.col;
        if (j == i + 1) {
          t.off[i] = e.value;
        } else if (i == j + 1) {
          // mirrored entry, checked from the other row
        } else if (n >= 3 && ((i == 0 && j == n - 1) || (i == n - 1 && j == 0))) {
          t.off[n - 1] = e.value;
        } else {
          return std::nullopt;
        }
      }
    }
    return t;
  }

 private:
  void add_entry(std::size_t i, std::size_t j, double v) {
    for (auto& e : rows_[i]) {
      if (e.col == j) {
        e.value += v;
        return;
      }
    }
    auto& r = rows_[i];
    r.insert(std::upper_bound(r.begin(), r.end(), j,
                              [](std::size_t c, const Entry& e) { return c < e.col; }),
             Entry{j, v});
  }

  std::vector<double> diag_;
  std::vector<std::vector<Entry>> rows_;
};

}  // namespace anderson
