#pragma once

// Green function G(z; x, y) = <delta_x, (H - z)^{-1} delta_y> by a direct
// complex LU solve.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "anderson/hamiltonian.hpp"
#include "anderson/sparse.hpp"
#include "anderson/tridiagonal.hpp"

namespace anderson {

struct SingularEnergyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Factorization of H - z reused for several right-hand sides.
class Resolvent {
 public:
  static constexpr double kPivotTolerance = 1e-12;

  Resolvent(const SymmetricSparse& h, std::complex<double> z) : z_(z) {
    if (z.imag() < 0.0) throw std::invalid_argument("Resolvent: Im z must be non-negative");
    const auto n = static_cast<Eigen::Index>(h.size());
    a_ = h.dense().cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < n; ++i) a_(i, i) -= z;
    lu_.compute(a_);
    const auto& u = lu_.matrixLU();
    double max_piv = 0.0;
    double min_piv = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      max_piv = std::max(max_piv, std::abs(u(i, i)));
      min_piv = std::min(min_piv, std::abs(u(i, i)));
    }
    scale_ = std::max(max_piv, h.norm_bound() + std::abs(z));
    rel_pivot_ = n == 0 ? 1.0 : (scale_ > 0 ? min_piv / scale_ : 0.0);
  }

  double relative_min_pivot() const { return rel_pivot_; }
  bool near_singular() const { return rel_pivot_ < kPivotTolerance; }

  /// G(z; ., y).
  Eigen::VectorXcd column(std::size_t y) const {
    if (near_singular()) {
      throw SingularEnergyError("Green function: z is an eigenvalue within tolerance (relative pivot " +
                                std::to_string(rel_pivot_) + ")");
    }
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(a_.rows());
    rhs[static_cast<Eigen::Index>(y)] = 1.0;
    return lu_.solve(rhs);
  }

  /// ||(H - z) g - delta_y||.
  double residual(const Eigen::VectorXcd& g, std::size_t y) const {
    Eigen::VectorXcd r = a_ * g;
    r[static_cast<Eigen::Index>(y)] -= 1.0;
    return r.norm();
  }

 private:
  std::complex<double> z_;
  Eigen::MatrixXcd a_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double scale_ = 1.0;
  double rel_pivot_ = 1.0;
};

inline std::complex<double> green(const Hamiltonian& h, std::complex<double> z, std::size_t x,
                                  std::size_t y) {
  if (x >= h.size() || y >= h.size()) throw std::out_of_range("green: site index out of range");
  Resolvent r(h.matrix(), z);
  return r.column(y)[static_cast<Eigen::Index>(x)];
}

inline std::complex<double> green(const Hamiltonian& h, std::complex<double> z, std::span<const int> x,
                                  std::span<const int> y) {
  const auto ix = h.box().index_of(x);
  const auto iy = h.box().index_of(y);
  if (!ix || !iy) throw std::out_of_range("green: site outside the box");
  return green(h, z, *ix, *iy);
}

namespace detail {

/// Tr (T - z)^{-1} = -sum_k r_k' / r_k for the continuant ratios
/// r_k = d_k - z - e_{k-1}^2 / r_{k-1}.
inline std::complex<double> tridiagonal_resolvent_trace(std::span<const double> d, std::span<const double> e,
                                                        std::complex<double> z) {
  std::complex<double> r = 0.0, dr = 0.0, tr = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (k == 0) {
      r = d[0] - z;
      dr = -1.0;
    } else {
      const double e2 = e[k - 1] * e[k - 1];
      const auto prev = r;
      r = d[k] - z - e2 / prev;
      dr = -1.0 + e2 * dr / (prev * prev);
    }
    tr -= dr / r;
  }
  return tr;
}

}  // namespace detail

/// Tr (H - z)^{-1} for Im z > 0: continuant recursion on paths and
/// (orthogonally reduced) rings, dense LU otherwise.
inline std::complex<double> resolvent_trace(const SymmetricSparse& h, std::complex<double> z) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("resolvent_trace: Im z must be positive");
  std::complex<double> tr = 0.0;
  for (const auto& comp : h.components()) {
    const auto sub = h.restricted(comp);
    if (auto t = sub.as_cyclic_tridiagonal()) {
      const auto r = t->corner() == 0.0 ? *t : reduce_to_tridiagonal(*t);
      tr += detail::tridiagonal_resolvent_trace(r.diag, r.off, z);
    } else {
      Eigen::MatrixXcd a = sub.dense().cast<std::complex<double>>();
      a.diagonal().array() -= z;
      tr += a.partialPivLu().inverse().trace();
    }
  }
  return tr;
}

}  // namespace anderson
