#pragma once

// Truncated eigenfunctions chi_{D_p} phi_j as quasimodes of the block
// operator: residuals, pairwise overlaps and the Gram independence
// certificate.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "anderson/sparse.hpp"
#include "anderson/spectral.hpp"

namespace anderson::stats {

struct QuasimodeItem {
  double energy = 0.0;
  double residual = 0.0;        // ||(H|_D - E) chi_D phi||
  double outside = 0.0;         // ||(1 - chi_D) phi||
  double parent_residual = 0.0; // ||(H - E) phi||
  bool structural_ok = false;   // residual <= sqrt2 outside + parent_residual
  bool theory_ok = false;       // residual <= sqrt2 e^{-gamma_m L_{k-1}/2}
};

struct QuasimodeReport {
  std::vector<QuasimodeItem> items;
  double max_overlap = 0.0;      // max_{i != j} |<psi_i, psi_j>|
  double overlap_bound = 0.0;    // e^{-gamma_m L_{k-1}}
  bool overlaps_ok = true;
  double gram_min = 1.0;         // smallest eigenvalue of the Gram matrix
  double claim_bound = 0.0;      // 1 - |Lambda_{k+1}| e^{-gamma_m L_{k-1}}
  bool independent = true;
};

inline double gram_min_eigenvalue(const Eigen::MatrixXd& columns) {
  if (columns.cols() == 0) return 1.0;
  const Eigen::MatrixXd g = columns.transpose() * columns;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

/// Independence certificate: positive smallest Gram eigenvalue, with a
/// relative floor against rounding.
inline bool gram_certifies_independence(double gram_min, double scale = 1.0) {
  return gram_min > 1e-10 * std::max(1.0, scale);
}

/// `vectors` are unit eigenvectors of `h` (columns) with `energies`;
/// `sub` are the sites of D_p.
inline QuasimodeReport quasimode_check(const SymmetricSparse& h, std::span<const double> energies,
                                       const Eigen::MatrixXd& vectors, std::span<const std::size_t> sub,
                                       double gamma_m, int L_km1) {
  QuasimodeReport r;
  const double eps_half = std::exp(-gamma_m * L_km1 / 2.0);
  r.overlap_bound = std::exp(-gamma_m * L_km1);
  r.claim_bound = 1.0 - static_cast<double>(h.size()) * r.overlap_bound;
  Eigen::MatrixXd psi(static_cast<Eigen::Index>(sub.size()), vectors.cols());
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const Eigen::VectorXd phi = vectors.col(j);
    const double E = energies[static_cast<std::size_t>(j)];
    const auto t = truncate_eigenfunction(h, phi, E, sub);
    psi.col(j) = t.restricted;
    QuasimodeItem it;
    it.energy = E;
    it.residual = t.residual;
    it.outside = t.outside_norm;
    it.parent_residual = (h.multiply(phi) - E * phi).norm();
    it.structural_ok = it.residual <= std::sqrt(2.0) * it.outside + it.parent_residual + 1e-15;
    it.theory_ok = it.residual <= std::sqrt(2.0) * eps_half;
    r.items.push_back(it);
  }
  for (Eigen::Index i = 0; i < psi.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < psi.cols(); ++j) {
      r.max_overlap = std::max(r.max_overlap, std::abs(psi.col(i).dot(psi.col(j))));
    }
  }
  r.overlaps_ok = r.max_overlap <= r.overlap_bound;
  r.gram_min = gram_min_eigenvalue(psi);
  r.independent = gram_certifies_independence(r.gram_min);
  return r;
}

}  // namespace anderson::stats
