#pragma once

// One realization of the two-scale setup: parent H_{k+1} on Lambda_{k+1},
// block operators H_{k,p} on D_p, and everything the matching, decay,
// quasimode and null-array checks read from it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"
#include "anderson/pointprocess.hpp"
#include "anderson/spectral.hpp"
#include "anderson/stats/decay.hpp"
#include "anderson/stats/matching.hpp"
#include "anderson/stats/quasimode.hpp"

namespace anderson::stats {

struct LevelRealization {
  LevelSample sample;
  std::vector<double> mass_D;  // parent, E in J + 2 eps, center in C_p: ||(1 - chi_{D_p}) phi||
  std::vector<double> mass_S;  // parent, E in J + 2 eps, center in D_p \ C_p: ||(1 - chi_{S_p}) phi||
  std::vector<double> mass_T;  // block, E in J', center in D_p \ C_p: ||(1 - chi_{T_p}) phi||
  std::vector<double> rates;   // decay rates of the parent eigenfunctions in the window
  std::vector<QuasimodeItem> quasimodes;
  std::vector<double> gram_min;     // blocks with >= 2 quasimodes
  std::vector<double> claim_bound;  // matching 1 - |Lambda_{k+1}| e^{-gamma_m L_{k-1}}
  std::vector<double> max_overlap;
  std::vector<double> eta_A;        // per block: block eigenvalues in J
  std::size_t parent_in_J = 0;      // inertia count N(H_{k+1}, J)
  std::size_t parent_core_J = 0;    // sum_p N(H_{k+1}, J, C_p)
  std::size_t parent_strip_J = 0;   // N(H_{k+1}, J, union D_p \ C_p)
};

namespace detail {

inline std::vector<std::size_t> local_indices(const LatticeBox& parent, const LatticeBox& block,
                                              std::span<const std::size_t> parent_sites) {
  std::vector<std::size_t> out;
  out.reserve(parent_sites.size());
  for (auto s : parent_sites) out.push_back(*block.index_of(parent.site(s)));
  std::sort(out.begin(), out.end());
  return out;
}

inline Eigen::VectorXd column(const SpectralData& s, std::size_t j) {
  return s.eigenvectors.col(static_cast<Eigen::Index>(j));
}

}  // namespace detail

/// `parent` lives on dec.parent; blocks use periodic bc. gamma_m is the
/// decay rate the quasimode bounds are evaluated at.
inline LevelRealization realize_level(const Hamiltonian& parent, const Decomposition& dec, const Level& lv,
                                      double gamma_m, const std::vector<Hamiltonian>& blocks) {
  LevelRealization out;
  const auto& box = parent.box();
  const bool periodic = parent.bc() == BoundaryCondition::periodic;
  const auto J = lv.J();
  const auto J1 = lv.widened(1.0);
  const auto J2 = lv.widened(2.0);
  const auto J3 = lv.widened(3.0);
  const double eps = lv.epsilon;

  const auto pw = eigen_window(parent, 0.5 * (J2.lo + J2.hi), 0.5 * J2.length());
  const auto& ps = pw.data;
  out.parent_in_J = SpectrumCounter(parent.matrix()).in(J);
  out.sample.parent_total = static_cast<double>(out.parent_in_J);
  out.sample.blocks.resize(dec.block_count());
  std::vector<std::vector<std::size_t>> core_of_block(dec.block_count());
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const double E = ps.eigenvalues[j];
    if (!anderson::detail::in_half_open(E, J2)) continue;
    const auto c = ps.center(j);
    const auto phi = detail::column(ps, j);
    out.rates.push_back(decay_rate(phi, box, c, periodic));
    const bool inJ = anderson::detail::in_half_open(E, J);
    const auto b = dec.block_of[c];
    if (b < 0) {
      out.sample.parent_remainder += inJ;
      continue;
    }
    const auto p = static_cast<std::size_t>(b);
    auto& bd = out.sample.blocks[p];
    if (dec.in_core[c]) {
      const double m = outside_mass(phi, dec.block_sites[p]);
      out.mass_D.push_back(m);
      if (m > eps) out.sample.regular_proxy = false;
      bd.parent_core.push_back({E, anderson::detail::scaled_site(box, box.site(c))});
      core_of_block[p].push_back(j);
      out.parent_core_J += inJ;
    } else {
      const double m = outside_mass(phi, dec.shells_S[p]);
      out.mass_S.push_back(m);
      if (m > eps) out.sample.regular_proxy = false;
      bd.parent_strip += inJ;
      out.parent_strip_J += inJ;
    }
  }

  for (std::size_t p = 0; p < dec.block_count(); ++p) {
    auto& bd = out.sample.blocks[p];
    const auto& block = dec.blocks[p];
    const auto& hb = blocks.at(p);
    const auto bw = eigen_window(hb, 0.5 * (J1.lo + J1.hi), 0.5 * J1.length());
    const auto& bs = bw.data;
    const auto T_local = detail::local_indices(box, block, dec.shells_T[p]);
    double in_J = 0;
    for (std::size_t j = 0; j < bs.size(); ++j) {
      const double F = bs.eigenvalues[j];
      if (!anderson::detail::in_half_open(F, J1)) continue;
      const auto site = block.site(bs.center(j));
      const auto parent_site = *box.index_of(site);
      bd.block.push_back({F, anderson::detail::scaled_site(box, site)});
      in_J += anderson::detail::in_half_open(F, J);
      if (!dec.in_core[parent_site]) {
        bd.block_strip += 1;
        const double m = T_local.empty() ? 1.0 : outside_mass(detail::column(bs, j), T_local);
        out.mass_T.push_back(m);
        if (m > eps) out.sample.regular_proxy = false;
      }
    }
    out.eta_A.push_back(in_J);
    if (!dec.shells_S[p].empty()) {
      bd.n_shell_S = static_cast<double>(SpectrumCounter(parent.matrix().restricted(dec.shells_S[p])).in(J3));
    }
    if (!T_local.empty()) {
      bd.n_shell_T = static_cast<double>(SpectrumCounter(hb.matrix().restricted(T_local)).in(J2));
    }

    const auto& idx = core_of_block[p];
    if (!idx.empty()) {
      Eigen::MatrixXd vecs(static_cast<Eigen::Index>(box.size()), static_cast<Eigen::Index>(idx.size()));
      std::vector<double> energies;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        vecs.col(static_cast<Eigen::Index>(k)) = detail::column(ps, idx[k]);
        energies.push_back(ps.eigenvalues[idx[k]]);
      }
      const auto q = quasimode_check(parent.matrix(), energies, vecs, dec.block_sites[p], gamma_m, dec.strip);
      out.quasimodes.insert(out.quasimodes.end(), q.items.begin(), q.items.end());
      if (idx.size() >= 2) {
        out.gram_min.push_back(q.gram_min);
        out.claim_bound.push_back(q.claim_bound);
        out.max_overlap.push_back(q.max_overlap);
      }
    }
  }
  return out;
}

/// Block operators H_{k,p} of a parent realization.
inline std::vector<Hamiltonian> block_operators(const Hamiltonian& parent, const Decomposition& dec) {
  const DisorderRealization r{parent.box(), parent.potential()};
  std::vector<Hamiltonian> out;
  out.reserve(dec.block_count());
  for (const auto& b : dec.blocks) out.push_back(block_operator(r, b, parent.coupling()));
  return out;
}

}  // namespace anderson::stats
