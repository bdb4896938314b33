#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "anderson/spectral.hpp"
#include "support.hpp"

using namespace anderson;

namespace {

Hamiltonian free_chain(int L, BoundaryCondition bc) {
  const auto box = LatticeBox::unit_frame(1, L);
  return assemble(box, DisorderRealization{box, std::vector<double>(static_cast<std::size_t>(L), 0.0), 0, 0}, 0.0, bc);
}

std::vector<double> path_oracle(int L) {
  std::vector<double> v;
  for (int j = 1; j <= L; ++j) v.push_back(2.0 * std::cos(std::numbers::pi * j / (L + 1)));
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> ring_oracle(int L) {
  std::vector<double> v;
  for (int j = 0; j < L; ++j) v.push_back(2.0 * std::cos(2.0 * std::numbers::pi * j / L));
  std::sort(v.begin(), v.end());
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void expect_orthonormal_eigenpairs(const SymmetricSparse& h, const SpectralData& s) {
  const auto& v = s.eigenvectors;
  const Eigen::MatrixXd gram = v.transpose() * v;
  const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  EXPECT_LE(off, 1e-8);
  EXPECT_LE(s.residual_bound, 1e-8 * std::max(1.0, h.norm_bound()));
  ASSERT_EQ(s.centers.size(), s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& c = s.centers[j];
    ASSERT_FALSE(c.sites.empty());
    EXPECT_TRUE(std::find(c.sites.begin(), c.sites.end(), c.canonical) != c.sites.end());
  }
  EXPECT_TRUE(std::is_sorted(s.eigenvalues.begin(), s.eigenvalues.end()));
}

}  // namespace

TEST(Eigendecompose, ThreeSitePath) {
  const auto s = eigendecompose(free_chain(3, BoundaryCondition::dirichlet));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s.eigenvalues[0], -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s.eigenvalues[1], 0.0, 1e-14);
  EXPECT_NEAR(s.eigenvalues[2], std::sqrt(2.0), 1e-14);
}

TEST(Eigendecompose, FourSiteRing) {
  const auto h = free_chain(4, BoundaryCondition::periodic);
  const auto s = eigendecompose(h);
  EXPECT_LE(max_abs_diff(s.eigenvalues, {-2, 0, 0, 2}), 1e-13);
  expect_orthonormal_eigenpairs(h.matrix(), s);
}

TEST(Eigendecompose, FreeOracleUpTo2000) {
  for (int L : {1, 2, 3, 17, 50, 500, 2000}) {
    const auto p = eigendecompose(free_chain(L, BoundaryCondition::dirichlet), {false});
    EXPECT_LE(max_abs_diff(p.eigenvalues, path_oracle(L)), 1e-10) << L;
    const auto r = eigendecompose(free_chain(L, BoundaryCondition::periodic), {false});
    EXPECT_LE(max_abs_diff(r.eigenvalues, ring_oracle(L)), 1e-10) << L;
  }
}

TEST(Eigendecompose, PropertyTraceAndInvariants) {
  testing_support::Gen g(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = g.integer(1, 3);
    const int L = d == 1 ? g.integer(1, 120) : g.integer(1, d == 2 ? 9 : 5);
    const auto bc = g.coin() ? BoundaryCondition::periodic : BoundaryCondition::dirichlet;
    const auto h = testing_support::random_hamiltonian(g, d, L, g.real(0, 8), bc);
    const auto s = eigendecompose(h);
    ASSERT_EQ(s.size(), h.size());
    double sum = 0;
    for (double e : s.eigenvalues) sum += e;
    double trace = h.matrix().trace();
    EXPECT_NEAR(sum, trace, 1e-8 * std::max(1.0, std::abs(trace)) + 1e-10 * static_cast<double>(h.size()));
    expect_orthonormal_eigenpairs(h.matrix(), s);
    // Same spectrum as the dense reference solver.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense(), Eigen::EigenvaluesOnly);
    std::vector<double> ref(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    EXPECT_LE(max_abs_diff(s.eigenvalues, ref), 1e-10 * std::max(1.0, h.matrix().norm_bound()));
  }
}

TEST(Eigendecompose, RingAndPathRoutesAgreeWithDense) {
  testing_support::Gen g(32);
  for (double lambda : {0.0, 1.0, 5.0, 30.0}) {
    for (int L : {3, 64, 301}) {
      for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::periodic}) {
        const auto h = testing_support::random_hamiltonian(g, 1, L, lambda, bc);
        const auto s = eigendecompose(h);
        expect_orthonormal_eigenpairs(h.matrix(), s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense(), Eigen::EigenvaluesOnly);
        std::vector<double> ref(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
        EXPECT_LE(max_abs_diff(s.eigenvalues, ref), 1e-11 * std::max(1.0, h.matrix().norm_bound()));
      }
    }
  }
}

TEST(Eigendecompose, QlAndBisectionAgreeOnPaths) {
  testing_support::Gen g(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.integer(1, 200);
    CyclicTridiagonal t{g.vector(static_cast<std::size_t>(n), -3, 3), g.vector(static_cast<std::size_t>(n), -1, 1)};
    t.off.back() = 0.0;
    std::vector<double> d = t.diag;
    tridiagonal_ql(d, std::span<const double>(t.off.data(), static_cast<std::size_t>(n - 1)), nullptr);
    const auto [lo, hi] = t.spectrum_bounds();
    const auto b = bisect_eigenvalues(t, lo - 1, hi + 1);
    EXPECT_LE(max_abs_diff(d, b), 1e-12);
  }
}

TEST(Eigendecompose, DenseCap) {
  const auto box = LatticeBox::unit_frame(2, 70);
  const auto h = assemble(box, sample_potential(PotentialSpec::uniform(0, 1), box, 1, 0), 1.0,
                          BoundaryCondition::dirichlet);
  EXPECT_THROW(eigendecompose(h), DenseCapExceeded);
}

TEST(SturmCount, MatchesDenseAtMidpoints) {
  testing_support::Gen g(34);
  for (int trial = 0; trial < 60; ++trial) {
    const int L = g.integer(1, 80);
    const double lambda = trial % 5 == 0 ? 0.0 : g.real(0, 10);
    const auto bc = g.coin() ? BoundaryCondition::periodic : BoundaryCondition::dirichlet;
    const auto h = testing_support::random_hamiltonian(g, 1, L, lambda, bc);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense(), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    for (Eigen::Index j = 0; j + 1 < ev.size(); ++j) {
      if (ev[j + 1] - ev[j] < 1e-9) continue;
      const double mid = 0.5 * (ev[j] + ev[j + 1]);
      EXPECT_EQ(count_below(h.matrix(), mid), static_cast<std::size_t>(j + 1));
    }
    EXPECT_EQ(count_below(h.matrix(), ev[0] - 1.0), 0u);
    EXPECT_EQ(count_below(h.matrix(), ev[ev.size() - 1] + 1.0), h.size());
  }
}

TEST(SturmCount, InertiaMatchesDenseInHigherDimension) {
  testing_support::Gen g(35);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = testing_support::random_hamiltonian(g, 2, g.integer(2, 8), g.real(0.5, 6),
                                                       g.coin() ? BoundaryCondition::periodic : BoundaryCondition::dirichlet);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense(), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    for (Eigen::Index j = 0; j + 1 < ev.size(); j += 3) {
      if (ev[j + 1] - ev[j] < 1e-9) continue;
      EXPECT_EQ(count_below(h.matrix(), 0.5 * (ev[j] + ev[j + 1])), static_cast<std::size_t>(j + 1));
    }
  }
}

TEST(EigenWindow, WholeSpectrumMatchesFullSolve) {
  testing_support::Gen g(36);
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::periodic}) {
    const auto h = testing_support::random_hamiltonian(g, 1, 150, 3.0, bc);
    const auto full = eigendecompose(h);
    const auto w = eigen_window(h, 0.0, 10.0);
    EXPECT_TRUE(w.complete);
    EXPECT_EQ(w.data.size(), full.size());
    EXPECT_LE(max_abs_diff(w.data.eigenvalues, full.eigenvalues), 1e-12);
    for (std::size_t j = 0; j < full.size(); ++j) EXPECT_EQ(w.data.center(j), full.center(j));
  }
}

TEST(EigenWindow, EmptyWindowBetweenFreeEigenvalues) {
  const auto h = free_chain(10, BoundaryCondition::dirichlet);
  const auto ev = path_oracle(10);
  const double mid = 0.5 * (ev[4] + ev[5]);
  const auto w = eigen_window(h, mid, 0.25 * (ev[5] - ev[4]));
  EXPECT_EQ(w.data.size(), 0u);
  EXPECT_EQ(w.inertia_count, 0u);
  EXPECT_TRUE(w.complete);
  EXPECT_FALSE(w.boundary_ambiguous);
}

TEST(EigenWindow, LargeChainCountMatchesFullSolve) {
  testing_support::Gen g(37);
  for (auto bc : {BoundaryCondition::dirichlet, BoundaryCondition::periodic}) {
    const auto h = testing_support::random_hamiltonian(g, 1, 2000, 5.0, bc);
    const double radius = 10.0 / 2000.0;
    const auto w = eigen_window(h, 0.0, radius);
    const auto full = eigendecompose(h, {false});
    std::size_t n = 0;
    for (double e : full.eigenvalues) n += std::abs(e) <= radius;
    EXPECT_EQ(w.data.size(), n);
    EXPECT_TRUE(w.complete);
    expect_orthonormal_eigenpairs(h.matrix(), w.data);
  }
}

TEST(EigenWindow, BoundaryAmbiguityFlag) {
  const auto h = free_chain(4, BoundaryCondition::periodic);
  const auto w = eigen_window(h, 1.0, 1.0);  // upper end sits on the eigenvalue 2
  EXPECT_TRUE(w.boundary_ambiguous);
  EXPECT_THROW(eigen_window(h, 0.0, 0.0), std::invalid_argument);
}

TEST(LocalizationCenter, Examples) {
  const std::vector<double> delta{1.0};
  EXPECT_EQ(localization_center(delta).canonical, 0u);
  const double r = 1.0 / std::sqrt(2.0);
  const auto tie = localization_center(std::vector<double>{r, r});
  EXPECT_EQ(tie.sites, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(tie.canonical, 0u);
  const auto strict = localization_center(std::vector<double>{0.6, 0.8});
  EXPECT_EQ(strict.sites, (std::vector<std::size_t>{1}));
  EXPECT_EQ(strict.canonical, 1u);
  EXPECT_THROW(localization_center(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST(LocalizationCenter, PropertySignInvariance) {
  testing_support::Gen g(38);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = g.vector(static_cast<std::size_t>(g.integer(1, 50)));
    const auto a = localization_center(v);
    for (auto& x : v) x = -x;
    const auto b = localization_center(v);
    EXPECT_EQ(a.sites, b.sites);
    EXPECT_EQ(a.canonical, b.canonical);
  }
}

TEST(CountEigenvalues, Examples) {
  const auto s = eigendecompose(free_chain(5, BoundaryCondition::dirichlet));
  EXPECT_EQ(count_eigenvalues(s, Interval::everything()), 5u);
  EXPECT_EQ(count_eigenvalues(s, {1.0, 1.0}), 0u);
  // Eigenvalues are -sqrt3, -1, 0, 1, sqrt3; [-1, 1) holds -1 and 0.
  EXPECT_EQ(count_eigenvalues(s, {-1.0, 1.0}), 2u);
  EXPECT_EQ(count_in(free_chain(5, BoundaryCondition::dirichlet).matrix(), {-1.5, 0.5}), 2u);
}

TEST(CountEigenvalues, PropertyAdditivity) {
  testing_support::Gen g(39);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = testing_support::random_hamiltonian(g, 1, g.integer(1, 60), g.real(0, 5), BoundaryCondition::periodic);
    const auto s = eigendecompose(h);
    const double a = g.real(-5, 5), b = a + g.real(0, 3), c = b + g.real(0, 3);
    EXPECT_EQ(count_eigenvalues(s, {a, c}), count_eigenvalues(s, {a, b}) + count_eigenvalues(s, {b, c}));
    EXPECT_EQ(count_eigenvalues(s, {a, c}), count_in(h.matrix(), {a, c}));
  }
}

TEST(CountLocalized, PartitionsAndDecoupledBlocks) {
  testing_support::Gen g(40);
  const auto parent_box = LatticeBox::unit_frame(1, 60);
  const auto r = sample_potential(PotentialSpec::uniform(-0.5, 0.5), parent_box, 7, 0);
  const auto parent = assemble(parent_box, r, 5.0, BoundaryCondition::periodic);
  const auto dec = decompose(parent_box, 20, 3);
  const auto s = eigendecompose(parent);
  const Interval J{-1.0, 1.5};
  EXPECT_EQ(count_localized(s, J, std::vector<char>(60, 1)), count_eigenvalues(s, J));
  std::size_t total = 0;
  for (std::size_t p = 0; p < dec.block_count(); ++p) {
    total += count_localized(s, J, site_mask(60, dec.block_sites[p]));
  }
  EXPECT_EQ(total, count_eigenvalues(s, J));

  const auto decoupled = assemble_decoupled(parent, dec);
  const auto sd = eigendecompose(decoupled);
  for (std::size_t p = 0; p < dec.block_count(); ++p) {
    const auto block = block_operator(r, dec.blocks[p], 5.0);
    const auto sb = eigendecompose(block);
    EXPECT_EQ(count_localized(sd, J, site_mask(60, dec.block_sites[p])), count_eigenvalues(sb, J));
  }
}

TEST(Truncate, WholeBoxAndInteriorSupport) {
  testing_support::Gen g(41);
  const auto h = testing_support::random_hamiltonian(g, 1, 40, 4.0, BoundaryCondition::periodic);
  const auto s = eigendecompose(h);
  std::vector<std::size_t> all(40);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t j = 0; j < s.size(); j += 7) {
    const auto t = truncate_eigenfunction(h.matrix(), s.vector(j), s.eigenvalues[j], all);
    EXPECT_LE(t.residual, 1e-8);
    EXPECT_NEAR(t.norm, 1.0, 1e-10);
    EXPECT_EQ(t.outside_norm, 0.0);
  }

  // Eigenvector of a decoupled block, supported two sites inside `sub`.
  const auto box = LatticeBox::unit_frame(1, 12);
  const auto r = sample_potential(PotentialSpec::uniform(-0.5, 0.5), box, 3, 0);
  const auto parent = assemble(box, r, 2.0, BoundaryCondition::dirichlet);
  const auto dec = decompose(box, 4, 1);
  const auto hd = assemble_decoupled(parent, dec);
  const auto sd = eigendecompose(hd);
  const std::vector<std::size_t> sub{2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t checked = 0;
  for (std::size_t j = 0; j < sd.size(); ++j) {
    const auto psi = sd.vector(j);
    if (psi.segment(4, 4).norm() < 1.0 - 1e-12) continue;
    const auto t = truncate_eigenfunction(hd.matrix(), psi, sd.eigenvalues[j], sub);
    EXPECT_LE(t.residual, 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 4u);
}
