#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

#include "anderson/green.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/regularity.hpp"
#include "support.hpp"

using namespace anderson;
using cd = std::complex<double>;

namespace {

Hamiltonian with_values(int side, std::vector<double> v, double lambda, BoundaryCondition bc) {
  const auto box = LatticeBox::unit_frame(1, side);
  DisorderRealization r{box, std::move(v), 0, 0};
  return assemble(box, r, lambda, bc);
}

// 3x3 inverse by cofactors.
Eigen::Matrix3cd adjugate_inverse(const Eigen::Matrix3cd& a) {
  Eigen::Matrix3cd cof;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (i + 1) % 3, r1 = (i + 2) % 3, c0 = (j + 1) % 3, c1 = (j + 2) % 3;
      cof(i, j) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    }
  }
  const cd det = a(0, 0) * cof(0, 0) + a(0, 1) * cof(0, 1) + a(0, 2) * cof(0, 2);
  return cof.transpose() / det;
}

}  // namespace

TEST(Potential, UniformSupportAndDeterminism) {
  const auto box = LatticeBox::unit_frame(2, 20);
  const auto spec = PotentialSpec::uniform(0.0, 1.0);
  const auto a = sample_potential(spec, box, 42, 7);
  const auto b = sample_potential(spec, box, 42, 7);
  const auto c = sample_potential(spec, box, 42, 8);
  ASSERT_EQ(a.values.size(), box.size());
  for (double v : a.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
}

TEST(Potential, UniformMeanLawOfLargeNumbers) {
  const auto box = LatticeBox::unit_frame(1, 100000);
  const auto r = sample_potential(PotentialSpec::uniform(0.0, 1.0), box, 2024, 0);
  double s = 0.0;
  for (double v : r.values) s += v;
  EXPECT_NEAR(s / 1e5, 0.5, 0.005);
}

TEST(Potential, OtherKinds) {
  const auto box = LatticeBox::unit_frame(1, 20000);
  const auto bern = sample_potential(PotentialSpec::bernoulli(0.3), box, 1, 0);
  double plus = 0;
  for (double v : bern.values) {
    ASSERT_TRUE(v == 1.0 || v == -1.0);
    plus += v > 0;
  }
  EXPECT_NEAR(plus / 20000.0, 0.3, 0.02);
  EXPECT_TRUE(std::isinf(PotentialSpec::bernoulli(0.3).density_sup()));

  const auto gauss = sample_potential(PotentialSpec::gaussian(1.0, 4.0), box, 1, 0);
  double m = 0, m2 = 0;
  for (double v : gauss.values) {
    m += v;
    m2 += v * v;
  }
  m /= 20000.0;
  EXPECT_NEAR(m, 1.0, 0.06);
  EXPECT_NEAR(m2 / 20000.0 - m * m, 4.0, 0.2);
  EXPECT_NEAR(PotentialSpec::gaussian(1.0, 4.0).density_sup(), 1.0 / std::sqrt(8.0 * std::numbers::pi), 1e-15);

  const auto custom = PotentialSpec::custom({0.0, 1.0, 3.0}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(custom.density_sup(), 0.5);
  const auto cv = sample_potential(custom, box, 1, 0);
  double low = 0;
  for (double v : cv.values) {
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 3.0);
    low += v < 1.0;
  }
  EXPECT_NEAR(low / 20000.0, 0.5, 0.02);
  EXPECT_DOUBLE_EQ(PotentialSpec::uniform(-0.5, 0.5).density_sup(), 1.0);
  EXPECT_THROW(PotentialSpec::uniform(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::custom({0.0, 1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Assemble, FreeDirichletPath) {
  const auto h = with_values(3, {0.3, -0.2, 0.9}, 0.0, BoundaryCondition::dirichlet);
  Eigen::Matrix3d expected;
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_EQ(h.matrix().dense(), expected);
}

TEST(Assemble, FreeTriangle) {
  const auto h = with_values(3, {0, 0, 0}, 0.0, BoundaryCondition::periodic);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense());
  EXPECT_NEAR(es.eigenvalues()[0], -1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()[1], -1.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()[2], 2.0, 1e-14);
}

TEST(Assemble, TwoSitesWithPotential) {
  const auto h = with_values(2, {3, -1}, 1.0, BoundaryCondition::dirichlet);
  Eigen::Matrix2d expected;
  expected << 3, 1, 1, -1;
  EXPECT_EQ(h.matrix().dense(), expected);
}

TEST(Assemble, RejectsMismatchedRealization) {
  const auto box = LatticeBox::unit_frame(1, 4);
  const auto other = LatticeBox::unit_frame(1, 5);
  const auto r = sample_potential(PotentialSpec::uniform(0, 1), other, 1, 0);
  EXPECT_THROW(assemble(box, r, 1.0, BoundaryCondition::dirichlet), std::invalid_argument);
}

TEST(Assemble, RingMatchesCirculantForSmallSides) {
  for (int L = 1; L <= 9; ++L) {
    const auto h = with_values(L, std::vector<double>(static_cast<std::size_t>(L), 0.0), 0.0,
                               BoundaryCondition::periodic);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix().dense());
    std::vector<double> oracle;
    for (int j = 0; j < L; ++j) oracle.push_back(2.0 * std::cos(2.0 * std::numbers::pi * j / L));
    std::sort(oracle.begin(), oracle.end());
    for (int j = 0; j < L; ++j) EXPECT_NEAR(es.eigenvalues()[j], oracle[static_cast<std::size_t>(j)], 1e-13) << L;
  }
}

TEST(Assemble, PropertyLinearityAndStructure) {
  testing_support::Gen g(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto box = g.box(3, 5);
    const auto bc = g.coin() ? BoundaryCondition::periodic : BoundaryCondition::dirichlet;
    const auto r = sample_potential(PotentialSpec::uniform(-1, 1), box, g.seed(), 0);
    const double lambda = g.real(0.0, 10.0);
    const auto h = assemble(box, r, lambda, bc).matrix().dense();
    const auto h0 = assemble(box, r, 0.0, bc).matrix().dense();
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    for (std::size_t i = 0; i < box.size(); ++i) diag(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = r.values[i];
    EXPECT_EQ(h, h0 + lambda * diag);
    EXPECT_EQ(h, h.transpose());
    if (box.side() >= 3) {
      // Off-diagonal (x,y) = 1 exactly for nearest neighbors, plus wraps.
      for (std::size_t i = 0; i < box.size(); ++i) {
        int offdiag = 0;
        for (std::size_t j = 0; j < box.size(); ++j) {
          if (i == j) continue;
          const double v = h0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          const int d1 = l1_distance(box.site(i), box.site(j));
          if (bc == BoundaryCondition::dirichlet) {
            EXPECT_EQ(v, d1 == 1 ? 1.0 : 0.0);
          }
          offdiag += v != 0.0;
        }
        EXPECT_LE(offdiag, 2 * box.dim());
        if (bc == BoundaryCondition::periodic) {
          EXPECT_EQ(offdiag, 2 * box.dim());
        }
      }
    }
  }
}

TEST(Green, ScalarBox) {
  const auto h = with_values(1, {0.7}, 2.0, BoundaryCondition::dirichlet);
  const cd z(0.3, 0.25);
  EXPECT_LT(std::abs(green(h, z, 0, 0) - 1.0 / (1.4 - z)), 1e-15);
}

TEST(Green, ThreeSiteAdjugate) {
  const auto h = with_values(3, {0, 0, 0}, 0.0, BoundaryCondition::dirichlet);
  const cd z(0.0, 1.0);
  Eigen::Matrix3cd a = h.matrix().dense().cast<cd>();
  a.diagonal().array() -= z;
  const auto inv = adjugate_inverse(a);
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t y = 0; y < 3; ++y) {
      EXPECT_LT(std::abs(green(h, z, x, y) - inv(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))), 1e-14);
    }
  }
  // G(i;0,0) = (z^2 - 1)/(-z^3 + 2z) at z = i: (-2)/(3i) = 2i/3.
  EXPECT_LT(std::abs(green(h, z, 0, 0) - cd(0.0, 2.0 / 3.0)), 1e-14);
}

TEST(Green, PropertyResolventIdentitySymmetryPositivity) {
  testing_support::Gen g(22);
  for (int trial = 0; trial < 30; ++trial) {
    const auto box = g.box(2, 6);
    const auto bc = g.coin() ? BoundaryCondition::periodic : BoundaryCondition::dirichlet;
    const auto h = assemble(box, sample_potential(PotentialSpec::uniform(-1, 1), box, g.seed(), 0),
                            g.real(0, 6), bc);
    const cd z(g.real(-4, 4), std::pow(10.0, g.real(-6, 0)));
    Resolvent res(h.matrix(), z);
    for (std::size_t y = 0; y < box.size(); y += 1 + box.size() / 5) {
      const auto col = res.column(y);
      EXPECT_LE(res.residual(col, y), 1e-10);
      EXPECT_GT(col[static_cast<Eigen::Index>(y)].imag(), 0.0);
      for (std::size_t x = 0; x < box.size(); ++x) {
        EXPECT_LT(std::abs(col[static_cast<Eigen::Index>(x)] - res.column(x)[static_cast<Eigen::Index>(y)]), 1e-9);
      }
    }
  }
}

TEST(Green, SingularEnergyIsReported) {
  const auto h = with_values(1, {0.5}, 1.0, BoundaryCondition::dirichlet);
  EXPECT_THROW(green(h, cd(0.5, 0.0), 0, 0), SingularEnergyError);
  EXPECT_THROW(green(h, cd(0.5, -1.0), 0, 0), std::invalid_argument);
}

TEST(Regularity, ScalarBoxRegular) {
  const double gamma = 1.0;
  const auto box = LatticeBox::centered({0}, 1);
  DisorderRealization r{box, {3.0}, 0, 0};
  const auto h = assemble(box, r, 1.0, BoundaryCondition::dirichlet);
  const double E = 3.0 - 1.01 * std::exp(gamma / 2.0);
  const auto rep = regularity_check(h, E, gamma, Point{0});
  EXPECT_EQ(rep.verdict, Verdict::regular);
  EXPECT_FALSE(rep.energy_in_spectrum);
  EXPECT_LE(rep.sup_estimate, rep.upper_certificate);
  EXPECT_NEAR(rep.sup_estimate, 1.0 / (1.01 * std::exp(0.5)), 1e-14);
}

TEST(Regularity, EigenvalueIsSingular) {
  const auto box = LatticeBox::centered({0}, 3);
  DisorderRealization r{box, {0, 0, 0}, 0, 0};
  const auto h = assemble(box, r, 0.0, BoundaryCondition::dirichlet);
  const auto rep = regularity_check(h, 0.0, 0.5, Point{0});
  EXPECT_EQ(rep.verdict, Verdict::singular);
  EXPECT_TRUE(rep.energy_in_spectrum);
}

TEST(Regularity, GridMatchesDenseInverseAndBracketHolds) {
  const auto box = LatticeBox::centered({0}, 9);
  const auto spec = PotentialSpec::uniform(-0.5, 0.5);
  std::size_t loose_regular = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto h = assemble(box, sample_potential(spec, box, 99, i), 5.0, BoundaryCondition::dirichlet);
    const double E = 0.0;
    const auto rep = regularity_check(h, E, 0.5, Point{0});
    EXPECT_LE(rep.sup_estimate, rep.upper_certificate);
    // Oracle: dense inverse at every grid point.
    double sup = 0.0;
    for (double eps : broadening_grid()) {
      Eigen::MatrixXcd a = h.matrix().dense().cast<cd>();
      a.diagonal().array() -= cd(E, eps);
      const Eigen::MatrixXcd inv = a.inverse();
      sup = std::max({sup, std::abs(inv(4, 0)), std::abs(inv(4, 8))});
    }
    EXPECT_NEAR(rep.sup_estimate, sup, 1e-10 * sup);
    if (rep.verdict == Verdict::regular) {
      EXPECT_LE(rep.upper_certificate, rep.threshold);
    }
    if (rep.verdict == Verdict::singular) {
      EXPECT_GT(rep.sup_estimate, rep.threshold);
    }
    loose_regular += regularity_check(h, E, 0.05, Point{0}).verdict == Verdict::regular;
  }
  EXPECT_GT(loose_regular, 0u);
}

TEST(Regularity, FreeOperatorNeverRegularAtLargeGamma) {
  const std::vector<double> energies{-0.5, 0.1, 0.7};
  const auto est = regularity_probability(PotentialSpec::uniform(0, 1), 1, 11, 0.0, energies, 50.0, 3, 1);
  EXPECT_EQ(est.n_regular, 0u);
  EXPECT_EQ(est.probability.estimate, 0.0);
  EXPECT_THROW(regularity_probability(PotentialSpec::uniform(0, 1), 1, 11, 0.0, energies, 50.0, 0, 1),
               std::invalid_argument);
}

TEST(Regularity, EstimateAndWilsonWidth) {
  std::vector<double> energies;
  for (int i = 0; i <= 8; ++i) energies.push_back(-1.0 + 0.25 * i);
  const std::size_t n = 60;
  const auto est = regularity_probability(PotentialSpec::uniform(-0.5, 0.5), 1, 13, 8.0, energies, 0.5, n, 5, 2.0);
  EXPECT_GE(est.probability.estimate, 0.0);
  EXPECT_LE(est.probability.estimate, 1.0);
  EXPECT_LE(est.probability.hi - est.probability.lo, 2.0 * 1.96 / std::sqrt(static_cast<double>(n)));
  EXPECT_EQ(est.n, n);
  EXPECT_EQ(est.n_regular + est.n_undecided + est.n_singular, n);
  EXPECT_DOUBLE_EQ(est.target, 1.0 - std::pow(13.0, -2.0));
}
