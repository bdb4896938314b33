#pragma once

// Seeded generators for the property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "anderson/hamiltonian.hpp"

namespace testing_support {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::uint64_t seed() { return eng_(); }

  anderson::LatticeBox box(int max_dim, int max_side) {
    const int d = integer(1, max_dim);
    const int L = integer(1, max_side);
    anderson::Point origin(static_cast<std::size_t>(d));
    for (auto& c : origin) c = integer(-5, 5);
    return anderson::LatticeBox::from_origin(d, L, origin);
  }

  std::vector<double> vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline anderson::Hamiltonian random_hamiltonian(Gen& g, int dim, int side, double lambda,
                                                anderson::BoundaryCondition bc) {
  anderson::ModelSpec m{dim, side, lambda, bc, anderson::PotentialSpec::uniform(-0.5, 0.5)};
  return anderson::sample_hamiltonian(m, g.seed(), 0);
}

}  // namespace testing_support
