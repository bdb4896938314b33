#pragma once

// H = -Delta-type hopping (+1 on nearest neighbors) + lambda V on a box,
// with Dirichlet or periodic boundary conditions.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson/lattice.hpp"
#include "anderson/potential.hpp"
#include "anderson/sparse.hpp"

namespace anderson {

enum class BoundaryCondition { dirichlet, periodic };

inline std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::dirichlet ? "dirichlet" : "periodic";
}

inline BoundaryCondition boundary_from_string(const std::string& s) {
  if (s == "dirichlet") return BoundaryCondition::dirichlet;
  if (s == "periodic") return BoundaryCondition::periodic;
  throw std::invalid_argument("unknown boundary condition '" + s + "'");
}

class Hamiltonian {
 public:
  Hamiltonian(LatticeBox box, double coupling, BoundaryCondition bc, std::vector<double> potential,
              SymmetricSparse matrix)
      : box_(std::move(box)), coupling_(coupling), bc_(bc), potential_(std::move(potential)),
        matrix_(std::move(matrix)) {}

  const LatticeBox& box() const { return box_; }
  double coupling() const { return coupling_; }
  BoundaryCondition bc() const { return bc_; }
  const std::vector<double>& potential() const { return potential_; }
  const SymmetricSparse& matrix() const { return matrix_; }
  std::size_t size() const { return matrix_.size(); }

 private:
  LatticeBox box_;
  double coupling_;
  BoundaryCondition bc_;
  std::vector<double> potential_;
  SymmetricSparse matrix_;
};

/// Hopping part only (the free operator on the box).
inline SymmetricSparse adjacency(const LatticeBox& box, BoundaryCondition bc) {
  SymmetricSparse m(box.size());
  const bool periodic = bc == BoundaryCondition::periodic;
  for (std::size_t i = 0; i < box.size(); ++i) {
    for (int a = 0; a < box.dim(); ++a) {
      if (auto j = box.neighbor(i, a, +1, periodic)) m.add_symmetric(i, *j, 1.0);
    }
  }
  return m;
}

inline Hamiltonian assemble(const LatticeBox& box, const DisorderRealization& r, double lambda,
                            BoundaryCondition bc) {
  if (!(r.box == box) || r.values.size() != box.size()) {
    throw std::invalid_argument("assemble: realization does not belong to this box");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("assemble: coupling must be non-negative");
  SymmetricSparse m = adjacency(box, bc);
  for (std::size_t i = 0; i < box.size(); ++i) m.add_diagonal(i, lambda * r.values[i]);
  return Hamiltonian(box, lambda, bc, r.values, std::move(m));
}

/// The model parameters shared by every experiment.
struct ModelSpec {
  int dim = 1;
  int side = 1;
  double lambda = 1.0;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  PotentialSpec potential;

  LatticeBox box() const { return LatticeBox::unit_frame(dim, side); }
  bool operator==(const ModelSpec&) const = default;
};

inline Hamiltonian sample_hamiltonian(const ModelSpec& model, std::uint64_t seed, std::uint64_t index) {
  const auto box = model.box();
  return assemble(box, sample_potential(model.potential, box, seed, index), model.lambda, model.bc);
}

/// Realization index -> operator.
using HamiltonianStream = std::function<Hamiltonian(std::uint64_t)>;

inline HamiltonianStream model_stream(ModelSpec model, std::uint64_t seed) {
  return [model = std::move(model), seed](std::uint64_t index) { return sample_hamiltonian(model, seed, index); };
}

/// H_{k,p}: the operator on a sub-box D with periodic bc, same potential.
inline Hamiltonian block_operator(const DisorderRealization& parent, const LatticeBox& block,
                                  double lambda, BoundaryCondition bc = BoundaryCondition::periodic) {
  return assemble(block, restrict_realization(parent, block), lambda, bc);
}

/// Parent-indexed operator in which every block is replaced by its own
/// periodic operator and the remainder by the Dirichlet restriction of
/// `parent`: all hopping across block boundaries is removed.
inline Hamiltonian assemble_decoupled(const Hamiltonian& parent, const Decomposition& dec) {
  const auto& box = parent.box();
  if (!(dec.parent == box)) throw std::invalid_argument("assemble_decoupled: decomposition mismatch");
  SymmetricSparse m(box.size());
  for (std::size_t b = 0; b < dec.block_count(); ++b) {
    const auto& block = dec.blocks[b];
    const auto local = adjacency(block, BoundaryCondition::periodic);
    std::vector<std::size_t> map(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) map[i] = *box.index_of(block.site(i));
    for (std::size_t i = 0; i < block.size(); ++i) {
      m.add_diagonal(map[i], local.diagonal(i));
      for (const auto& e : local.row(i)) {
        if (e.col > i) m.add_symmetric(map[i], map[e.col], e.value);
      }
    }
  }
  const auto rest = parent.matrix().restricted(dec.remainder);
  for (std::size_t i = 0; i < dec.remainder.size(); ++i) {
    for (const auto& e : rest.row(i)) {
      if (e.col > i) m.add_symmetric(dec.remainder[i], dec.remainder[e.col], e.value);
    }
  }
  for (std::size_t i = 0; i < box.size(); ++i) {
    m.add_diagonal(i, parent.coupling() * parent.potential()[i]);
  }
  return Hamiltonian(box, parent.coupling(), parent.bc(), parent.potential(), std::move(m));
}

}  // namespace anderson
