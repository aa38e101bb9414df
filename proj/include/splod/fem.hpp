#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "splod/coefficient.hpp"
#include "splod/field.hpp"
#include "splod/mesh.hpp"

namespace splod {

using SparseMat = Eigen::SparseMatrix<double>;

/// Analytic element matrices for the Q1 quad. The stiffness matrix is
/// scale invariant in 2D; the mass matrix carries h^2. Local node
/// order: (0,0), (1,0), (1,1), (0,1).
Eigen::Matrix4d q1_stiffness_element();
Eigen::Matrix4d q1_mass_element();

/// Coefficient-weighted stiffness over the full node set (no boundary
/// conditions applied). Exact: analytic element matrix times the cell
/// value of the piecewise-constant coefficient.
SparseMat assemble_stiffness(const CartesianMesh& fine,
                             const CoefficientField& A);

/// Consistent Q1 mass matrix over the full node set.
SparseMat assemble_mass(const CartesianMesh& fine);

/// Subset of node indices acting as unknowns, with a global-to-local
/// map for restriction and scatter.
struct DofSet {
  std::vector<int> nodes;
  std::vector<int> local_of_node; // -1 where not a dof

  static DofSet create(std::int64_t total_nodes, std::vector<int> nodes);
  int size() const { return int(nodes.size()); }
};

SparseMat restrict_matrix(const SparseMat& K, const DofSet& dofs);
Eigen::VectorXd restrict_vector(const Eigen::VectorXd& v, const DofSet& dofs);
void scatter(const Eigen::VectorXd& local, const DofSet& dofs,
             Eigen::VectorXd& global);

struct SpdOptions {
  double rel_tol = 1e-10;
  double cap_factor = 20.0; // iteration cap = cap_factor * sqrt(n)
};

/// Diagonally preconditioned conjugate gradients. Deterministic;
/// throws NumericError with the residual on non-convergence.
Eigen::VectorXd solve_spd(const SparseMat& K, const Eigen::VectorXd& b,
                          const SpdOptions& options = {});

struct SaddleOptions {
  /// Direct sparse factorization of the KKT system below this many
  /// total unknowns; Schur-complement CG on the multiplier above it.
  std::int64_t direct_threshold = 200000;
  double residual_tol = 1e-9;
  SpdOptions inner = {1e-12, 40.0};
};

struct SaddleSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
};

/// Solves K x + C^T lambda = r, C x = g for SPD K and full-row-rank C.
SaddleSolution solve_saddle(const SparseMat& K, const SparseMat& C,
                            const Eigen::VectorXd& r, const Eigen::VectorXd& g,
                            const SaddleOptions& options = {});

/// Galerkin Q1 solution of the model problem with homogeneous
/// Dirichlet data; the load is (f, v) with f given as a fine field.
FineField reference_solve(const CoefficientField& A, const FineField& f,
                          const CartesianMesh& fine,
                          const SpdOptions& options = {});

double energy_norm(const FineField& v, const SparseMat& K);
double l2_norm(const FineField& v, const SparseMat& M);

/// Energy (semi)norm restricted to a set of fine cells; `A` may be
/// null for the unweighted H1 seminorm.
double energy_norm_on_cells(const CartesianMesh& fine,
                            const CoefficientField* A, const FineField& v,
                            const std::vector<ElementId>& cells);
double l2_norm_on_cells(const CartesianMesh& fine, const FineField& v,
                        const std::vector<ElementId>& cells);

/// Fine stiffness and mass for one (mesh, coefficient) pair, shared by
/// solves, norms, and Galerkin assembly.
struct FineSystem {
  CartesianMesh fine;
  SparseMat K;
  SparseMat M;

  static FineSystem create(const CartesianMesh& fine,
                           const CoefficientField& A);
};

} // namespace splod
