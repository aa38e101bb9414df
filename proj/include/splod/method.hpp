#pragma once

#include <string>

#include "splod/corrector.hpp"

namespace splod {

/// Multiscale basis as columns of a sparse matrix; column T*N + j is
/// the basis function centered at element T with Legendre index j.
struct MultiscaleBasis {
  std::string tag; // splod | plod | prototype
  int p = 0;
  int ell = 0;
  SparseMat phi; // fine node count x (M * N)
  long corrector_solves = 0;
};

/// Stabilized localized basis (1 - C^ell) P_H b_{j,T}. Only the
/// zero-order functions pick up the stabilization; their support grows
/// by one element layer.
MultiscaleBasis build_basis_splod(const Spaces& spaces,
                                  const CoefficientField& A, int ell,
                                  int threads = 1,
                                  const SaddleOptions& options = {});

/// Baseline localization: each basis function solves the saddle
/// operator on its own patch with a unit moment constraint.
MultiscaleBasis build_basis_plod(const Spaces& spaces,
                                 const CoefficientField& A, int ell,
                                 int threads = 1,
                                 const SaddleOptions& options = {});

/// Non-localized basis (1 - C) b_{j,T} with global corrections.
MultiscaleBasis build_basis_prototype(const Spaces& spaces,
                                      const CoefficientField& A,
                                      int threads = 1,
                                      const SaddleOptions& options = {});

struct MultiscaleSolution {
  std::string tag;
  int p = 0;
  int ell = 0;
  Eigen::VectorXd coeffs;
  FineField u;
  double cond_estimate = 0.0;
  double solve_residual = 0.0;
  long corrector_solves = 0;
};

/// Galerkin solve over the multiscale basis.
MultiscaleSolution coarse_solve(const Spaces& spaces, const FineSystem& system,
                                const MultiscaleBasis& basis,
                                const FineField& f);

struct ErrorRecord {
  double energy_rel = 0.0;
  double l2_rel = 0.0;
};

ErrorRecord evaluate_errors(const FineField& u, const FineField& u_ref,
                            const FineSystem& system);

/// Default oversampling rule
/// ell(H) = ceil((p+2) * (log2(1/H) + 1) / 3) + p.
int ell_rule(int p, int coarse_level);

} // namespace splod
