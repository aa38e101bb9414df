#pragma once

#include <Eigen/Dense>

#include "splod/fem.hpp"
#include "splod/legendre.hpp"

namespace splod {

/// Conforming bubble functions b_{j,T} in H^1_0(T) with
/// Pi_H b_{j,T} = Lambda_{j,T}, built from the ansatz
/// b = sum_i c_i I_h(theta Lambda_i) where theta is the product of the
/// element's four corner Q1 hats. On the uniform grid theta and the
/// Legendre factors separate per axis, so the whole construction
/// reduces to a (p+1) x (p+1) system per axis; one set of tables
/// serves all elements up to translation and a 1/H scale.
class BubbleSet {
public:
  static BubbleSet build(const LegendreBasis& basis,
                         const CartesianMesh& coarse,
                         const CartesianMesh& fine);

  int p() const { return p_; }
  int m() const { return m_; }
  int coarse_level() const { return coarse_level_; }
  int fine_level() const { return fine_level_; }

  /// Moment matrix G(k,i) = integral of I_h(theta Lambda_i) Lambda_k
  /// over the unit element.
  const Eigen::MatrixXd& moment_matrix() const { return G_; }
  double condition_estimate() const { return cond_; }

  /// Separable nodal pattern: b_{j,T} at element-local node (kx,ky)
  /// equals factor()(kx, deg_x(j)) * factor()(ky, deg_y(j)) / H.
  const Eigen::MatrixXd& factor() const { return bx_; }

  /// Materializes b_{j,T} on the fine mesh (exact zeros outside T).
  FineField field(ElementId T, int j, const CartesianMesh& coarse,
                  const CartesianMesh& fine) const;
  SparseField sparse_field(ElementId T, int j, const CartesianMesh& coarse,
                           const CartesianMesh& fine) const;

  /// values += sum_j block[j] * b_{j,T}; skips exact-zero blocks so
  /// structural support stays sharp.
  void add_block(Eigen::VectorXd& values, ElementId T,
                 const Eigen::VectorXd& block, const CartesianMesh& coarse,
                 const CartesianMesh& fine) const;

private:
  int p_ = 0;
  int m_ = 0;
  int coarse_level_ = 0;
  int fine_level_ = 0;
  Eigen::MatrixXd G_;
  Eigen::MatrixXd bx_; // (m+1) x (p+1)
  double cond_ = 0.0;
};

/// Bubble operator B_H: maps Legendre coefficients (or the projection
/// of a fine field) into the span of the bubbles.
FineField apply_bh(const CoarseCoeffVector& c, const BubbleSet& bubbles,
                   const CartesianMesh& coarse, const CartesianMesh& fine);
FineField apply_bh(const FineField& v, const BubbleSet& bubbles,
                   const CartesianMesh& coarse, const CartesianMesh& fine);

/// Averaging quasi-interpolation I_H = E_H Pi_H^0: element means are
/// averaged to the coarse nodes (zero on boundary nodes) and
/// Q1-interpolated onto the fine mesh.
FineField apply_ih(const FineField& v, const CartesianMesh& coarse,
                   const CartesianMesh& fine);

/// Stabilizing projection P_H v = I_H v + B_H(v - I_H v).
FineField apply_ph(const FineField& v, const BubbleSet& bubbles,
                   const CartesianMesh& coarse, const CartesianMesh& fine);

/// Immutable discretization context shared across the pipeline.
struct Spaces {
  CartesianMesh coarse;
  CartesianMesh fine;
  LegendreBasis basis;
  BubbleSet bubbles;

  static Spaces create(int coarse_level, int fine_level, int p);

  int m() const { return 1 << (fine.level() - coarse.level()); }
  double H() const { return coarse.h(); }
  int n_per_elem() const { return basis.size(); }
  std::int64_t basis_count() const {
    return coarse.cell_count() * basis.size();
  }
};

} // namespace splod
