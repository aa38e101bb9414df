#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splod/field.hpp"
#include "splod/mesh.hpp"

namespace splod {

/// Gauss-Legendre rule on [0,1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
GaussRule gauss_rule(int points);

/// Value of the L2(0,1)-orthonormal shifted Legendre polynomial of
/// degree d at t: sqrt(2d+1) * P_d(2t - 1).
double legendre01(int d, double t);

/// Per-element tensor-product Legendre space of coordinate degree p.
/// Basis functions are L2-orthonormal on each element; index j (0-based
/// here, j+1 in reports) maps lexicographically to degrees
/// (dx, dy) = (j / (p+1), j % (p+1)), so j = 0 is the constant.
struct LegendreBasis {
  int p = 0;

  int size() const { return (p + 1) * (p + 1); } // N = (p+1)^2
  int deg_x(int j) const { return j / (p + 1); }
  int deg_y(int j) const { return j % (p + 1); }
  int index(int dx, int dy) const { return dx * (p + 1) + dy; }
};

/// Element-local coupling tables between the fine Q1 grid of an
/// element subdivided m times per axis and the Legendre basis, all on
/// the unit reference element. Everything scales by explicit powers of
/// H, so one table serves every element of every mesh with the same
/// (p, m).
struct ElementTables {
  int p = 0;
  int m = 1;
  /// v(k, d) = integral over [0,1] of hat_k * legendre01(d), where
  /// hat_k is the 1D nodal hat on the m-point subdivision.
  Eigen::MatrixXd v;
  /// e(k, d) = legendre01(d, k / m).
  Eigen::MatrixXd e;
  /// Whether the element-interior rows of v (k = 1..m-1) span all
  /// degrees; this makes patch moment constraints full row rank.
  bool interior_moments_full_rank = false;
};

/// Shared cache, built on demand; safe for concurrent use.
const ElementTables& element_tables(int p, int m);

/// Legendre coefficient vector over all elements of a coarse mesh,
/// blocked by element (row-major) then by basis index.
struct CoarseCoeffVector {
  int p = 0;
  int coarse_level = 0;
  Eigen::VectorXd values; // length M * N

  int block(const CartesianMesh& coarse, ElementId T) const {
    return coarse.cell_index(T) * (p + 1) * (p + 1);
  }
};

CoarseCoeffVector zero_coeffs(const LegendreBasis& basis,
                              const CartesianMesh& coarse);

/// Value of Lambda_{j,T} at (x, y); requires (x, y) in the closed
/// element.
double legendre_eval(const LegendreBasis& basis, int j, ElementId T,
                     const CartesianMesh& coarse, double x, double y);

/// Element-wise L2-projection onto the Legendre space: coefficients
/// c_{j,T} = integral over T of v * Lambda_{j,T}, exact for fine Q1
/// fields.
CoarseCoeffVector project_l2(const FineField& v, const LegendreBasis& basis,
                             const CartesianMesh& coarse);

/// Fine Q1 nodal interpolant of the (discontinuous) coefficient
/// expansion; interface nodes take the value of the east/north owner.
/// This single-valued collapse is for plotting and export; it is never
/// used in assembly.
FineField embed_vh(const CoarseCoeffVector& c, const CartesianMesh& coarse,
                   const CartesianMesh& fine);

/// Duplicated-evaluation representation on one element: the expansion's
/// own nodal values on the closed element, as an (m+1) x (m+1) block
/// indexed (kx, ky). Moment-exact per element for coordinate degree
/// <= 1, unlike the single-valued collapse.
Eigen::MatrixXd embed_vh_on_element(const CoarseCoeffVector& c, ElementId T,
                                    const CartesianMesh& coarse,
                                    const CartesianMesh& fine);

/// Element averages of a fine field.
std::vector<double> project_pw_const(const FineField& v,
                                     const CartesianMesh& coarse);

} // namespace splod
