#include "splod/operators.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "splod/errors.hpp"

namespace splod {

BubbleSet BubbleSet::build(const LegendreBasis& basis,
                           const CartesianMesh& coarse,
                           const CartesianMesh& fine) {
  if (fine.level() <= coarse.level()) {
    throw ArgumentError("BubbleSet: fine mesh must refine the coarse mesh");
  }
  BubbleSet set;
  set.p_ = basis.p;
  set.m_ = 1 << (fine.level() - coarse.level());
  set.coarse_level_ = coarse.level();
  set.fine_level_ = fine.level();
  const int m = set.m_;
  const int nd = basis.p + 1;
  const ElementTables& tab = element_tables(basis.p, m);

  // 1D factor of theta on the unit element: q(t) = t^2 (1-t)^2.
  Eigen::VectorXd q(m + 1);
  for (int k = 0; k <= m; ++k) {
    const double t = double(k) / m;
    q[k] = t * t * (1.0 - t) * (1.0 - t);
  }
  // g1(a,b) = integral of I_h(q * legendre01(b)) * legendre01(a).
  Eigen::MatrixXd qe = q.asDiagonal() * tab.e; // nodal values of q*Lambda_b
  Eigen::MatrixXd g1 = tab.v.transpose() * qe; // (p+1) x (p+1)

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g1, Eigen::ComputeThinU |
                                                Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond1 =
      (sv(nd - 1) > 0.0) ? sv(0) / sv(nd - 1)
                         : std::numeric_limits<double>::infinity();
  set.cond_ = cond1 * cond1; // Kronecker square
  if (!(set.cond_ < 1e12)) {
    throw NumericError(
        "BubbleSet: bubble moment system is numerically singular "
        "(condition estimate " +
        std::to_string(set.cond_) +
        "); use a finer fine mesh for this polynomial degree");
  }
  const Eigen::MatrixXd g1inv =
      svd.solve(Eigen::MatrixXd::Identity(nd, nd));
  set.bx_ = qe * g1inv; // (m+1) x (p+1), column a = 1D factor of degree a
  // Full moment matrix, Kronecker square of g1 in the (dx,dy) layout.
  const int N = basis.size();
  set.G_ = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < N; ++i) {
      set.G_(k, i) = g1(basis.deg_x(k), basis.deg_x(i)) *
                     g1(basis.deg_y(k), basis.deg_y(i));
    }
  }
  return set;
}

FineField BubbleSet::field(ElementId T, int j, const CartesianMesh& coarse,
                           const CartesianMesh& fine) const {
  FineField out = zero_field(fine);
  Eigen::VectorXd block = Eigen::VectorXd::Zero(LegendreBasis{p_}.size());
  block[j] = 1.0;
  add_block(out.values, T, block, coarse, fine);
  return out;
}

SparseField BubbleSet::sparse_field(ElementId T, int j,
                                    const CartesianMesh& coarse,
                                    const CartesianMesh& fine) const {
  const LegendreBasis basis{p_};
  const int m = m_;
  const double invH = 1.0 / coarse.h();
  const int dx = basis.deg_x(j), dy = basis.deg_y(j);
  SparseField out;
  out.idx.reserve(std::size_t(m - 1) * (m - 1));
  out.val.reserve(out.idx.capacity());
  for (int ky = 1; ky < m; ++ky) {
    for (int kx = 1; kx < m; ++kx) {
      out.idx.push_back(fine.node_index(T.i * m + kx, T.j * m + ky));
      out.val.push_back(invH * bx_(kx, dx) * bx_(ky, dy));
    }
  }
  return out;
}

void BubbleSet::add_block(Eigen::VectorXd& values, ElementId T,
                          const Eigen::VectorXd& block,
                          const CartesianMesh& coarse,
                          const CartesianMesh& fine) const {
  if (block.isZero(0.0)) {
    return; // keep exact-zero support
  }
  const LegendreBasis basis{p_};
  const int nd = p_ + 1;
  const int m = m_;
  Eigen::MatrixXd coeff(nd, nd);
  for (int dx = 0; dx < nd; ++dx) {
    for (int dy = 0; dy < nd; ++dy) {
      coeff(dx, dy) = block[basis.index(dx, dy)];
    }
  }
  const Eigen::MatrixXd nodal =
      (bx_ * coeff * bx_.transpose()) / coarse.h();
  for (int ky = 1; ky < m; ++ky) {
    for (int kx = 1; kx < m; ++kx) {
      values[fine.node_index(T.i * m + kx, T.j * m + ky)] += nodal(kx, ky);
    }
  }
}

FineField apply_bh(const CoarseCoeffVector& c, const BubbleSet& bubbles,
                   const CartesianMesh& coarse, const CartesianMesh& fine) {
  if (c.coarse_level != coarse.level() || c.p != bubbles.p()) {
    throw ArgumentError("apply_bh: coefficient layout mismatch");
  }
  const int N = LegendreBasis{c.p}.size();
  FineField out = zero_field(fine);
  const int nc = coarse.cells_per_side();
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      const ElementId T{ti, tj};
      const Eigen::VectorXd block =
          c.values.segment(c.block(coarse, T), N);
      bubbles.add_block(out.values, T, block, coarse, fine);
    }
  }
  return out;
}

FineField apply_bh(const FineField& v, const BubbleSet& bubbles,
                   const CartesianMesh& coarse, const CartesianMesh& fine) {
  const LegendreBasis basis{bubbles.p()};
  return apply_bh(project_l2(v, basis, coarse), bubbles, coarse, fine);
}

FineField apply_ih(const FineField& v, const CartesianMesh& coarse,
                   const CartesianMesh& fine) {
  if (v.level != fine.level()) {
    throw ArgumentError("apply_ih: field level mismatch");
  }
  const std::vector<double> means = project_pw_const(v, coarse);
  const int nc = coarse.cells_per_side();
  // Coarse node values: average of adjacent element means, zero on the
  // domain boundary.
  Eigen::MatrixXd nodevals = Eigen::MatrixXd::Zero(nc + 1, nc + 1);
  for (int cj = 1; cj < nc; ++cj) {
    for (int ci = 1; ci < nc; ++ci) {
      nodevals(ci, cj) = 0.25 * (means[std::size_t(cj - 1) * nc + (ci - 1)] +
                                 means[std::size_t(cj - 1) * nc + ci] +
                                 means[std::size_t(cj) * nc + (ci - 1)] +
                                 means[std::size_t(cj) * nc + ci]);
    }
  }
  const int m = 1 << (fine.level() - coarse.level());
  FineField out = zero_field(fine);
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      const double v00 = nodevals(ti, tj), v10 = nodevals(ti + 1, tj);
      const double v01 = nodevals(ti, tj + 1), v11 = nodevals(ti + 1, tj + 1);
      if (v00 == 0.0 && v10 == 0.0 && v01 == 0.0 && v11 == 0.0) {
        continue; // keep exact zeros
      }
      const int kx_end = (ti == nc - 1) ? m : m - 1;
      const int ky_end = (tj == nc - 1) ? m : m - 1;
      for (int ky = 0; ky <= ky_end; ++ky) {
        const double eta = double(ky) / m;
        for (int kx = 0; kx <= kx_end; ++kx) {
          const double xi = double(kx) / m;
          out.values[fine.node_index(ti * m + kx, tj * m + ky)] =
              (1 - xi) * (1 - eta) * v00 + xi * (1 - eta) * v10 +
              (1 - xi) * eta * v01 + xi * eta * v11;
        }
      }
    }
  }
  return out;
}

FineField apply_ph(const FineField& v, const BubbleSet& bubbles,
                   const CartesianMesh& coarse, const CartesianMesh& fine) {
  const FineField ih = apply_ih(v, coarse, fine);
  FineField diff{v.level, v.values - ih.values};
  const FineField bh = apply_bh(diff, bubbles, coarse, fine);
  return {v.level, ih.values + bh.values};
}

Spaces Spaces::create(int coarse_level, int fine_level, int p) {
  CartesianMesh coarse = build_mesh(coarse_level);
  CartesianMesh fine = build_mesh(fine_level);
  LegendreBasis basis{p};
  BubbleSet bubbles = BubbleSet::build(basis, coarse, fine);
  return {coarse, fine, basis, std::move(bubbles)};
}

} // namespace splod
