#include "splod/fem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <string>

#include "splod/errors.hpp"

namespace splod {

Eigen::Matrix4d q1_stiffness_element() {
  Eigen::Matrix4d K;
  K << 4, -1, -2, -1, //
      -1, 4, -1, -2,  //
      -2, -1, 4, -1,  //
      -1, -2, -1, 4;
  return K / 6.0;
}

Eigen::Matrix4d q1_mass_element() {
  Eigen::Matrix4d M;
  M << 4, 2, 1, 2, //
      2, 4, 2, 1,  //
      1, 2, 4, 2,  //
      2, 1, 2, 4;
  return M / 36.0;
}

namespace {

inline std::array<int, 4> cell_nodes(const CartesianMesh& mesh, int ci,
                                     int cj) {
  return {mesh.node_index(ci, cj), mesh.node_index(ci + 1, cj),
          mesh.node_index(ci + 1, cj + 1), mesh.node_index(ci, cj + 1)};
}

SparseMat assemble(const CartesianMesh& fine, const Eigen::Matrix4d& local,
                   const std::function<double(int, int)>& cell_weight) {
  const int n = fine.cells_per_side();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(n) * n * 16);
  for (int cj = 0; cj < n; ++cj) {
    for (int ci = 0; ci < n; ++ci) {
      const auto nodes = cell_nodes(fine, ci, cj);
      const double w = cell_weight(ci, cj);
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          trips.emplace_back(nodes[a], nodes[b], w * local(a, b));
        }
      }
    }
  }
  SparseMat K(fine.node_count(), fine.node_count());
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

} // namespace

SparseMat assemble_stiffness(const CartesianMesh& fine,
                             const CoefficientField& A) {
  if (A.level > fine.level()) {
    throw ArgumentError("assemble_stiffness: coefficient finer than mesh");
  }
  const Eigen::Matrix4d local = q1_stiffness_element();
  return assemble(fine, local, [&](int ci, int cj) {
    return A.value_on(fine, {ci, cj});
  });
}

SparseMat assemble_mass(const CartesianMesh& fine) {
  const Eigen::Matrix4d local = q1_mass_element();
  const double h2 = fine.h() * fine.h();
  return assemble(fine, local, [h2](int, int) { return h2; });
}

DofSet DofSet::create(std::int64_t total_nodes, std::vector<int> nodes) {
  DofSet d;
  d.nodes = std::move(nodes);
  d.local_of_node.assign(std::size_t(total_nodes), -1);
  for (std::size_t k = 0; k < d.nodes.size(); ++k) {
    d.local_of_node[std::size_t(d.nodes[k])] = int(k);
  }
  return d;
}

SparseMat restrict_matrix(const SparseMat& K, const DofSet& dofs) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int local = 0; local < dofs.size(); ++local) {
    const int global = dofs.nodes[std::size_t(local)];
    for (SparseMat::InnerIterator it(K, global); it; ++it) {
      const int other = dofs.local_of_node[std::size_t(it.row())];
      if (other >= 0) {
        trips.emplace_back(other, local, it.value());
      }
    }
  }
  SparseMat out(dofs.size(), dofs.size());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

Eigen::VectorXd restrict_vector(const Eigen::VectorXd& v, const DofSet& dofs) {
  Eigen::VectorXd out(dofs.size());
  for (int k = 0; k < dofs.size(); ++k) {
    out[k] = v[dofs.nodes[std::size_t(k)]];
  }
  return out;
}

void scatter(const Eigen::VectorXd& local, const DofSet& dofs,
             Eigen::VectorXd& global) {
  for (int k = 0; k < dofs.size(); ++k) {
    global[dofs.nodes[std::size_t(k)]] = local[k];
  }
}

Eigen::VectorXd solve_spd(const SparseMat& K, const Eigen::VectorXd& b,
                          const SpdOptions& options) {
  const Eigen::Index n = K.rows();
  if (b.size() != n) {
    throw ArgumentError("solve_spd: dimension mismatch");
  }
  const double bnorm = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (bnorm == 0.0) {
    return x;
  }
  Eigen::VectorXd invdiag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = K.coeff(i, i);
    invdiag[i] = (d > 0.0) ? 1.0 / d : 1.0;
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = invdiag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  const long cap =
      std::max<long>(50, long(options.cap_factor * std::sqrt(double(n))) + 1);
  for (long it = 0; it < cap; ++it) {
    const Eigen::VectorXd Kp = K * p;
    const double pKp = p.dot(Kp);
    if (!(pKp > 0.0)) {
      throw NumericError("solve_spd: matrix not positive definite");
    }
    const double alpha = rz / pKp;
    x += alpha * p;
    r -= alpha * Kp;
    if (r.norm() <= options.rel_tol * bnorm) {
      return x;
    }
    z = invdiag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw NumericError("solve_spd: no convergence within " +
                     std::to_string(cap) + " iterations, residual " +
                     std::to_string(r.norm() / bnorm));
}

namespace {

SaddleSolution solve_saddle_direct(const SparseMat& K, const SparseMat& C,
                                   const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& g,
                                   const SaddleOptions& options) {
  (void)options;
  const Eigen::Index n = K.rows();
  const Eigen::Index nc = C.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(K.nonZeros()) + 2 * std::size_t(C.nonZeros()));
  for (int col = 0; col < K.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(K, col); it; ++it) {
      trips.emplace_back(int(it.row()), col, it.value());
    }
  }
  for (int col = 0; col < C.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(C, col); it; ++it) {
      trips.emplace_back(int(n + it.row()), col, it.value());
      trips.emplace_back(col, int(n + it.row()), it.value());
    }
  }
  SparseMat KKT(n + nc, n + nc);
  KKT.setFromTriplets(trips.begin(), trips.end());
  KKT.makeCompressed();
  Eigen::SparseLU<SparseMat> lu;
  lu.compute(KKT);
  if (lu.info() != Eigen::Success) {
    throw NumericError(
        "solve_saddle: KKT factorization failed (rank-deficient "
        "constraint block?)");
  }
  Eigen::VectorXd rhs(n + nc);
  rhs.head(n) = r;
  rhs.tail(nc) = g;
  const Eigen::VectorXd sol = lu.solve(rhs);
  SaddleSolution out;
  out.x = sol.head(n);
  out.lambda = sol.tail(nc);
  return out;
}

SaddleSolution solve_saddle_schur(const SparseMat& K, const SparseMat& C,
                                  const Eigen::VectorXd& r,
                                  const Eigen::VectorXd& g,
                                  const SaddleOptions& options) {
  // Range-space iteration: CG on S lambda = C K^-1 r - g with
  // S = C K^-1 C^T, inner solves by the SPD solver.
  const Eigen::Index nc = C.rows();
  const SparseMat Ct = C.transpose();
  const auto apply_S = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return C * solve_spd(K, Ct * y, options.inner);
  };
  const Eigen::VectorXd rhs = C * solve_spd(K, r, options.inner) - g;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nc);
  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0.0) {
    Eigen::VectorXd res = rhs;
    Eigen::VectorXd p = res;
    double rr = res.squaredNorm();
    const long cap = std::max<long>(
        50, long(options.inner.cap_factor * std::sqrt(double(nc))) + 1);
    bool converged = false;
    for (long it = 0; it < cap; ++it) {
      const Eigen::VectorXd Sp = apply_S(p);
      const double pSp = p.dot(Sp);
      if (!(pSp > 0.0)) {
        throw NumericError(
            "solve_saddle: Schur complement not positive definite "
            "(rank-deficient constraint block?)");
      }
      const double alpha = rr / pSp;
      lambda += alpha * p;
      res -= alpha * Sp;
      const double rr_next = res.squaredNorm();
      if (std::sqrt(rr_next) <= 1e-12 * rhs_norm) {
        converged = true;
        break;
      }
      p = res + (rr_next / rr) * p;
      rr = rr_next;
    }
    if (!converged) {
      throw NumericError("solve_saddle: Schur iteration did not converge");
    }
  }
  SaddleSolution out;
  out.lambda = lambda;
  out.x = solve_spd(K, r - Ct * lambda, options.inner);
  return out;
}

} // namespace

SaddleSolution solve_saddle(const SparseMat& K, const SparseMat& C,
                            const Eigen::VectorXd& r, const Eigen::VectorXd& g,
                            const SaddleOptions& options) {
  const Eigen::Index n = K.rows();
  const Eigen::Index nc = C.rows();
  if (r.size() != n || g.size() != nc || (nc > 0 && C.cols() != n)) {
    throw ArgumentError("solve_saddle: dimension mismatch");
  }
  if (nc == 0) {
    SaddleSolution out;
    out.x = solve_spd(K, r, {1e-10, options.inner.cap_factor});
    out.lambda = Eigen::VectorXd(0);
    return out;
  }
  SaddleSolution sol = (n + nc <= options.direct_threshold)
                           ? solve_saddle_direct(K, C, r, g, options)
                           : solve_saddle_schur(K, C, r, g, options);
  // Residuals are measured against the data, not the solution: a
  // singular factorization blows the solution up and would otherwise
  // mask an unsatisfied system.
  const double scale = std::max({r.norm(), g.norm(), 1e-300});
  const double res1 = (K * sol.x + C.transpose() * sol.lambda - r).norm();
  const double res2 = (C * sol.x - g).norm();
  if (!sol.x.allFinite() || !sol.lambda.allFinite() ||
      res1 > options.residual_tol * scale ||
      res2 > options.residual_tol * scale) {
    throw NumericError("solve_saddle: block residuals " +
                       std::to_string(res1 / scale) + ", " +
                       std::to_string(res2 / scale) +
                       " exceed tolerance (rank-deficient constraints?)");
  }
  return sol;
}

FineField reference_solve(const CoefficientField& A, const FineField& f,
                          const CartesianMesh& fine,
                          const SpdOptions& options) {
  if (f.level != fine.level()) {
    throw ArgumentError("reference_solve: right-hand side level mismatch");
  }
  const SparseMat K = assemble_stiffness(fine, A);
  const SparseMat M = assemble_mass(fine);
  const int n = fine.cells_per_side();
  std::vector<int> interior;
  interior.reserve(std::size_t(n - 1) * (n - 1));
  for (int gy = 1; gy < n; ++gy) {
    for (int gx = 1; gx < n; ++gx) {
      interior.push_back(fine.node_index(gx, gy));
    }
  }
  const DofSet dofs = DofSet::create(fine.node_count(), std::move(interior));
  const SparseMat K_II = restrict_matrix(K, dofs);
  const Eigen::VectorXd b = restrict_vector(M * f.values, dofs);
  const Eigen::VectorXd x = solve_spd(K_II, b, options);
  FineField u = zero_field(fine);
  scatter(x, dofs, u.values);
  return u;
}

double energy_norm(const FineField& v, const SparseMat& K) {
  if (v.values.size() != K.rows()) {
    throw ArgumentError("energy_norm: dimension mismatch");
  }
  const double q = v.values.dot(K * v.values);
  const double scale = v.values.squaredNorm();
  if (q < -1e-12 * std::max(scale, 1.0)) {
    throw NumericError("energy_norm: quadratic form is negative");
  }
  return std::sqrt(std::max(q, 0.0));
}

double l2_norm(const FineField& v, const SparseMat& M) {
  return energy_norm(v, M);
}

namespace {

double form_on_cells(const CartesianMesh& fine, const Eigen::Matrix4d& local,
                     const std::function<double(int, int)>& weight,
                     const FineField& v, const std::vector<ElementId>& cells) {
  double q = 0.0;
  for (const ElementId& cell : cells) {
    const auto nodes = cell_nodes(fine, cell.i, cell.j);
    Eigen::Vector4d loc;
    for (int a = 0; a < 4; ++a) {
      loc[a] = v.values[nodes[a]];
    }
    q += weight(cell.i, cell.j) * loc.dot(local * loc);
  }
  return std::sqrt(std::max(q, 0.0));
}

} // namespace

double energy_norm_on_cells(const CartesianMesh& fine,
                            const CoefficientField* A, const FineField& v,
                            const std::vector<ElementId>& cells) {
  const Eigen::Matrix4d local = q1_stiffness_element();
  return form_on_cells(
      fine, local,
      [&](int ci, int cj) {
        return A ? A->value_on(fine, {ci, cj}) : 1.0;
      },
      v, cells);
}

double l2_norm_on_cells(const CartesianMesh& fine, const FineField& v,
                        const std::vector<ElementId>& cells) {
  const Eigen::Matrix4d local = q1_mass_element();
  const double h2 = fine.h() * fine.h();
  return form_on_cells(
      fine, local, [h2](int, int) { return h2; }, v, cells);
}

FineSystem FineSystem::create(const CartesianMesh& fine,
                              const CoefficientField& A) {
  return {fine, assemble_stiffness(fine, A), assemble_mass(fine)};
}

} // namespace splod
