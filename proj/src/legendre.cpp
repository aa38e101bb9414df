#include "splod/legendre.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "splod/errors.hpp"

namespace splod {

FineField interpolate(const CartesianMesh& mesh,
                      const std::function<double(double, double)>& f) {
  FineField out = zero_field(mesh);
  const int np = mesh.nodes_per_side();
  const double h = mesh.h();
  for (int gy = 0; gy < np; ++gy) {
    for (int gx = 0; gx < np; ++gx) {
      out.values[mesh.node_index(gx, gy)] = f(gx * h, gy * h);
    }
  }
  return out;
}

GaussRule gauss_rule(int points) {
  if (points < 1) {
    throw ArgumentError("gauss_rule: need at least one point");
  }
  GaussRule rule;
  rule.x.resize(points);
  rule.w.resize(points);
  const int n = points;
  for (int k = 0; k < (n + 1) / 2; ++k) {
    // Root of P_n on [-1,1] by Newton iteration.
    double x = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int d = 2; d <= n; ++d) {
        const double p2 = ((2 * d - 1) * x * p1 - (d - 1) * p0) / d;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        // One more pass to polish, then stop.
        double q0 = 1.0, q1 = x;
        for (int d = 2; d <= n; ++d) {
          const double q2 = ((2 * d - 1) * x * q1 - (d - 1) * q0) / d;
          q0 = q1;
          q1 = q2;
        }
        dp = n * (x * q1 - q0) / (x * x - 1.0);
        x -= q1 / dp;
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.x[k] = 0.5 * (1.0 - x); // descending root -> ascending point
    rule.x[n - 1 - k] = 0.5 * (1.0 + x);
    rule.w[k] = 0.5 * w;
    rule.w[n - 1 - k] = 0.5 * w;
  }
  if (n == 1) {
    rule.x[0] = 0.5;
    rule.w[0] = 1.0;
  }
  return rule;
}

double legendre01(int d, double t) {
  const double x = 2.0 * t - 1.0;
  double p0 = 1.0, p1 = x;
  if (d == 0) {
    return 1.0;
  }
  for (int k = 2; k <= d; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * d + 1.0) * p1;
}

namespace {

ElementTables build_tables(int p, int m) {
  ElementTables t;
  t.p = p;
  t.m = m;
  t.v = Eigen::MatrixXd::Zero(m + 1, p + 1);
  t.e = Eigen::MatrixXd::Zero(m + 1, p + 1);
  // ceil((p+2)/2)+1 points: exact through degree p+3, past the
  // hat x Legendre integrand of degree p+1.
  const GaussRule rule = gauss_rule((p + 3) / 2 + 1);
  const double hs = 1.0 / m;
  for (int seg = 0; seg < m; ++seg) {
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double s = rule.x[q];           // local coordinate in segment
      const double xi = (seg + s) * hs;     // element coordinate
      const double wq = rule.w[q] * hs;
      for (int d = 0; d <= p; ++d) {
        const double val = legendre01(d, xi);
        t.v(seg, d) += wq * (1.0 - s) * val;
        t.v(seg + 1, d) += wq * s * val;
      }
    }
  }
  for (int k = 0; k <= m; ++k) {
    for (int d = 0; d <= p; ++d) {
      t.e(k, d) = legendre01(d, double(k) / m);
    }
  }
  if (m >= 2) {
    const Eigen::MatrixXd inner =
        t.v.block(1, 0, m - 1, p + 1).transpose(); // (p+1) x (m-1)
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inner);
    const auto& sv = svd.singularValues();
    t.interior_moments_full_rank =
        sv.size() == p + 1 && sv(p) > 1e-12 * sv(0);
  } else {
    t.interior_moments_full_rank = false;
  }
  return t;
}

} // namespace

const ElementTables& element_tables(int p, int m) {
  if (p < 0 || m < 1) {
    throw ArgumentError("element_tables: need p >= 0, m >= 1");
  }
  static std::map<std::pair<int, int>, ElementTables> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto [it, inserted] = cache.try_emplace({p, m});
  if (inserted) {
    it->second = build_tables(p, m);
  }
  return it->second;
}

CoarseCoeffVector zero_coeffs(const LegendreBasis& basis,
                              const CartesianMesh& coarse) {
  CoarseCoeffVector c;
  c.p = basis.p;
  c.coarse_level = coarse.level();
  c.values = Eigen::VectorXd::Zero(coarse.cell_count() * basis.size());
  return c;
}

double legendre_eval(const LegendreBasis& basis, int j, ElementId T,
                     const CartesianMesh& coarse, double x, double y) {
  if (j < 0 || j >= basis.size()) {
    throw ArgumentError("legendre_eval: index out of range");
  }
  if (!coarse.contains(T)) {
    throw ArgumentError("legendre_eval: element outside mesh");
  }
  const double H = coarse.h();
  const double xi = (x - T.i * H) / H;
  const double eta = (y - T.j * H) / H;
  const double tol = 1e-12;
  if (xi < -tol || xi > 1.0 + tol || eta < -tol || eta > 1.0 + tol) {
    throw ArgumentError("legendre_eval: point outside element closure");
  }
  return legendre01(basis.deg_x(j), std::clamp(xi, 0.0, 1.0)) *
         legendre01(basis.deg_y(j), std::clamp(eta, 0.0, 1.0)) / H;
}

CoarseCoeffVector project_l2(const FineField& v, const LegendreBasis& basis,
                             const CartesianMesh& coarse) {
  if (v.level < coarse.level()) {
    throw ArgumentError("project_l2: field coarser than target mesh");
  }
  const CartesianMesh fine = build_mesh(v.level);
  const int m = 1 << (v.level - coarse.level());
  const ElementTables& tab = element_tables(basis.p, m);
  const int nd = basis.p + 1;
  const int N = basis.size();
  const double H = coarse.h();
  CoarseCoeffVector c = zero_coeffs(basis, coarse);
  const int nc = coarse.cells_per_side();
  Eigen::MatrixXd vals(m + 1, m + 1);
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      for (int ky = 0; ky <= m; ++ky) {
        for (int kx = 0; kx <= m; ++kx) {
          vals(kx, ky) = v.values[fine.node_index(ti * m + kx, tj * m + ky)];
        }
      }
      // c(dx,dy) = H * v^T(kx,ky) V(kx,dx) V(ky,dy)
      const Eigen::MatrixXd tmp = tab.v.transpose() * vals * tab.v;
      const int base = c.block(coarse, {ti, tj});
      for (int dx = 0; dx < nd; ++dx) {
        for (int dy = 0; dy < nd; ++dy) {
          c.values[base + basis.index(dx, dy)] = H * tmp(dx, dy);
        }
      }
      (void)N;
    }
  }
  return c;
}

FineField embed_vh(const CoarseCoeffVector& c, const CartesianMesh& coarse,
                   const CartesianMesh& fine) {
  if (c.coarse_level != coarse.level()) {
    throw ArgumentError("embed_vh: coefficient level mismatch");
  }
  if (fine.level() < coarse.level()) {
    throw ArgumentError("embed_vh: fine mesh coarser than coarse mesh");
  }
  LegendreBasis basis{c.p};
  const int m = 1 << (fine.level() - coarse.level());
  const ElementTables& tab = element_tables(basis.p, m);
  const int nd = basis.p + 1;
  const double H = coarse.h();
  const int nc = coarse.cells_per_side();
  FineField out = zero_field(fine);
  Eigen::MatrixXd coeff(nd, nd);
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      const int base = c.block(coarse, {ti, tj});
      for (int dx = 0; dx < nd; ++dx) {
        for (int dy = 0; dy < nd; ++dy) {
          coeff(dx, dy) = c.values[base + basis.index(dx, dy)];
        }
      }
      const Eigen::MatrixXd nodal = tab.e * coeff * tab.e.transpose() / H;
      // Interface nodes are owned by the east/north neighbor.
      const int kx_end = (ti == nc - 1) ? m : m - 1;
      const int ky_end = (tj == nc - 1) ? m : m - 1;
      for (int ky = 0; ky <= ky_end; ++ky) {
        for (int kx = 0; kx <= kx_end; ++kx) {
          out.values[fine.node_index(ti * m + kx, tj * m + ky)] =
              nodal(kx, ky);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd embed_vh_on_element(const CoarseCoeffVector& c, ElementId T,
                                    const CartesianMesh& coarse,
                                    const CartesianMesh& fine) {
  if (c.coarse_level != coarse.level()) {
    throw ArgumentError("embed_vh_on_element: coefficient level mismatch");
  }
  if (!coarse.contains(T)) {
    throw ArgumentError("embed_vh_on_element: element outside mesh");
  }
  LegendreBasis basis{c.p};
  const int m = 1 << (fine.level() - coarse.level());
  const ElementTables& tab = element_tables(basis.p, m);
  const int nd = basis.p + 1;
  Eigen::MatrixXd coeff(nd, nd);
  const int base = c.block(coarse, T);
  for (int dx = 0; dx < nd; ++dx) {
    for (int dy = 0; dy < nd; ++dy) {
      coeff(dx, dy) = c.values[base + basis.index(dx, dy)];
    }
  }
  return tab.e * coeff * tab.e.transpose() / coarse.h();
}

std::vector<double> project_pw_const(const FineField& v,
                                     const CartesianMesh& coarse) {
  if (v.level < coarse.level()) {
    throw ArgumentError("project_pw_const: field coarser than target mesh");
  }
  const CartesianMesh fine = build_mesh(v.level);
  const int m = 1 << (v.level - coarse.level());
  const ElementTables& tab = element_tables(0, m);
  const int nc = coarse.cells_per_side();
  std::vector<double> means(std::size_t(nc) * nc, 0.0);
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      double sx = 0.0;
      for (int ky = 0; ky <= m; ++ky) {
        double row = 0.0;
        for (int kx = 0; kx <= m; ++kx) {
          row += tab.v(kx, 0) *
                 v.values[fine.node_index(ti * m + kx, tj * m + ky)];
        }
        sx += tab.v(ky, 0) * row;
      }
      // Integral over T is H^2 * sx (partition of unity in each axis),
      // so the mean is sx itself.
      means[std::size_t(tj) * nc + ti] = sx;
    }
  }
  return means;
}

} // namespace splod
