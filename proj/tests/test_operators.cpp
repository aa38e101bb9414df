#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "splod/operators.hpp"
#include "test_util.hpp"

using namespace splod;
namespace tt = splod::testing;

TEST_SUITE_BEGIN("operators");

namespace {

double coeff_norm(const CoarseCoeffVector& c) { return c.values.norm(); }

/// || Pi_H b_{j,T} - Lambda_{j,T} || in the coefficient norm.
double bubble_moment_residual(const Spaces& s, ElementId T, int j) {
  const FineField b = s.bubbles.field(T, j, s.coarse, s.fine);
  CoarseCoeffVector c = project_l2(b, s.basis, s.coarse);
  c.values[c.block(s.coarse, T) + j] -= 1.0;
  return coeff_norm(c);
}

} // namespace

TEST_CASE("bubbles satisfy the moment conditions") {
  for (int p = 0; p <= 3; ++p) {
    const Spaces s = Spaces::create(2, 5, p);
    for (const ElementId T : {ElementId{0, 0}, ElementId{1, 2}}) {
      for (int j = 0; j < s.basis.size(); ++j) {
        REQUIRE(bubble_moment_residual(s, T, j) < 1e-10);
      }
    }
  }
}

TEST_CASE("bubble support is exactly the open element") {
  const Spaces s = Spaces::create(2, 5, 2);
  const ElementId T{2, 1};
  const int m = s.m();
  const FineField b = s.bubbles.field(T, 3, s.coarse, s.fine);
  for (int gy = 0; gy <= s.fine.cells_per_side(); ++gy) {
    for (int gx = 0; gx <= s.fine.cells_per_side(); ++gx) {
      const bool inside = gx > T.i * m && gx < (T.i + 1) * m &&
                          gy > T.j * m && gy < (T.j + 1) * m;
      if (!inside) {
        REQUIRE(b.values[s.fine.node_index(gx, gy)] == 0.0);
      }
    }
  }
}

TEST_CASE("zero-order bubbles coincide for consecutive degrees") {
  const Spaces s0 = Spaces::create(3, 6, 0);
  const Spaces s1 = Spaces::create(3, 6, 1);
  const ElementId T{4, 2};
  const FineField b0 = s0.bubbles.field(T, 0, s0.coarse, s0.fine);
  const FineField b1 = s1.bubbles.field(T, 0, s1.coarse, s1.fine);
  CHECK((b0.values - b1.values).cwiseAbs().maxCoeff() <
        1e-13 * b0.values.cwiseAbs().maxCoeff());
}

TEST_CASE("bubble construction needs enough fine resolution") {
  const CartesianMesh coarse = build_mesh(2);
  const CartesianMesh fine = build_mesh(4); // m = 4, too few for p = 3
  CHECK_THROWS_AS(BubbleSet::build(LegendreBasis{3}, coarse, fine),
                  NumericError);
  CHECK(element_tables(3, 4).interior_moments_full_rank == false);
  CHECK(element_tables(3, 8).interior_moments_full_rank == true);
}

TEST_CASE("bubble energy constant is finite and H-uniform") {
  // C_b = H * ||grad b_{1,T}|| (the constant Legendre function has unit
  // norm); measured across mesh sizes at fine level 7.
  std::vector<double> constants;
  for (int lc = 2; lc <= 4; ++lc) {
    const Spaces s = Spaces::create(lc, 7, 1);
    const ElementId T{1, 1};
    const FineField b = s.bubbles.field(T, 0, s.coarse, s.fine);
    const double grad =
        energy_norm_on_cells(s.fine, nullptr, b, children(s.coarse, T, s.fine));
    constants.push_back(s.H() * grad);
  }
  INFO("measured bubble constants: ", constants[0], " ", constants[1], " ",
       constants[2]);
  for (double c : constants) {
    CHECK(c < 100.0);
  }
  const double lo = *std::min_element(constants.begin(), constants.end());
  const double hi = *std::max_element(constants.begin(), constants.end());
  CHECK(hi / lo < 1.5);
}

TEST_CASE("bubble operator: kernel, reproduction, inverse estimate") {
  const Spaces s = Spaces::create(2, 5, 1);

  // ker Pi_H = ker B_H: fields of the form (1 - B_H) w are in the
  // kernel of the projection, so B_H must vanish on them.
  for (int trial = 0; trial < 5; ++trial) {
    const FineField w = tt::random_h10_field(s.fine, 600 + trial);
    const FineField bw = apply_bh(w, s.bubbles, s.coarse, s.fine);
    const FineField v{w.level, w.values - bw.values};
    CHECK(coeff_norm(project_l2(v, s.basis, s.coarse)) < 1e-11);
    const FineField bv = apply_bh(v, s.bubbles, s.coarse, s.fine);
    REQUIRE(bv.values.cwiseAbs().maxCoeff() <
            1e-12 * std::max(1.0, w.values.cwiseAbs().maxCoeff()));
  }

  // B_H reproduces bubbles.
  const ElementId T{3, 1};
  for (int j = 0; j < s.basis.size(); ++j) {
    const FineField b = s.bubbles.field(T, j, s.coarse, s.fine);
    const FineField bb = apply_bh(b, s.bubbles, s.coarse, s.fine);
    REQUIRE((bb.values - b.values).cwiseAbs().maxCoeff() <
            1e-10 * b.values.cwiseAbs().maxCoeff());
  }

  // Inverse estimate with the measured constant: the element-wise
  // energy of B_H v is bounded by C_b / H times the L2 norm of v.
  // C_b^2 is the largest eigenvalue of the bubble energy Gram matrix
  // (the Legendre Gram is the identity).
  const int N = s.basis.size();
  const SparseMat K1 = assemble_stiffness(s.fine, tt::unit_coefficient());
  Eigen::MatrixXd E(N, N);
  for (int i = 0; i < N; ++i) {
    const FineField bi = s.bubbles.field(T, i, s.coarse, s.fine);
    const Eigen::VectorXd Kbi = K1 * bi.values;
    for (int j = 0; j < N; ++j) {
      const FineField bj = s.bubbles.field(T, j, s.coarse, s.fine);
      E(i, j) = bj.values.dot(Kbi);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(E);
  const double cb = s.H() * std::sqrt(eig.eigenvalues().maxCoeff());
  INFO("measured inverse-estimate constant ", cb);
  for (int trial = 0; trial < 50; ++trial) {
    const FineField v = tt::random_h10_field(s.fine, 700 + trial);
    const FineField bv = apply_bh(v, s.bubbles, s.coarse, s.fine);
    for (int tj = 0; tj < 4; ++tj) {
      for (int ti = 0; ti < 4; ++ti) {
        const auto cells = children(s.coarse, {ti, tj}, s.fine);
        const double lhs = energy_norm_on_cells(s.fine, nullptr, bv, cells);
        const double rhs =
            cb / s.H() * l2_norm_on_cells(s.fine, v, cells);
        REQUIRE(lhs <= rhs * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("cached bubble application equals the direct formula") {
  // Direct formula oracle: moments by pointwise quadrature, bubbles
  // accumulated one field at a time.
  const Spaces s = Spaces::create(2, 4, 1);
  const FineField v = tt::random_h10_field(s.fine, 42);
  FineField direct = zero_field(s.fine);
  for (int tj = 0; tj < 4; ++tj) {
    for (int ti = 0; ti < 4; ++ti) {
      const ElementId T{ti, tj};
      for (int j = 0; j < s.basis.size(); ++j) {
        const double moment = tt::moment_quadrature_oracle(
            s.fine, v, s.basis, j, T, s.coarse);
        const FineField b = s.bubbles.field(T, j, s.coarse, s.fine);
        direct.values += moment * b.values;
      }
    }
  }
  const FineField cached = apply_bh(v, s.bubbles, s.coarse, s.fine);
  CHECK((cached.values - direct.values).cwiseAbs().maxCoeff() <
        1e-12 * std::max(1.0, direct.values.cwiseAbs().maxCoeff()));
}

TEST_CASE("averaging interpolation: constants, boundary, stability") {
  const Spaces s = Spaces::create(3, 5, 0);
  const FineField one = interpolate(s.fine, [](double, double) {
    return 1.0;
  });
  const FineField ih = apply_ih(one, s.coarse, s.fine);
  // Exactly 1 on nodes of elements whose coarse corners are interior.
  const int m = s.m();
  for (int ky = 0; ky <= m; ++ky) {
    for (int kx = 0; kx <= m; ++kx) {
      CHECK(ih.values[s.fine.node_index(3 * m + kx, 4 * m + ky)] ==
            doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  // Zero at coarse boundary nodes.
  CHECK(ih.values[s.fine.node_index(0, 2 * m)] == 0.0);
  CHECK(ih.values[s.fine.node_index(4 * m, 0)] == 0.0);

  // Local H1 stability with a finite measured constant.
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const FineField v = tt::random_h10_field(s.fine, 900 + trial);
    const FineField iv = apply_ih(v, s.coarse, s.fine);
    const ElementId T{4, 4};
    const double lhs =
        energy_norm_on_cells(s.fine, nullptr, iv, children(s.coarse, T, s.fine));
    std::vector<ElementId> patch_cells;
    for (const ElementId& C : patch(s.coarse, T, 1).cells()) {
      const auto kids = children(s.coarse, C, s.fine);
      patch_cells.insert(patch_cells.end(), kids.begin(), kids.end());
    }
    const double rhs = energy_norm_on_cells(s.fine, nullptr, v, patch_cells);
    worst = std::max(worst, lhs / rhs);
  }
  INFO("measured interpolation stability constant ", worst);
  CHECK(worst < 100.0);
}

TEST_CASE("stabilizing projection: projection property and kernel") {
  const Spaces s = Spaces::create(2, 5, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const FineField v = tt::random_h10_field(s.fine, 50 + trial);
    const FineField pv = apply_ph(v, s.bubbles, s.coarse, s.fine);
    const FineField ppv = apply_ph(pv, s.bubbles, s.coarse, s.fine);
    REQUIRE((ppv.values - pv.values).cwiseAbs().maxCoeff() <=
            1e-10 * std::max(1.0, pv.values.cwiseAbs().maxCoeff()));

    // Kernel equality with Pi_H.
    const FineField bw = apply_bh(v, s.bubbles, s.coarse, s.fine);
    const FineField w{v.level, v.values - bw.values};
    const FineField pw = apply_ph(w, s.bubbles, s.coarse, s.fine);
    REQUIRE(pw.values.norm() <= 1e-10 * w.values.norm());
  }
}

TEST_CASE("projection fixes higher-order bubbles and spreads the constant") {
  const Spaces s = Spaces::create(2, 5, 1);
  const ElementId T{1, 1};
  for (int j = 1; j < s.basis.size(); ++j) {
    const FineField b = s.bubbles.field(T, j, s.coarse, s.fine);
    const FineField pb = apply_ph(b, s.bubbles, s.coarse, s.fine);
    REQUIRE((pb.values - b.values).cwiseAbs().maxCoeff() <
            1e-10 * b.values.cwiseAbs().maxCoeff());
  }
  // The zero-order image lives exactly in N(T).
  const FineField b1 = s.bubbles.field(T, 0, s.coarse, s.fine);
  const FineField pb1 = apply_ph(b1, s.bubbles, s.coarse, s.fine);
  CHECK((pb1.values - b1.values).cwiseAbs().maxCoeff() > 1e-6);
  const auto allowed =
      rect_interior_nodes(s.coarse, patch(s.coarse, T, 1).rect, s.fine);
  std::vector<char> ok(std::size_t(s.fine.node_count()), 0);
  for (int n : allowed) {
    ok[std::size_t(n)] = 1;
  }
  for (int n = 0; n < s.fine.node_count(); ++n) {
    if (!ok[std::size_t(n)]) {
      REQUIRE(pb1.values[n] == 0.0);
    }
  }
}

TEST_CASE("projection representation and Kronecker identity") {
  const Spaces s = Spaces::create(2, 4, 1);
  const int N = s.basis.size();

  // P_H v = sum of moments times P_H b_{j,T}.
  const FineField v = tt::random_h10_field(s.fine, 77);
  const CoarseCoeffVector c = project_l2(v, s.basis, s.coarse);
  FineField rep = zero_field(s.fine);
  for (int tj = 0; tj < 4; ++tj) {
    for (int ti = 0; ti < 4; ++ti) {
      const ElementId T{ti, tj};
      for (int j = 0; j < N; ++j) {
        const FineField pb = apply_ph(
            s.bubbles.field(T, j, s.coarse, s.fine), s.bubbles, s.coarse,
            s.fine);
        rep.values += c.values[c.block(s.coarse, T) + j] * pb.values;
      }
    }
  }
  const FineField pv = apply_ph(v, s.bubbles, s.coarse, s.fine);
  CHECK((rep.values - pv.values).cwiseAbs().maxCoeff() <
        1e-10 * std::max(1.0, pv.values.cwiseAbs().maxCoeff()));

  // Moments of P_H b_{i,K} reproduce the Kronecker delta.
  const ElementId K{2, 1};
  for (int i = 0; i < N; ++i) {
    const FineField pb = apply_ph(s.bubbles.field(K, i, s.coarse, s.fine),
                                  s.bubbles, s.coarse, s.fine);
    CoarseCoeffVector moments = project_l2(pb, s.basis, s.coarse);
    moments.values[moments.block(s.coarse, K) + i] -= 1.0;
    REQUIRE(moments.values.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_SUITE_END();
