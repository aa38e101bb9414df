#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "splod/fem.hpp"
#include "test_util.hpp"

using namespace splod;
namespace tt = splod::testing;

TEST_SUITE_BEGIN("fem");

TEST_CASE("analytic element matrices") {
  const Eigen::Matrix4d K = q1_stiffness_element();
  for (int a = 0; a < 4; ++a) {
    CHECK(K(a, a) == doctest::Approx(2.0 / 3.0));
    CHECK(K(a, (a + 2) % 4) == doctest::Approx(-1.0 / 3.0));
    CHECK(K(a, (a + 1) % 4) == doctest::Approx(-1.0 / 6.0));
  }
  const Eigen::Matrix4d M = q1_mass_element();
  for (int a = 0; a < 4; ++a) {
    CHECK(M(a, a) == doctest::Approx(1.0 / 9.0));
    CHECK(M(a, (a + 1) % 4) == doctest::Approx(1.0 / 18.0));
    CHECK(M(a, (a + 2) % 4) == doctest::Approx(1.0 / 36.0));
  }
}

TEST_CASE("stiffness: kernel, linearity, symmetry") {
  const CartesianMesh fine = build_mesh(3);
  CoefficientField A = gen_a1(42, 2);
  const SparseMat K = assemble_stiffness(fine, A);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(fine.node_count());
  CHECK((K * ones).cwiseAbs().maxCoeff() < 1e-13);

  CoefficientField A2 = A;
  for (double& v : A2.cells) {
    v *= 2.0;
  }
  A2.alpha *= 2.0;
  A2.beta *= 2.0;
  const SparseMat K2 = assemble_stiffness(fine, A2);
  CHECK((Eigen::MatrixXd(K2) - 2.0 * Eigen::MatrixXd(K)).cwiseAbs().maxCoeff() <
        1e-14);

  const Eigen::MatrixXd Kd(K);
  const double max = Kd.cwiseAbs().maxCoeff();
  CHECK((Kd - Kd.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * max);

  CoefficientField finer = gen_a1(1, 4);
  CHECK_THROWS_AS(assemble_stiffness(fine, finer), ArgumentError);
}

TEST_CASE("mass: total integral and positivity (dense eigen oracle)") {
  const CartesianMesh fine = build_mesh(3);
  const SparseMat M = assemble_mass(fine);
  double total = 0.0;
  for (int col = 0; col < M.outerSize(); ++col) {
    for (SparseMat::InnerIterator it(M, col); it; ++it) {
      total += it.value();
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));

  const Eigen::MatrixXd Md(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Md);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("solve_spd against a dense oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int n = 50;
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      B(i, j) = uni(rng);
    }
  }
  const Eigen::MatrixXd S =
      B.transpose() * B + 5.0 * Eigen::MatrixXd::Identity(n, n);
  const SparseMat K = S.sparseView();
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    b[i] = uni(rng);
  }
  const Eigen::VectorXd oracle = S.ldlt().solve(b);
  const Eigen::VectorXd x = solve_spd(K, b);
  CHECK((x - oracle).norm() <= 1e-9 * oracle.norm());

  CHECK(solve_spd(K, Eigen::VectorXd::Zero(n)).isZero(0.0));

  SparseMat I(n, n);
  I.setIdentity();
  CHECK((solve_spd(I, b) - b).norm() < 1e-12);

  // Indefinite matrix: the solver must refuse.
  Eigen::MatrixXd Ind = S;
  Ind(0, 0) = -100.0;
  CHECK_THROWS_AS(solve_spd(Ind.sparseView(), b), NumericError);
}

TEST_CASE("solve_saddle against a dense KKT oracle, both paths") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int n = 30, nc = 4;
  Eigen::MatrixXd B(n, n), Cd(nc, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      B(i, j) = uni(rng);
    }
  }
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < n; ++j) {
      Cd(i, j) = uni(rng);
    }
  }
  const Eigen::MatrixXd S =
      B.transpose() * B + 2.0 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r(n), g(nc);
  for (int i = 0; i < n; ++i) {
    r[i] = uni(rng);
  }
  for (int i = 0; i < nc; ++i) {
    g[i] = uni(rng);
  }
  Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(n + nc, n + nc);
  KKT.topLeftCorner(n, n) = S;
  KKT.topRightCorner(n, nc) = Cd.transpose();
  KKT.bottomLeftCorner(nc, n) = Cd;
  Eigen::VectorXd rhs(n + nc);
  rhs.head(n) = r;
  rhs.tail(nc) = g;
  const Eigen::VectorXd oracle = KKT.fullPivLu().solve(rhs);

  const SparseMat K = S.sparseView();
  const SparseMat C = Cd.sparseView();
  const SaddleSolution direct = solve_saddle(K, C, r, g);
  CHECK((direct.x - oracle.head(n)).norm() <= 1e-9 * oracle.norm());
  CHECK((direct.lambda - oracle.tail(nc)).norm() <= 1e-9 * oracle.norm());

  SaddleOptions schur;
  schur.direct_threshold = 1; // force the Schur-complement path
  const SaddleSolution iter = solve_saddle(K, C, r, g, schur);
  CHECK((iter.x - oracle.head(n)).norm() <= 1e-8 * oracle.norm());

  // Trivial cases.
  const SaddleSolution zero = solve_saddle(
      K, C, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(nc));
  CHECK(zero.x.isZero(1e-14));
  CHECK(zero.lambda.isZero(1e-14));

  SparseMat empty(0, n);
  const SaddleSolution unconstrained =
      solve_saddle(K, empty, r, Eigen::VectorXd(0));
  CHECK((unconstrained.x - solve_spd(K, r)).norm() < 1e-12);

  // Rank-deficient constraints: an inconsistent duplicated row has no
  // solution; both paths must refuse rather than return garbage.
  Eigen::MatrixXd Cbad(nc + 1, n);
  Cbad.topRows(nc) = Cd;
  Cbad.row(nc) = Cd.row(0);
  Eigen::VectorXd gbad(nc + 1);
  gbad.head(nc) = g;
  gbad[nc] = g[0] + 1.0;
  CHECK_THROWS_AS(solve_saddle(K, SparseMat(Cbad.sparseView()), r, gbad),
                  NumericError);
  CHECK_THROWS_AS(
      solve_saddle(K, SparseMat(Cbad.sparseView()), r, gbad, schur),
      NumericError);
}

TEST_CASE("reference solve: zero load and manufactured solution") {
  const CoefficientField unit = tt::unit_coefficient();
  const CartesianMesh fine = build_mesh(4);
  CHECK(reference_solve(unit, zero_field(fine), fine).values.isZero(0.0));

  // Manufactured u = sin(pi x) sin(pi y), f = 2 pi^2 u.
  std::vector<double> hs, errs;
  for (int level = 3; level <= 6; ++level) {
    const CartesianMesh mesh = build_mesh(level);
    const FineField f = interpolate(mesh, [](double x, double y) {
      return 2.0 * M_PI * M_PI * std::sin(M_PI * x) * std::sin(M_PI * y);
    });
    const FineField u = reference_solve(unit, f, mesh);
    const FineField exact = interpolate(mesh, [](double x, double y) {
      return std::sin(M_PI * x) * std::sin(M_PI * y);
    });
    const SparseMat M = assemble_mass(mesh);
    const FineField diff{mesh.level(), u.values - exact.values};
    hs.push_back(mesh.h());
    errs.push_back(l2_norm(diff, M));
  }
  const double eoc = tt::fit_eoc(hs, errs);
  INFO("manufactured solution L2 EOC=", eoc);
  CHECK(eoc >= 1.9);
}

TEST_CASE("stability bound with the Poincare constant") {
  // Eigenvalue oracle: the smallest Dirichlet eigenvalue of the
  // Laplacian on the unit square is 2 pi^2; check the discrete value,
  // then the stability bound with C_F = 1/(sqrt(2) pi).
  const CoefficientField unit = tt::unit_coefficient();
  const CartesianMesh mesh = build_mesh(4);
  const SparseMat K = assemble_stiffness(mesh, unit);
  const SparseMat M = assemble_mass(mesh);
  const int n = mesh.cells_per_side();
  std::vector<int> interior;
  for (int gy = 1; gy < n; ++gy) {
    for (int gx = 1; gx < n; ++gx) {
      interior.push_back(mesh.node_index(gx, gy));
    }
  }
  const DofSet dofs = DofSet::create(mesh.node_count(), interior);
  const Eigen::MatrixXd Kd(restrict_matrix(K, dofs));
  const Eigen::MatrixXd Md(restrict_matrix(M, dofs));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Kd, Md);
  const double lambda_min = eig.eigenvalues().minCoeff();
  CHECK(lambda_min == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.02));

  const double CF = 1.0 / (std::sqrt(2.0) * M_PI);
  const FineField f = interpolate(mesh, [](double x, double y) {
    return (x + std::cos(3.0 * M_PI * x)) * y * y * y;
  });
  const FineField u = reference_solve(unit, f, mesh);
  const double grad_u = energy_norm(u, K);
  const double f_l2 = l2_norm(f, M);
  CHECK(grad_u <= CF * f_l2 * (1.0 + 1e-10));
}

TEST_CASE("galerkin orthogonality of the reference solve") {
  const CoefficientField A = gen_a1(3, 3);
  const CartesianMesh fine = build_mesh(5);
  const SparseMat K = assemble_stiffness(fine, A);
  const SparseMat M = assemble_mass(fine);
  const FineField f = interpolate(fine, [](double x, double y) {
    return (x + std::cos(3.0 * M_PI * x)) * y * y * y;
  });
  const FineField u = reference_solve(A, f, fine);
  const Eigen::VectorXd Ku = K * u.values;
  const Eigen::VectorXd Mf = M * f.values;
  const double scale = energy_norm(u, K) * l2_norm(f, M);
  for (int trial = 0; trial < 20; ++trial) {
    const FineField w = tt::random_h10_field(fine, 40 + trial);
    const double residual = w.values.dot(Ku) - w.values.dot(Mf);
    REQUIRE(std::abs(residual) <= 1e-9 * std::max(scale, 1.0));
  }
}

TEST_CASE("norms") {
  const CoefficientField unit = tt::unit_coefficient();
  const CartesianMesh fine = build_mesh(4);
  const SparseMat K = assemble_stiffness(fine, unit);

  CHECK(energy_norm(zero_field(fine), K) == 0.0);

  const FineField v = interpolate(
      fine, [](double x, double y) { return x * (1 - x) * y * (1 - y); });
  const FineField v2{fine.level(), 2.0 * v.values};
  CHECK(energy_norm(v2, K) ==
        doctest::Approx(2.0 * energy_norm(v, K)).epsilon(1e-13));

  // Quadrature oracle for the H1 seminorm of the interpolant.
  const double oracle = tt::h1_seminorm_quadrature_oracle(fine, v);
  CHECK(energy_norm(v, K) == doctest::Approx(oracle).epsilon(1e-12));

  SparseMat Ind(2, 2);
  Ind.insert(0, 0) = 1.0;
  Ind.insert(1, 1) = -1.0;
  FineField w{0, Eigen::VectorXd::Zero(2)};
  w.values << 0.0, 1.0;
  CHECK_THROWS_AS(energy_norm(w, Ind), NumericError);
}

TEST_SUITE_END();
