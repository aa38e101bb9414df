#include <doctest.h>

#include "splod/method.hpp"
#include "test_util.hpp"

using namespace splod;
namespace tt = splod::testing;

TEST_SUITE_BEGIN("method");

namespace {

FineField default_rhs(const CartesianMesh& fine) {
  return interpolate(fine, [](double x, double y) {
    return (x + std::cos(3.0 * M_PI * x)) * y * y * y;
  });
}

void check_support(const Spaces& s, const MultiscaleBasis& basis,
                   ElementId T, int j, int layers) {
  const Eigen::VectorXd col = basis.phi.col(
      s.coarse.cell_index(T) * s.basis.size() + j);
  const auto allowed =
      rect_interior_nodes(s.coarse, patch(s.coarse, T, layers).rect, s.fine);
  std::vector<char> ok(std::size_t(s.fine.node_count()), 0);
  for (int n : allowed) {
    ok[std::size_t(n)] = 1;
  }
  for (int n = 0; n < s.fine.node_count(); ++n) {
    if (!ok[std::size_t(n)]) {
      REQUIRE(col[n] == 0.0);
    }
  }
}

} // namespace

TEST_CASE("support footprints of the localized bases") {
  const Spaces s = Spaces::create(3, 5, 1);
  const CoefficientField A = gen_a1(17, 3);
  const int ell = 1;
  const MultiscaleBasis splod_basis = build_basis_splod(s, A, ell);
  const MultiscaleBasis plod_basis = build_basis_plod(s, A, ell);
  const ElementId T{3, 4};
  // Zero-order functions grow by one layer, the rest do not.
  check_support(s, splod_basis, T, 0, ell + 1);
  for (int j = 1; j < s.basis.size(); ++j) {
    check_support(s, splod_basis, T, j, ell);
  }
  for (int j = 0; j < s.basis.size(); ++j) {
    check_support(s, plod_basis, T, j, ell);
  }
}

TEST_CASE("only the zero-order functions are stabilized") {
  // For j > 1 the stabilized basis function is the plain corrected
  // bubble (1 - C^ell) b_{j,T}.
  const Spaces s = Spaces::create(2, 5, 1);
  const CoefficientField A = gen_a1(23, 3);
  const int ell = 1;
  const MultiscaleBasis basis = build_basis_splod(s, A, ell);
  const SparseMat K = assemble_stiffness(s.fine, A);
  const ElementId T{2, 1};
  for (int j = 1; j < s.basis.size(); ++j) {
    const FineField b = s.bubbles.field(T, j, s.coarse, s.fine);
    const CorrectorField c = element_corrector(s, A, T, b, ell);
    const FineField expected{b.level, b.values - c.field.values};
    const Eigen::VectorXd col =
        basis.phi.col(s.coarse.cell_index(T) * s.basis.size() + j);
    const FineField diff{b.level, col - expected.values};
    REQUIRE(energy_norm(diff, K) <= 1e-9 * energy_norm(expected, K));
  }
}

TEST_CASE("zero-order column matches its direct construction") {
  // (1 - C^ell) P_H b_{1,T} assembled one element corrector at a time.
  const Spaces s = Spaces::create(2, 5, 1);
  const CoefficientField A = gen_a1(37, 3);
  const int ell = 1;
  const MultiscaleBasis basis = build_basis_splod(s, A, ell);
  const SparseMat K = assemble_stiffness(s.fine, A);
  const ElementId T{1, 2};
  const FineField g = apply_ph(s.bubbles.field(T, 0, s.coarse, s.fine),
                               s.bubbles, s.coarse, s.fine);
  FineField expected = g;
  const Rect around = patch(s.coarse, T, 1).rect;
  for (int kj = around.j0; kj <= around.j1; ++kj) {
    for (int ki = around.i0; ki <= around.i1; ++ki) {
      const CorrectorField c = element_corrector(s, A, {ki, kj}, g, ell);
      expected.values -= c.field.values;
    }
  }
  const Eigen::VectorXd col =
      basis.phi.col(s.coarse.cell_index(T) * s.basis.size());
  const FineField diff{s.fine.level(), col - expected.values};
  CHECK(energy_norm(diff, K) <= 1e-9 * energy_norm(expected, K));
}

TEST_CASE("constant data is reproduced exactly with full patches") {
  // For f = 1 every fine-scale test function has zero mean per
  // element, so the full-patch solution coincides with the fine
  // reference.
  const CoefficientField A = gen_a1(53, 3);
  const Spaces s = Spaces::create(2, 5, 1);
  const FineSystem system = FineSystem::create(s.fine, A);
  const FineField one = interpolate(s.fine, [](double, double) {
    return 1.0;
  });
  const FineField u_ref = reference_solve(A, one, s.fine);
  const MultiscaleSolution sol = coarse_solve(
      s, system, build_basis_splod(s, A, full_patch_order(s.coarse)), one);
  const ErrorRecord rec = evaluate_errors(sol.u, u_ref, system);
  CHECK(rec.energy_rel <= 1e-9);
}

TEST_CASE("corrections stay in the fine-scale space") {
  const Spaces s = Spaces::create(2, 5, 1);
  const CoefficientField A = gen_a1(29, 3);
  const MultiscaleBasis basis = build_basis_splod(s, A, 2);
  const MultiscaleBasis plod_basis = build_basis_plod(s, A, 2);
  for (int col = 0; col < basis.phi.cols(); ++col) {
    const ElementId T = s.coarse.cell_at(col / s.basis.size());
    const int j = col % s.basis.size();
    // splod: moments of the basis function match the moments of its
    // seed function (the correction has none).
    FineField f{s.fine.level(), basis.phi.col(col)};
    CoarseCoeffVector mom = project_l2(f, s.basis, s.coarse);
    const FineField seed =
        j == 0 ? apply_ph(s.bubbles.field(T, 0, s.coarse, s.fine), s.bubbles,
                          s.coarse, s.fine)
               : s.bubbles.field(T, j, s.coarse, s.fine);
    mom.values -= project_l2(seed, s.basis, s.coarse).values;
    REQUIRE(mom.values.cwiseAbs().maxCoeff() < 1e-9);

    // plod: moments are exactly the unit vector.
    FineField g{s.fine.level(), plod_basis.phi.col(col)};
    CoarseCoeffVector pmom = project_l2(g, s.basis, s.coarse);
    pmom.values[col] -= 1.0;
    REQUIRE(pmom.values.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("all three methods agree with full patches") {
  const CoefficientField A = gen_a1(41, 3);
  for (int p : {0, 1}) {
    const Spaces s = Spaces::create(2, 4, p);
    const FineSystem system = FineSystem::create(s.fine, A);
    const FineField f = default_rhs(s.fine);
    const int ell_full = full_patch_order(s.coarse);
    const MultiscaleSolution u_splod =
        coarse_solve(s, system, build_basis_splod(s, A, ell_full), f);
    const MultiscaleSolution u_plod =
        coarse_solve(s, system, build_basis_plod(s, A, ell_full), f);
    const MultiscaleSolution u_proto =
        coarse_solve(s, system, build_basis_prototype(s, A), f);
    const double scale = energy_norm(u_proto.u, system.K);
    const FineField d1{s.fine.level(), u_splod.u.values - u_proto.u.values};
    const FineField d2{s.fine.level(), u_plod.u.values - u_proto.u.values};
    REQUIRE(energy_norm(d1, system.K) <= 1e-8 * scale);
    REQUIRE(energy_norm(d2, system.K) <= 1e-8 * scale);
  }
}

TEST_CASE("coarse solve basics") {
  const Spaces s = Spaces::create(2, 4, 0);
  const CoefficientField A = gen_a1(2, 2);
  const FineSystem system = FineSystem::create(s.fine, A);
  const MultiscaleBasis basis = build_basis_splod(s, A, 1);

  // Zero load -> zero solution.
  const MultiscaleSolution zero =
      coarse_solve(s, system, basis, zero_field(s.fine));
  CHECK(zero.u.values.isZero(0.0));

  // Symmetry of the coarse matrix.
  const SparseMat G = SparseMat(basis.phi.transpose()) * (system.K * basis.phi);
  const Eigen::MatrixXd Gd(G);
  CHECK((Gd - Gd.transpose()).cwiseAbs().maxCoeff() <=
        1e-11 * Gd.cwiseAbs().maxCoeff());

  // Galerkin residual of the coarse solve.
  const MultiscaleSolution sol =
      coarse_solve(s, system, basis, default_rhs(s.fine));
  CHECK(sol.solve_residual <= 1e-9);
  CHECK(sol.cond_estimate < 1e14);
}

TEST_CASE("prototype rate for the unit coefficient") {
  // Smooth data, constant coefficient: energy error of the prototype
  // method decays at order p + 2 = 2 for p = 0.
  const CoefficientField unit = tt::unit_coefficient();
  const CartesianMesh fine = build_mesh(6);
  const FineSystem system = FineSystem::create(fine, unit);
  const FineField f = default_rhs(fine);
  const FineField u_ref = reference_solve(unit, f, fine);
  std::vector<double> hs, errs, l2s;
  for (int lc = 2; lc <= 4; ++lc) {
    const Spaces s = Spaces::create(lc, 6, 0);
    const MultiscaleSolution sol =
        coarse_solve(s, system, build_basis_prototype(s, unit), f);
    const ErrorRecord rec = evaluate_errors(sol.u, u_ref, system);
    hs.push_back(s.H());
    errs.push_back(rec.energy_rel);
    l2s.push_back(rec.l2_rel);
    REQUIRE(rec.l2_rel <= rec.energy_rel);
  }
  const double eoc = tt::fit_eoc(hs, errs);
  const double eoc_l2 = tt::fit_eoc(hs, l2s);
  INFO("prototype energy EOC=", eoc, ", L2 EOC=", eoc_l2);
  CHECK(eoc >= 1.7);
  CHECK(eoc_l2 >= eoc + 0.5);
}

TEST_CASE("error evaluation: identity, scaling, quasi-optimality") {
  const Spaces s = Spaces::create(2, 4, 0);
  const CoefficientField A = gen_a1(19, 2);
  const FineSystem system = FineSystem::create(s.fine, A);
  const FineField f = default_rhs(s.fine);
  const FineField u_ref = reference_solve(A, f, s.fine);

  const ErrorRecord self = evaluate_errors(u_ref, u_ref, system);
  CHECK(self.energy_rel == 0.0);
  CHECK(self.l2_rel == 0.0);

  CHECK_THROWS_AS(evaluate_errors(u_ref, zero_field(s.fine), system),
                  ArgumentError);

  const MultiscaleBasis basis = build_basis_splod(s, A, 2);
  const MultiscaleSolution sol = coarse_solve(s, system, basis, f);
  const ErrorRecord rec = evaluate_errors(sol.u, u_ref, system);
  // Galerkin quasi-optimality sanity: never worse than the zero field
  // by more than the contrast factor.
  CHECK(rec.energy_rel <= 1.01 * std::sqrt(A.beta / A.alpha));

  // Linearity: scaling f leaves relative errors unchanged.
  const FineField f10{s.fine.level(), 10.0 * f.values};
  const FineField u10 = reference_solve(A, f10, s.fine);
  const MultiscaleSolution sol10 = coarse_solve(s, system, basis, f10);
  const ErrorRecord rec10 = evaluate_errors(sol10.u, u10, system);
  CHECK(rec10.energy_rel ==
        doctest::Approx(rec.energy_rel).epsilon(1e-10));
  const FineField diff{s.fine.level(),
                       sol10.u.values - 10.0 * sol.u.values};
  CHECK(diff.values.cwiseAbs().maxCoeff() <=
        1e-10 * sol10.u.values.cwiseAbs().maxCoeff());
}

TEST_CASE("ell rule") {
  CHECK(ell_rule(0, 2) == 2);
  CHECK(ell_rule(0, 3) == 3);
  CHECK(ell_rule(0, 4) == 4);
  CHECK(ell_rule(1, 2) == 4);
  CHECK(ell_rule(1, 3) == 5);
  CHECK(ell_rule(1, 4) == 6);
}

TEST_SUITE_END();
