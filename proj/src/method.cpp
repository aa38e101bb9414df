#include "splod/method.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <map>

#include "splod/errors.hpp"
#include "splod/parallel.hpp"

namespace splod {

namespace {

/// Extracts the values of a dense field on the interior nodes of a
/// coarse rectangle as a sparse field (structural support).
SparseField extract_rect(const Spaces& spaces, Rect rect,
                         const Eigen::VectorXd& dense) {
  SparseField out;
  out.idx = rect_interior_nodes(spaces.coarse, rect, spaces.fine);
  out.val.resize(out.idx.size());
  for (std::size_t k = 0; k < out.idx.size(); ++k) {
    out.val[std::size_t(k)] = dense[out.idx[k]];
  }
  return out;
}

struct TargetPiece {
  std::size_t group;
  std::size_t rhs;
};

/// Accumulates basis columns: column = base field minus the sum of its
/// corrector pieces, merged in a fixed order.
MultiscaleBasis merge_columns(
    const Spaces& spaces, const std::vector<SparseField>& base_fields,
    const std::vector<std::vector<TargetPiece>>& pieces_of_col,
    const std::vector<std::vector<SparseField>>& pieces, std::string tag,
    int p, int ell, long solves) {
  const std::int64_t n_cols = spaces.basis_count();
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd scratch = Eigen::VectorXd::Zero(spaces.fine.node_count());
  std::vector<int> support;
  for (std::int64_t col = 0; col < n_cols; ++col) {
    support.clear();
    const SparseField& base = base_fields[std::size_t(col)];
    base.add_to(scratch);
    support.insert(support.end(), base.idx.begin(), base.idx.end());
    for (const TargetPiece& tp : pieces_of_col[std::size_t(col)]) {
      const SparseField& piece = pieces[tp.group][tp.rhs];
      for (std::size_t k = 0; k < piece.idx.size(); ++k) {
        scratch[piece.idx[k]] -= piece.val[k];
      }
      support.insert(support.end(), piece.idx.begin(), piece.idx.end());
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    for (int node : support) {
      trips.emplace_back(node, int(col), scratch[node]);
      scratch[node] = 0.0;
    }
  }
  MultiscaleBasis basis;
  basis.tag = std::move(tag);
  basis.p = p;
  basis.ell = ell;
  basis.phi.resize(spaces.fine.node_count(), n_cols);
  basis.phi.setFromTriplets(trips.begin(), trips.end());
  basis.phi.makeCompressed();
  basis.corrector_solves = solves;
  return basis;
}

} // namespace

MultiscaleBasis build_basis_splod(const Spaces& spaces,
                                  const CoefficientField& A, int ell,
                                  int threads, const SaddleOptions& options) {
  if (ell < 1) {
    throw ArgumentError("build_basis_splod: ell must be positive");
  }
  const int nc = spaces.coarse.cells_per_side();
  const int N = spaces.basis.size();
  const std::int64_t n_cols = spaces.basis_count();

  // Base fields g_{j,T}: P_H b_{1,T} for the zero-order functions
  // (support grows to N(T)), the bubbles themselves otherwise.
  std::vector<SparseField> base(static_cast<std::size_t>(n_cols));
  run_jobs(nc * nc, threads, [&](int ci) {
    const ElementId T = spaces.coarse.cell_at(ci);
    const FineField b1 =
        spaces.bubbles.field(T, 0, spaces.coarse, spaces.fine);
    const FineField g1 = apply_ph(b1, spaces.bubbles, spaces.coarse,
                                  spaces.fine);
    const Rect neighborhood = patch(spaces.coarse, T, 1).rect;
    base[std::size_t(ci) * N] = extract_rect(spaces, neighborhood, g1.values);
    for (int j = 1; j < N; ++j) {
      base[std::size_t(ci) * N + j] =
          spaces.bubbles.sparse_field(T, j, spaces.coarse, spaces.fine);
    }
  });

  // Corrector jobs keyed by patch center K; corrections of the
  // zero-order function of T are needed for every K in N(T).
  GroupBuilder builder;
  std::vector<std::vector<TargetPiece>> pieces_of_col(static_cast<std::size_t>(n_cols));
  for (int cj = 0; cj < nc; ++cj) {
    for (int ci = 0; ci < nc; ++ci) {
      const ElementId K{ci, cj};
      const Rect rect = patch(spaces.coarse, K, ell).rect;
      const Rect around = patch(spaces.coarse, K, 1).rect;
      for (int tj = around.j0; tj <= around.j1; ++tj) {
        for (int ti = around.i0; ti <= around.i1; ++ti) {
          const ElementId T{ti, tj};
          const std::int64_t col =
              std::int64_t(spaces.coarse.cell_index(T)) * N;
          RhsSpec spec;
          spec.source = K;
          spec.g = &base[std::size_t(col)];
          const auto [gi, ri] = builder.add(rect, spec);
          pieces_of_col[std::size_t(col)].push_back({gi, ri});
        }
      }
      for (int j = 1; j < N; ++j) {
        const std::int64_t col =
            std::int64_t(spaces.coarse.cell_index(K)) * N + j;
        RhsSpec spec;
        spec.source = K;
        spec.g = &base[std::size_t(col)];
        const auto [gi, ri] = builder.add(rect, spec);
        pieces_of_col[std::size_t(col)].push_back({gi, ri});
      }
    }
  }
  long solves = 0;
  const auto groups = builder.take();
  const auto pieces =
      run_corrector_groups(spaces, A, groups, threads, options, &solves);
  return merge_columns(spaces, base, pieces_of_col, pieces, "splod",
                       spaces.basis.p, ell, solves);
}

MultiscaleBasis build_basis_plod(const Spaces& spaces,
                                 const CoefficientField& A, int ell,
                                 int threads, const SaddleOptions& options) {
  if (ell < 1) {
    throw ArgumentError("build_basis_plod: ell must be positive");
  }
  const int nc = spaces.coarse.cells_per_side();
  const int N = spaces.basis.size();
  const std::int64_t n_cols = spaces.basis_count();
  GroupBuilder builder;
  std::vector<std::vector<TargetPiece>> pieces_of_col(static_cast<std::size_t>(n_cols));
  std::vector<SparseField> base(static_cast<std::size_t>(n_cols)); // all empty
  for (int cj = 0; cj < nc; ++cj) {
    for (int ci = 0; ci < nc; ++ci) {
      const ElementId T{ci, cj};
      const Rect rect = patch(spaces.coarse, T, ell).rect;
      for (int j = 0; j < N; ++j) {
        RhsSpec spec;
        spec.moment_mode = true;
        spec.moment_elem = T;
        spec.moment_j = j;
        const auto [gi, ri] = builder.add(rect, spec);
        const std::int64_t col =
            std::int64_t(spaces.coarse.cell_index(T)) * N + j;
        pieces_of_col[std::size_t(col)].push_back({gi, ri});
      }
    }
  }
  long solves = 0;
  const auto groups = builder.take();
  auto pieces =
      run_corrector_groups(spaces, A, groups, threads, options, &solves);
  // R produces the basis function itself; flip the sign so the shared
  // merge (base - piece) yields +R.
  for (auto& group : pieces) {
    for (auto& piece : group) {
      for (double& v : piece.val) {
        v = -v;
      }
    }
  }
  return merge_columns(spaces, base, pieces_of_col, pieces, "plod",
                       spaces.basis.p, ell, solves);
}

MultiscaleBasis build_basis_prototype(const Spaces& spaces,
                                      const CoefficientField& A, int threads,
                                      const SaddleOptions& options) {
  const int nc = spaces.coarse.cells_per_side();
  const int N = spaces.basis.size();
  const std::int64_t n_cols = spaces.basis_count();
  const int ell = full_patch_order(spaces.coarse);
  std::vector<SparseField> base(static_cast<std::size_t>(n_cols));
  for (int cj = 0; cj < nc; ++cj) {
    for (int ci = 0; ci < nc; ++ci) {
      const ElementId T{ci, cj};
      for (int j = 0; j < N; ++j) {
        base[std::size_t(spaces.coarse.cell_index(T)) * N + j] =
            spaces.bubbles.sparse_field(T, j, spaces.coarse, spaces.fine);
      }
    }
  }
  GroupBuilder builder;
  std::vector<std::vector<TargetPiece>> pieces_of_col(static_cast<std::size_t>(n_cols));
  const Rect full{0, 0, nc - 1, nc - 1};
  for (int ci = 0; ci < nc * nc; ++ci) {
    const ElementId T = spaces.coarse.cell_at(ci);
    for (int j = 0; j < N; ++j) {
      RhsSpec spec;
      spec.source = T;
      spec.g = &base[std::size_t(ci) * N + j];
      const auto [gi, ri] = builder.add(full, spec);
      pieces_of_col[std::size_t(ci) * N + j].push_back({gi, ri});
    }
  }
  long solves = 0;
  const auto groups = builder.take();
  const auto pieces =
      run_corrector_groups(spaces, A, groups, threads, options, &solves);
  return merge_columns(spaces, base, pieces_of_col, pieces, "prototype",
                       spaces.basis.p, ell, solves);
}

MultiscaleSolution coarse_solve(const Spaces& spaces, const FineSystem& system,
                                const MultiscaleBasis& basis,
                                const FineField& f) {
  const std::int64_t n_cols = spaces.basis_count();
  if (basis.phi.cols() != n_cols ||
      f.level != spaces.fine.level()) {
    throw ArgumentError("coarse_solve: basis or right-hand side mismatch");
  }
  const SparseMat KPhi = system.K * basis.phi;
  const SparseMat G_sparse = SparseMat(basis.phi.transpose()) * KPhi;
  const Eigen::VectorXd load = basis.phi.transpose() * (system.M * f.values);

  MultiscaleSolution sol;
  sol.tag = basis.tag;
  sol.p = basis.p;
  sol.ell = basis.ell;
  sol.corrector_solves = basis.corrector_solves;

  Eigen::VectorXd d;
  if (n_cols <= 4096) {
    const Eigen::MatrixXd G = Eigen::MatrixXd(G_sparse);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success) {
      throw NumericError("coarse_solve: factorization failed; try larger ell");
    }
    d = ldlt.vectorD();
    sol.coeffs = ldlt.solve(load);
  } else {
    Eigen::SimplicialLDLT<SparseMat> ldlt(G_sparse);
    if (ldlt.info() != Eigen::Success) {
      throw NumericError("coarse_solve: factorization failed; try larger ell");
    }
    d = ldlt.vectorD();
    sol.coeffs = ldlt.solve(load);
  }
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.cwiseAbs().minCoeff();
  sol.cond_estimate = (dmin > 0.0 && d.minCoeff() > 0.0)
                          ? dmax / dmin
                          : std::numeric_limits<double>::infinity();
  if (!(sol.cond_estimate < 1e14)) {
    throw NumericError(
        "coarse_solve: coarse system too ill-conditioned (estimate " +
        std::to_string(sol.cond_estimate) + "); try larger ell");
  }
  const double load_norm = load.norm();
  sol.solve_residual =
      load_norm > 0.0 ? (G_sparse * sol.coeffs - load).norm() / load_norm
                      : 0.0;
  sol.u = FineField{spaces.fine.level(), basis.phi * sol.coeffs};
  return sol;
}

ErrorRecord evaluate_errors(const FineField& u, const FineField& u_ref,
                            const FineSystem& system) {
  if (u.level != u_ref.level) {
    throw ArgumentError("evaluate_errors: field levels differ");
  }
  const double ref_energy = energy_norm(u_ref, system.K);
  const double ref_l2 = l2_norm(u_ref, system.M);
  if (ref_energy == 0.0) {
    throw ArgumentError("evaluate_errors: reference has zero energy");
  }
  const FineField diff{u.level, u_ref.values - u.values};
  ErrorRecord rec;
  rec.energy_rel = energy_norm(diff, system.K) / ref_energy;
  rec.l2_rel = l2_norm(diff, system.M) / ref_l2;
  return rec;
}

int ell_rule(int p, int coarse_level) {
  // Calibrated so the localization error stays a small fraction of the
  // ideal error over the supported coarse levels; grows with both the
  // degree and log2(1/H).
  return std::max(
      1, int(std::ceil(double(p + 2) * (coarse_level + 1) / 3.0)) + p);
}

} // namespace splod
