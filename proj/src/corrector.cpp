#include "splod/corrector.hpp"

#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <map>
#include <string>

#include "splod/errors.hpp"
#include "splod/parallel.hpp"

namespace splod {

namespace {

std::string elem_str(ElementId e) {
  return "(" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
}

} // namespace

std::pair<std::size_t, std::size_t> GroupBuilder::add(Rect rect,
                                                      RhsSpec spec) {
  auto [it, inserted] = index_.try_emplace(rect, groups_.size());
  if (inserted) {
    groups_.push_back({rect, {}});
  }
  RectGroup& group = groups_[it->second];
  group.rhs.push_back(spec);
  return {it->second, group.rhs.size() - 1};
}

PatchSystem::PatchSystem(const Spaces& spaces, const CoefficientField& A,
                         Rect rect, const SaddleOptions& options)
    : rect_(rect), N_(spaces.basis.size()), options_(options) {
  const CartesianMesh& coarse = spaces.coarse;
  const CartesianMesh& fine = spaces.fine;
  const int m = spaces.m();
  const ElementTables& tab = element_tables(spaces.basis.p, m);
  if (!tab.interior_moments_full_rank) {
    throw NumericError(
        "PatchSystem: moment constraints for p=" +
        std::to_string(spaces.basis.p) + " need a finer fine mesh (m=" +
        std::to_string(m) + " subdivisions per element is too few)");
  }
  dofs_ = DofSet::create(fine.node_count(),
                         rect_interior_nodes(coarse, rect, fine));

  // Stiffness over the patch-interior nodes, assembled cell by cell.
  const Eigen::Matrix4d local = q1_stiffness_element();
  std::vector<Eigen::Triplet<double>> trips;
  const int fx0 = rect.i0 * m, fx1 = (rect.i1 + 1) * m;
  const int fy0 = rect.j0 * m, fy1 = (rect.j1 + 1) * m;
  trips.reserve(std::size_t(fx1 - fx0) * (fy1 - fy0) * 16);
  for (int cy = fy0; cy < fy1; ++cy) {
    for (int cx = fx0; cx < fx1; ++cx) {
      const double w = A.value_on(fine, {cx, cy});
      const std::array<int, 4> nodes = {
          fine.node_index(cx, cy), fine.node_index(cx + 1, cy),
          fine.node_index(cx + 1, cy + 1), fine.node_index(cx, cy + 1)};
      std::array<int, 4> loc;
      for (int a = 0; a < 4; ++a) {
        loc[a] = dofs_.local_of_node[std::size_t(nodes[a])];
      }
      for (int a = 0; a < 4; ++a) {
        if (loc[a] < 0) continue;
        for (int b = 0; b < 4; ++b) {
          if (loc[b] < 0) continue;
          trips.emplace_back(loc[a], loc[b], w * local(a, b));
        }
      }
    }
  }
  K_.resize(dofs_.size(), dofs_.size());
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();

  // Moment constraint rows, one per (patch element, Legendre index).
  const double H = spaces.H();
  trips.clear();
  const int n_cells = int(rect.cell_count());
  for (int rc = 0; rc < n_cells; ++rc) {
    const ElementId elem{rect.i0 + rc % rect.width(),
                         rect.j0 + rc / rect.width()};
    for (int ky = 0; ky <= m; ++ky) {
      for (int kx = 0; kx <= m; ++kx) {
        const int node = fine.node_index(elem.i * m + kx, elem.j * m + ky);
        const int loc = dofs_.local_of_node[std::size_t(node)];
        if (loc < 0) continue;
        for (int j = 0; j < N_; ++j) {
          const double val = H * tab.v(kx, spaces.basis.deg_x(j)) *
                             tab.v(ky, spaces.basis.deg_y(j));
          trips.emplace_back(rc * N_ + j, loc, val);
        }
      }
    }
  }
  C_.resize(n_cells * N_, dofs_.size());
  C_.setFromTriplets(trips.begin(), trips.end());
  C_.makeCompressed();

  kkt_size_ = dofs_.size() + C_.rows();
  if (kkt_size_ <= options_.direct_threshold) {
    std::vector<Eigen::Triplet<double>> kkt;
    kkt.reserve(std::size_t(K_.nonZeros()) + 2 * std::size_t(C_.nonZeros()));
    for (int col = 0; col < K_.outerSize(); ++col) {
      for (SparseMat::InnerIterator it(K_, col); it; ++it) {
        kkt.emplace_back(int(it.row()), col, it.value());
      }
    }
    const int n = dofs_.size();
    for (int col = 0; col < C_.outerSize(); ++col) {
      for (SparseMat::InnerIterator it(C_, col); it; ++it) {
        kkt.emplace_back(n + int(it.row()), col, it.value());
        kkt.emplace_back(col, n + int(it.row()), it.value());
      }
    }
    SparseMat KKT(kkt_size_, kkt_size_);
    KKT.setFromTriplets(kkt.begin(), kkt.end());
    KKT.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<SparseMat>>();
    lu_->compute(KKT);
    if (lu_->info() != Eigen::Success) {
      throw NumericError("PatchSystem: KKT factorization failed on patch [" +
                         std::to_string(rect.i0) + "," +
                         std::to_string(rect.i1) + "]x[" +
                         std::to_string(rect.j0) + "," +
                         std::to_string(rect.j1) + "]");
    }
  }
}

int PatchSystem::moment_row(ElementId elem, int j) const {
  if (!rect_.contains(elem)) {
    throw ArgumentError("moment_row: element " + elem_str(elem) +
                        " outside patch");
  }
  const int rc = (elem.j - rect_.j0) * rect_.width() + (elem.i - rect_.i0);
  return rc * N_ + j;
}

Eigen::VectorXd PatchSystem::solve(const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& g) const {
  if (lu_) {
    Eigen::VectorXd rhs(kkt_size_);
    rhs.head(dofs_.size()) = r;
    rhs.tail(C_.rows()) = g;
    const Eigen::VectorXd sol = lu_->solve(rhs);
    const Eigen::VectorXd x = sol.head(dofs_.size());
    const Eigen::VectorXd lambda = sol.tail(C_.rows());
    const double scale = std::max({r.norm(), g.norm(), 1e-300});
    const double res1 = (K_ * x + C_.transpose() * lambda - r).norm();
    const double res2 = (C_ * x - g).norm();
    if (!x.allFinite() || res1 > options_.residual_tol * scale ||
        res2 > options_.residual_tol * scale) {
      throw NumericError("PatchSystem: saddle residual too large on patch [" +
                         std::to_string(rect_.i0) + "," +
                         std::to_string(rect_.i1) + "]x[" +
                         std::to_string(rect_.j0) + "," +
                         std::to_string(rect_.j1) + "]");
    }
    return x;
  }
  return solve_saddle(K_, C_, r, g, options_).x;
}

Eigen::VectorXd PatchSystem::element_rhs(const Spaces& spaces,
                                         const CoefficientField& A,
                                         ElementId source,
                                         const Eigen::VectorXd& g_dense) const {
  const CartesianMesh& fine = spaces.fine;
  const int m = spaces.m();
  const Eigen::Matrix4d local = q1_stiffness_element();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dofs_.size());
  bool any = false;
  for (int ky = 0; ky < m; ++ky) {
    for (int kx = 0; kx < m; ++kx) {
      const int cx = source.i * m + kx, cy = source.j * m + ky;
      const std::array<int, 4> nodes = {
          fine.node_index(cx, cy), fine.node_index(cx + 1, cy),
          fine.node_index(cx + 1, cy + 1), fine.node_index(cx, cy + 1)};
      Eigen::Vector4d gl;
      for (int a = 0; a < 4; ++a) {
        gl[a] = g_dense[nodes[a]];
      }
      if (gl.isZero(0.0)) {
        continue;
      }
      any = true;
      const Eigen::Vector4d rl = A.value_on(fine, {cx, cy}) * (local * gl);
      for (int a = 0; a < 4; ++a) {
        const int loc = dofs_.local_of_node[std::size_t(nodes[a])];
        if (loc >= 0) {
          r[loc] += rl[a];
        }
      }
    }
  }
  if (!any) {
    return Eigen::VectorXd(); // exactly zero source on this element
  }
  return r;
}

std::vector<std::vector<SparseField>> run_corrector_groups(
    const Spaces& spaces, const CoefficientField& A,
    const std::vector<RectGroup>& groups, int threads,
    const SaddleOptions& options, long* solve_count) {
  std::vector<std::vector<SparseField>> pieces(groups.size());
  std::vector<long> counts(groups.size(), 0);
  run_jobs(int(groups.size()), threads, [&](int gi) {
    const RectGroup& group = groups[std::size_t(gi)];
    const PatchSystem system(spaces, A, group.rect, options);
    Eigen::VectorXd scratch = Eigen::VectorXd::Zero(spaces.fine.node_count());
    auto& out = pieces[std::size_t(gi)];
    out.resize(group.rhs.size());
    for (std::size_t k = 0; k < group.rhs.size(); ++k) {
      const RhsSpec& spec = group.rhs[k];
      Eigen::VectorXd x;
      if (spec.moment_mode) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(system.constraint_rows());
        g[system.moment_row(spec.moment_elem, spec.moment_j)] = 1.0;
        x = system.solve(Eigen::VectorXd::Zero(system.dofs().size()), g);
        ++counts[std::size_t(gi)];
      } else {
        spec.g->add_to(scratch);
        const Eigen::VectorXd r =
            system.element_rhs(spaces, A, spec.source, scratch);
        spec.g->clear_from(scratch);
        if (r.size() == 0) {
          continue; // zero source, corrector is exactly zero
        }
        x = system.solve(
            r, Eigen::VectorXd::Zero(system.constraint_rows()));
        ++counts[std::size_t(gi)];
      }
      SparseField piece;
      piece.idx = system.dofs().nodes;
      piece.val.assign(x.data(), x.data() + x.size());
      out[k] = std::move(piece);
    }
  });
  if (solve_count) {
    for (long c : counts) {
      *solve_count += c;
    }
  }
  return pieces;
}

CorrectorField element_corrector(const Spaces& spaces,
                                 const CoefficientField& A, ElementId T,
                                 const FineField& v, int ell,
                                 const SaddleOptions& options) {
  if (v.level != spaces.fine.level()) {
    throw ArgumentError("element_corrector: field level mismatch");
  }
  const Patch p = patch(spaces.coarse, T, ell);
  const PatchSystem system(spaces, A, p.rect, options);
  const Eigen::VectorXd r = system.element_rhs(spaces, A, T, v.values);
  CorrectorField out{zero_field(spaces.fine), T, ell};
  if (r.size() == 0) {
    return out;
  }
  const Eigen::VectorXd x =
      system.solve(r, Eigen::VectorXd::Zero(system.constraint_rows()));
  scatter(x, system.dofs(), out.field.values);
  return out;
}

FineField corrector_sum(const Spaces& spaces, const CoefficientField& A,
                        const FineField& v, int ell, int threads,
                        const SaddleOptions& options, long* solve_count) {
  if (v.level != spaces.fine.level()) {
    throw ArgumentError("corrector_sum: field level mismatch");
  }
  const int nc = spaces.coarse.cells_per_side();
  GroupBuilder builder;
  std::vector<std::pair<std::size_t, std::size_t>> slot_of_elem;
  // One shared sparse wrapper around v (structural full support).
  SparseField sv;
  sv.idx.resize(std::size_t(v.values.size()));
  sv.val.resize(std::size_t(v.values.size()));
  for (int i = 0; i < v.values.size(); ++i) {
    sv.idx[std::size_t(i)] = i;
    sv.val[std::size_t(i)] = v.values[i];
  }
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      const ElementId T{ti, tj};
      RhsSpec spec;
      spec.source = T;
      spec.g = &sv;
      slot_of_elem.push_back(
          builder.add(patch(spaces.coarse, T, ell).rect, spec));
    }
  }
  const auto groups = builder.take();
  const auto pieces =
      run_corrector_groups(spaces, A, groups, threads, options, solve_count);
  FineField out = zero_field(spaces.fine);
  for (const auto& [gi, ri] : slot_of_elem) {
    pieces[gi][ri].add_to(out.values);
  }
  return out;
}

int full_patch_order(const CartesianMesh& coarse) {
  return 2 * coarse.cells_per_side();
}

FineField global_corrector(const Spaces& spaces, const CoefficientField& A,
                           const FineField& v, const SaddleOptions& options) {
  if (v.level != spaces.fine.level()) {
    throw ArgumentError("global_corrector: field level mismatch");
  }
  const int nc = spaces.coarse.cells_per_side();
  const Rect full{0, 0, nc - 1, nc - 1};
  const PatchSystem system(spaces, A, full, options);
  const SparseMat K = assemble_stiffness(spaces.fine, A);
  const Eigen::VectorXd r = restrict_vector(K * v.values, system.dofs());
  const Eigen::VectorXd x =
      system.solve(r, Eigen::VectorXd::Zero(system.constraint_rows()));
  FineField out = zero_field(spaces.fine);
  scatter(x, system.dofs(), out.values);
  return out;
}

FineField solve_r(const Spaces& spaces, const CoefficientField& A, Rect region,
                  const CoarseCoeffVector& v_h, const SaddleOptions& options) {
  if (v_h.coarse_level != spaces.coarse.level() || v_h.p != spaces.basis.p) {
    throw ArgumentError("solve_r: coefficient layout mismatch");
  }
  const int N = spaces.basis.size();
  const int nc = spaces.coarse.cells_per_side();
  const PatchSystem system(spaces, A, region, options);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(system.constraint_rows());
  for (int tj = 0; tj < nc; ++tj) {
    for (int ti = 0; ti < nc; ++ti) {
      const ElementId T{ti, tj};
      const auto block = v_h.values.segment(v_h.block(spaces.coarse, T), N);
      if (block.isZero(0.0)) {
        continue;
      }
      if (!region.contains(T)) {
        throw ArgumentError("solve_r: v_H supported outside the region");
      }
      for (int j = 0; j < N; ++j) {
        g[system.moment_row(T, j)] = block[j];
      }
    }
  }
  const Eigen::VectorXd x =
      system.solve(Eigen::VectorXd::Zero(system.dofs().size()), g);
  FineField out = zero_field(spaces.fine);
  scatter(x, system.dofs(), out.values);
  return out;
}

} // namespace splod
