#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "splod/fem.hpp"
#include "splod/operators.hpp"

namespace splod {

/// Patch saddle system realizing the localized fine-scale space: the
/// stiffness on the patch-interior fine nodes plus one Legendre moment
/// constraint row per (patch element, basis index). Factored once and
/// reused across right-hand sides.
class PatchSystem {
public:
  PatchSystem(const Spaces& spaces, const CoefficientField& A, Rect rect,
              const SaddleOptions& options);

  const Rect& rect() const { return rect_; }
  const DofSet& dofs() const { return dofs_; }
  const SparseMat& stiffness() const { return K_; }
  const SparseMat& constraints() const { return C_; }
  int constraint_rows() const { return int(C_.rows()); }

  /// Local constraint row of the moment (element, j).
  int moment_row(ElementId elem, int j) const;

  /// Solves K x + C^T lambda = r, C x = g on the patch; returns x over
  /// the patch dofs.
  Eigen::VectorXd solve(const Eigen::VectorXd& r,
                        const Eigen::VectorXd& g) const;

  /// Assembles r_w = sum over fine cells of `source` of
  /// A grad(g) . grad(phi_w); returns an exactly-zero vector when the
  /// source values vanish on the element.
  Eigen::VectorXd element_rhs(const Spaces& spaces, const CoefficientField& A,
                              ElementId source,
                              const Eigen::VectorXd& g_dense) const;

private:
  Rect rect_;
  int N_;
  DofSet dofs_;
  SparseMat K_;
  SparseMat C_;
  SaddleOptions options_;
  std::unique_ptr<Eigen::SparseLU<SparseMat>> lu_; // direct path only
  Eigen::Index kkt_size_ = 0;
};

/// Fine-scale corrector supported in a patch.
struct CorrectorField {
  FineField field;
  ElementId center;
  int ell = 0;
};

/// Localized element corrector C_T^ell v.
CorrectorField element_corrector(const Spaces& spaces,
                                 const CoefficientField& A, ElementId T,
                                 const FineField& v, int ell,
                                 const SaddleOptions& options = {});

/// Sum of the localized element corrections over all elements;
/// elements on which v has no energy are skipped exactly.
FineField corrector_sum(const Spaces& spaces, const CoefficientField& A,
                        const FineField& v, int ell, int threads = 1,
                        const SaddleOptions& options = {},
                        long* solve_count = nullptr);

/// One-shot global corrector: a(C v, w) = a(v, w) for all w in the
/// fine-scale space over the whole domain.
FineField global_corrector(const Spaces& spaces, const CoefficientField& A,
                           const FineField& v,
                           const SaddleOptions& options = {});

/// Patch order that makes every patch the whole domain.
int full_patch_order(const CartesianMesh& coarse);

/// CSV report of corrector tail energies, one row per patch order:
/// columns T_i,T_j,ell,tail_energy where tail_energy is the energy
/// norm of the global element correction outside N^ell(T).
std::string corrector_tail_report(const Spaces& spaces,
                                  const CoefficientField& A, ElementId T,
                                  const FineField& v,
                                  const std::vector<int>& ells,
                                  const SaddleOptions& options = {});

/// Saddle-point operator R on a region: moments of the result match
/// the given coefficients, energy-orthogonal otherwise.
FineField solve_r(const Spaces& spaces, const CoefficientField& A, Rect region,
                  const CoarseCoeffVector& v_h,
                  const SaddleOptions& options = {});

/// One corrector job: either a restricted-bilinear-form right-hand
/// side a_source(g, .) with homogeneous moments, or a unit moment
/// constraint (the saddle operator R applied to one basis function).
struct RhsSpec {
  ElementId source{};
  const SparseField* g = nullptr;
  bool moment_mode = false;
  ElementId moment_elem{};
  int moment_j = 0;
  int target = -1; // caller-defined slot
};

struct RectGroup {
  Rect rect;
  std::vector<RhsSpec> rhs;
};

/// Coalesces corrector jobs that share a patch rectangle so each
/// system is assembled and factored once.
class GroupBuilder {
public:
  /// Returns (group index, rhs index) of the added job.
  std::pair<std::size_t, std::size_t> add(Rect rect, RhsSpec spec);
  std::vector<RectGroup> take() { return std::move(groups_); }

private:
  std::vector<RectGroup> groups_;
  std::map<Rect, std::size_t> index_;
};

/// Runs all groups, factorizing each patch once. Returns one sparse
/// piece per RhsSpec, in group order; pieces for exactly-zero
/// right-hand sides are empty and not counted as solves. Deterministic
/// for any thread count.
std::vector<std::vector<SparseField>> run_corrector_groups(
    const Spaces& spaces, const CoefficientField& A,
    const std::vector<RectGroup>& groups, int threads,
    const SaddleOptions& options, long* solve_count);

} // namespace splod
