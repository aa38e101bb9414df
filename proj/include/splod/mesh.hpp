#pragma once

#include <cstdint>
#include <vector>

#include "splod/errors.hpp"

namespace splod {

/// Cell coordinates on a dyadic Cartesian grid. i is the x-column,
/// j is the y-row; cell (i,j) covers [i*h,(i+1)*h] x [j*h,(j+1)*h].
struct ElementId {
  int i = 0;
  int j = 0;

  friend bool operator==(const ElementId&, const ElementId&) = default;
  friend auto operator<=>(const ElementId&, const ElementId&) = default;
};

/// Uniform 2^level x 2^level quadrilateral mesh of the unit square.
/// Cells and nodes are numbered row-major (x fastest). Immutable.
class CartesianMesh {
public:
  explicit CartesianMesh(int level);

  int level() const { return level_; }
  int cells_per_side() const { return n_; }
  int nodes_per_side() const { return n_ + 1; }
  std::int64_t cell_count() const { return std::int64_t(n_) * n_; }
  std::int64_t node_count() const {
    return std::int64_t(n_ + 1) * (n_ + 1);
  }

  /// Element side length, the mesh size H.
  double h() const { return 1.0 / n_; }

  bool contains(ElementId e) const {
    return e.i >= 0 && e.i < n_ && e.j >= 0 && e.j < n_;
  }

  int cell_index(ElementId e) const { return e.j * n_ + e.i; }
  ElementId cell_at(int index) const { return {index % n_, index / n_}; }

  int node_index(int gx, int gy) const { return gy * (n_ + 1) + gx; }

private:
  int level_;
  int n_;
};

/// Axis-aligned cell rectangle [i0,i1] x [j0,j1], bounds inclusive.
struct Rect {
  int i0 = 0, j0 = 0, i1 = -1, j1 = -1;

  bool empty() const { return i1 < i0 || j1 < j0; }
  int width() const { return i1 - i0 + 1; }
  int height() const { return j1 - j0 + 1; }
  std::int64_t cell_count() const {
    return empty() ? 0 : std::int64_t(width()) * height();
  }
  bool contains(ElementId e) const {
    return e.i >= i0 && e.i <= i1 && e.j >= j0 && e.j <= j1;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
  friend auto operator<=>(const Rect&, const Rect&) = default;
};

/// Element patch N^ell(T): the ell-fold neighborhood closure of the
/// center element, clipped at the domain boundary. On a uniform
/// Cartesian grid this is exactly the Chebyshev ball of radius ell.
struct Patch {
  ElementId center;
  int ell = 0;
  int level = 0;
  Rect rect;

  /// Cells of the patch in row-major order.
  std::vector<ElementId> cells() const;
};

/// Builds the dyadic mesh at the given level. Guarded at level <= 14.
CartesianMesh build_mesh(int level);

/// N^ell(center) on `mesh`.
Patch patch(const CartesianMesh& mesh, ElementId center, int ell);

/// The 4^(fine.level - coarse.level) fine cells tiling T, row-major.
std::vector<ElementId> children(const CartesianMesh& coarse, ElementId T,
                                const CartesianMesh& fine);

/// Nodes strictly inside the union of the region's cells, excluding the
/// union boundary and the domain boundary. Ordered by node index.
std::vector<int> interior_nodes(const CartesianMesh& mesh,
                                const std::vector<ElementId>& region);

/// Interior fine nodes of a coarse rectangle (node indices on `fine`).
std::vector<int> rect_interior_nodes(const CartesianMesh& coarse,
                                     const Rect& rect,
                                     const CartesianMesh& fine);

} // namespace splod
