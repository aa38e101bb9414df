#include "splod/mesh.hpp"

#include <algorithm>
#include <string>

namespace splod {

CartesianMesh::CartesianMesh(int level) : level_(level), n_(1 << level) {
  if (level < 0) {
    throw ArgumentError("mesh level must be nonnegative");
  }
  if (level > 14) {
    throw ResourceError("mesh level " + std::to_string(level) +
                        " exceeds the level-14 memory guard");
  }
}

CartesianMesh build_mesh(int level) { return CartesianMesh(level); }

std::vector<ElementId> Patch::cells() const {
  std::vector<ElementId> out;
  out.reserve(static_cast<std::size_t>(rect.cell_count()));
  for (int j = rect.j0; j <= rect.j1; ++j) {
    for (int i = rect.i0; i <= rect.i1; ++i) {
      out.push_back({i, j});
    }
  }
  return out;
}

Patch patch(const CartesianMesh& mesh, ElementId center, int ell) {
  if (!mesh.contains(center)) {
    throw ArgumentError("patch center (" + std::to_string(center.i) + "," +
                        std::to_string(center.j) + ") outside mesh");
  }
  if (ell < 1) {
    throw ArgumentError("patch order must be positive");
  }
  const int n = mesh.cells_per_side();
  Patch p;
  p.center = center;
  p.ell = ell;
  p.level = mesh.level();
  p.rect = {std::max(0, center.i - ell), std::max(0, center.j - ell),
            std::min(n - 1, center.i + ell), std::min(n - 1, center.j + ell)};
  return p;
}

std::vector<ElementId> children(const CartesianMesh& coarse, ElementId T,
                                const CartesianMesh& fine) {
  if (fine.level() < coarse.level()) {
    throw ArgumentError("children: fine level below coarse level");
  }
  if (!coarse.contains(T)) {
    throw ArgumentError("children: element outside coarse mesh");
  }
  const int r = 1 << (fine.level() - coarse.level());
  std::vector<ElementId> out;
  out.reserve(static_cast<std::size_t>(r) * r);
  for (int b = 0; b < r; ++b) {
    for (int a = 0; a < r; ++a) {
      out.push_back({T.i * r + a, T.j * r + b});
    }
  }
  return out;
}

std::vector<int> interior_nodes(const CartesianMesh& mesh,
                                const std::vector<ElementId>& region) {
  if (region.empty()) {
    throw ArgumentError("interior_nodes: empty region");
  }
  const int n = mesh.cells_per_side();
  std::vector<char> in_region(static_cast<std::size_t>(mesh.cell_count()), 0);
  for (const ElementId& e : region) {
    if (!mesh.contains(e)) {
      throw ArgumentError("interior_nodes: region cell outside mesh");
    }
    in_region[static_cast<std::size_t>(mesh.cell_index(e))] = 1;
  }
  std::vector<int> nodes;
  for (int gy = 1; gy < n; ++gy) {
    for (int gx = 1; gx < n; ++gx) {
      const bool inside =
          in_region[std::size_t(mesh.cell_index({gx - 1, gy - 1}))] &&
          in_region[std::size_t(mesh.cell_index({gx, gy - 1}))] &&
          in_region[std::size_t(mesh.cell_index({gx - 1, gy}))] &&
          in_region[std::size_t(mesh.cell_index({gx, gy}))];
      if (inside) {
        nodes.push_back(mesh.node_index(gx, gy));
      }
    }
  }
  return nodes;
}

std::vector<int> rect_interior_nodes(const CartesianMesh& coarse,
                                     const Rect& rect,
                                     const CartesianMesh& fine) {
  if (fine.level() < coarse.level()) {
    throw ArgumentError("rect_interior_nodes: fine level below coarse level");
  }
  if (rect.empty()) {
    throw ArgumentError("rect_interior_nodes: empty rectangle");
  }
  const int m = 1 << (fine.level() - coarse.level());
  const int gx0 = rect.i0 * m, gx1 = (rect.i1 + 1) * m;
  const int gy0 = rect.j0 * m, gy1 = (rect.j1 + 1) * m;
  std::vector<int> nodes;
  nodes.reserve(std::size_t(gx1 - gx0 - 1) * std::size_t(gy1 - gy0 - 1));
  for (int gy = gy0 + 1; gy < gy1; ++gy) {
    for (int gx = gx0 + 1; gx < gx1; ++gx) {
      nodes.push_back(fine.node_index(gx, gy));
    }
  }
  return nodes;
}

} // namespace splod
