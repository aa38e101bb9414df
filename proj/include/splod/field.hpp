#pragma once

#include <Eigen/Dense>
#include <functional>

#include "splod/mesh.hpp"

namespace splod {

/// Nodal coefficient vector of a function in the fine Q1 space.
/// Always stored over the full node set; constrained nodes carry
/// explicit zeros.
struct FineField {
  int level = 0;
  Eigen::VectorXd values;
};

inline FineField zero_field(const CartesianMesh& mesh) {
  return {mesh.level(), Eigen::VectorXd::Zero(mesh.node_count())};
}

/// Nodal interpolant of f(x, y).
FineField interpolate(const CartesianMesh& mesh,
                      const std::function<double(double, double)>& f);

/// Sparse fine field: node indices (ascending) with values. Structural
/// support is tracked exactly; absent nodes are exact zeros.
struct SparseField {
  std::vector<int> idx;
  std::vector<double> val;

  void add_to(Eigen::VectorXd& dense) const {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      dense[idx[k]] += val[k];
    }
  }
  void clear_from(Eigen::VectorXd& dense) const {
    for (int n : idx) {
      dense[n] = 0.0;
    }
  }
};

} // namespace splod
