#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splod/mesh.hpp"

namespace splod {

/// Piecewise-constant scalar diffusion coefficient on the dyadic grid
/// of `level`. Cell values are row-major; bounds satisfy
/// 0 < alpha <= value <= beta for every cell.
struct CoefficientField {
  int level = 0;
  std::uint64_t seed = 0;
  int family = 0; // 0 custom, 1 = multiscale noise, 2 = channels
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> cells;

  int cells_per_side() const { return 1 << level; }

  double value(ElementId e) const {
    const int n = cells_per_side();
    return cells[std::size_t(e.j) * n + e.i];
  }

  /// Value on a fine cell of a mesh at least as fine as the
  /// coefficient grid (the coefficient is constant on fine cells).
  double value_on(const CartesianMesh& fine, ElementId cell) const {
    const int shift = fine.level() - level;
    return value({cell.i >> shift, cell.j >> shift});
  }

  void validate() const;
};

/// Multiscale noise coefficient: weighted sum of per-scale uniform
/// fields, rescaled onto [1,4]. Layer k = 1..level draws an iid
/// uniform(0,1) field on the 2^k grid (row-major, one SplitMix64
/// stream per layer seeded with SplitMix64(seed+k) mixing) and enters
/// the sum with weight 2^(-k/2) after prolongation to the 2^level
/// grid. The affine rescale maps the attained min/max onto 1 and 4.
CoefficientField gen_a1(std::uint64_t seed, int level);

/// High-contrast channel coefficient: iid uniform(0.1,1) background
/// (one row-major SplitMix64 stream) with four conductivity-10 strips
/// of width 2 cells. Horizontal strips have centerlines y = 0.2,
/// 0.45, 0.7 and span x in [0.1,0.9]; the vertical strip sits at
/// x = 0.55 spanning y in [0.1,0.9].
CoefficientField gen_a2(std::uint64_t seed, int level);

/// Binary coefficient file: magic "SPLODCF1", then little-endian
/// u32 version, u32 level, u32 family, u64 seed, f64 alpha, f64 beta,
/// and 4^level row-major f64 cell values.
void save_coefficient(const CoefficientField& field, const std::string& path);
CoefficientField load_coefficient(const std::string& path);

} // namespace splod
