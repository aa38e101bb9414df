#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splod {

/// Self-describing binary grid dump readable from any plotting tool:
/// magic "SPLODFD1", then little-endian u32 version, u32 kind, i32 p,
/// i32 ell, i32 coarse_level, i32 fine_level, i32 Ti, i32 Tj, i32 j,
/// u64 count, and `count` row-major f64 values (node values for
/// kinds 1/2/4, cell values for kind 3).
struct FieldDump {
  enum Kind : std::uint32_t {
    kBasis = 1,
    kBubble = 2,
    kCoefficient = 3,
    kSolution = 4,
  };
  std::uint32_t kind = kSolution;
  std::int32_t p = -1;
  std::int32_t ell = -1;
  std::int32_t coarse_level = -1;
  std::int32_t fine_level = -1;
  std::int32_t ti = -1;
  std::int32_t tj = -1;
  std::int32_t j = -1;
  std::vector<double> values;
};

void write_field_dump(const FieldDump& dump, const std::string& path);
FieldDump read_field_dump(const std::string& path);

} // namespace splod
