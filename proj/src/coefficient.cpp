#include "splod/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <utility>

#include "splod/errors.hpp"
#include "splod/rng.hpp"

namespace splod {

void CoefficientField::validate() const {
  const std::int64_t n = std::int64_t(1) << (2 * level);
  if (std::int64_t(cells.size()) != n) {
    throw ValidationError("coefficient cell count does not match level");
  }
  if (!(alpha > 0.0)) {
    throw ValidationError("coefficient bound alpha must be positive");
  }
  if (!(alpha <= beta)) {
    throw ValidationError("coefficient bounds out of order");
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double v = cells[k];
    if (!(v >= alpha) || !(v <= beta)) {
      throw ValidationError("coefficient cell " + std::to_string(k) +
                            " violates bounds [alpha,beta]");
    }
  }
}

CoefficientField gen_a1(std::uint64_t seed, int level) {
  if (level < 1) {
    throw ArgumentError("gen_a1: level must be >= 1");
  }
  const int n = 1 << level;
  std::vector<double> sum(std::size_t(n) * n, 0.0);
  for (int k = 1; k <= level; ++k) {
    // Sub-stream per scale so layers are independent of each other.
    SplitMix64 mix(seed + std::uint64_t(k));
    SplitMix64 rng(mix.next_u64());
    const int nk = 1 << k;
    std::vector<double> layer(std::size_t(nk) * nk);
    for (double& v : layer) {
      v = rng.next_double();
    }
    const double weight = std::pow(2.0, -0.5 * k);
    const int r = n / nk;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        sum[std::size_t(j) * n + i] +=
            weight * layer[std::size_t(j / r) * nk + i / r];
      }
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(sum.begin(), sum.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = (hi > lo) ? 3.0 / (hi - lo) : 0.0;
  CoefficientField field;
  field.level = level;
  field.seed = seed;
  field.family = 1;
  field.alpha = 1.0;
  field.beta = 4.0;
  field.cells.resize(sum.size());
  for (std::size_t k = 0; k < sum.size(); ++k) {
    field.cells[k] = std::clamp(1.0 + (sum[k] - lo) * scale, 1.0, 4.0);
  }
  return field;
}

CoefficientField gen_a2(std::uint64_t seed, int level) {
  if (level < 4) {
    throw ArgumentError("gen_a2: level must be >= 4");
  }
  const int n = 1 << level;
  CoefficientField field;
  field.level = level;
  field.seed = seed;
  field.family = 2;
  field.alpha = 0.1;
  field.beta = 10.0;
  field.cells.resize(std::size_t(n) * n);
  SplitMix64 rng(seed);
  for (double& v : field.cells) {
    v = rng.next_double(0.1, 1.0);
  }
  // Width-2 strips: the two cell rows/columns around the centerline.
  const auto strip = [n](double center) {
    const int hi = std::min(n - 1, std::max(1, int(std::floor(center * n))));
    return std::pair<int, int>{hi - 1, hi};
  };
  const auto span = [n](double a, double b) {
    int lo = 0, hi = n - 1;
    while (lo < n && (lo + 0.5) < a * n) ++lo;
    while (hi >= 0 && (hi + 0.5) > b * n) --hi;
    return std::pair<int, int>{lo, hi};
  };
  const auto [sx0, sx1] = span(0.1, 0.9);
  for (double yc : {0.2, 0.45, 0.7}) {
    const auto [j0, j1] = strip(yc);
    for (int j = j0; j <= j1; ++j) {
      for (int i = sx0; i <= sx1; ++i) {
        field.cells[std::size_t(j) * n + i] = 10.0;
      }
    }
  }
  const auto [sy0, sy1] = span(0.1, 0.9);
  const auto [i0, i1] = strip(0.55);
  for (int j = sy0; j <= sy1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      field.cells[std::size_t(j) * n + i] = 10.0;
    }
  }
  return field;
}

namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'O', 'D', 'C', 'F', '1'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

void write_bytes(std::FILE* f, const void* data, std::size_t n,
                 const std::string& path) {
  if (std::fwrite(data, 1, n, f) != n) {
    throw ValidationError("failed writing to " + path);
  }
}

void read_bytes(std::FILE* f, void* data, std::size_t n, long& offset,
                const std::string& path) {
  if (std::fread(data, 1, n, f) != n) {
    throw ParseError("truncated coefficient file " + path + " at byte " +
                     std::to_string(offset));
  }
  offset += long(n);
}

} // namespace

// Little-endian throughout; this writer assumes a little-endian host,
// matching every platform this project targets.
void save_coefficient(const CoefficientField& field, const std::string& path) {
  field.validate();
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) {
    throw ValidationError("cannot open " + path + " for writing");
  }
  write_bytes(f.get(), kMagic, sizeof(kMagic), path);
  const std::uint32_t version = kVersion;
  const std::uint32_t level = std::uint32_t(field.level);
  const std::uint32_t family = std::uint32_t(field.family);
  write_bytes(f.get(), &version, 4, path);
  write_bytes(f.get(), &level, 4, path);
  write_bytes(f.get(), &family, 4, path);
  write_bytes(f.get(), &field.seed, 8, path);
  write_bytes(f.get(), &field.alpha, 8, path);
  write_bytes(f.get(), &field.beta, 8, path);
  write_bytes(f.get(), field.cells.data(), field.cells.size() * 8, path);
}

CoefficientField load_coefficient(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) {
    throw ParseError("cannot open coefficient file " + path);
  }
  long offset = 0;
  char magic[8];
  read_bytes(f.get(), magic, 8, offset, path);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError("bad magic in " + path + " at byte 0");
  }
  std::uint32_t version = 0, level = 0, family = 0;
  read_bytes(f.get(), &version, 4, offset, path);
  if (version != kVersion) {
    throw ParseError("unsupported coefficient file version in " + path);
  }
  read_bytes(f.get(), &level, 4, offset, path);
  if (level > 14) {
    throw ParseError("implausible level in " + path);
  }
  read_bytes(f.get(), &family, 4, offset, path);
  CoefficientField field;
  field.level = int(level);
  field.family = int(family);
  read_bytes(f.get(), &field.seed, 8, offset, path);
  read_bytes(f.get(), &field.alpha, 8, offset, path);
  read_bytes(f.get(), &field.beta, 8, offset, path);
  field.cells.resize(std::size_t(1) << (2 * level));
  read_bytes(f.get(), field.cells.data(), field.cells.size() * 8, offset,
             path);
  field.validate();
  return field;
}

} // namespace splod
