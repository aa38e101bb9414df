#include "splod/fielddump.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "splod/errors.hpp"

namespace splod {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'O', 'D', 'F', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

} // namespace

void write_field_dump(const FieldDump& dump, const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) {
    throw ValidationError("cannot open " + path + " for writing");
  }
  const auto put = [&](const void* data, std::size_t n) {
    if (std::fwrite(data, 1, n, f.get()) != n) {
      throw ValidationError("failed writing to " + path);
    }
  };
  put(kMagic, 8);
  put(&kVersion, 4);
  put(&dump.kind, 4);
  put(&dump.p, 4);
  put(&dump.ell, 4);
  put(&dump.coarse_level, 4);
  put(&dump.fine_level, 4);
  put(&dump.ti, 4);
  put(&dump.tj, 4);
  put(&dump.j, 4);
  const std::uint64_t count = dump.values.size();
  put(&count, 8);
  put(dump.values.data(), count * 8);
}

FieldDump read_field_dump(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) {
    throw ParseError("cannot open field dump " + path);
  }
  long offset = 0;
  const auto get = [&](void* data, std::size_t n) {
    if (std::fread(data, 1, n, f.get()) != n) {
      throw ParseError("truncated field dump " + path + " at byte " +
                       std::to_string(offset));
    }
    offset += long(n);
  };
  char magic[8];
  get(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError("bad magic in " + path);
  }
  std::uint32_t version = 0;
  get(&version, 4);
  if (version != kVersion) {
    throw ParseError("unsupported field dump version in " + path);
  }
  FieldDump dump;
  get(&dump.kind, 4);
  get(&dump.p, 4);
  get(&dump.ell, 4);
  get(&dump.coarse_level, 4);
  get(&dump.fine_level, 4);
  get(&dump.ti, 4);
  get(&dump.tj, 4);
  get(&dump.j, 4);
  std::uint64_t count = 0;
  get(&count, 8);
  if (count > (std::uint64_t(1) << 32)) {
    throw ParseError("implausible value count in " + path);
  }
  dump.values.resize(count);
  get(dump.values.data(), count * 8);
  return dump;
}

} // namespace splod
