#include "henfd/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace henfd {

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_i32(std::ostream& os, std::int32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int32_t read_i32(std::istream& is) {
  std::int32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& manifest_json) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os << kCheckpointMagic << '\n';
  write_u64(os, manifest_json.size());
  os.write(manifest_json.data(), static_cast<std::streamsize>(manifest_json.size()));
  write_u64(os, static_cast<std::uint64_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    const auto& e = store.entry(i);
    write_u64(os, e.name.size());
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_i32(os, e.rows);
    write_i32(os, e.cols);
    os.write(reinterpret_cast<const char*>(e.value.data()),
             static_cast<std::streamsize>(sizeof(double) * e.value.size()));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string magic;
  std::getline(is, magic);
  if (magic != kCheckpointMagic)
    throw std::runtime_error("checkpoint: bad magic in '" + path +
                             "' (expected " + std::string(kCheckpointMagic) + ")");
  LoadedCheckpoint out;
  const std::uint64_t mlen = read_u64(is);
  out.manifest_json.resize(mlen);
  is.read(out.manifest_json.data(), static_cast<std::streamsize>(mlen));
  const std::uint64_t n = read_u64(is);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t nlen = read_u64(is);
    std::string name(nlen, '\0');
    is.read(name.data(), static_cast<std::streamsize>(nlen));
    const int rows = read_i32(is);
    const int cols = read_i32(is);
    if (!is || rows <= 0 || cols <= 0)
      throw std::runtime_error("checkpoint: corrupt entry in '" + path + "'");
    int id = out.store.add(name, rows, cols);
    auto& e = out.store.entry(id);
    is.read(reinterpret_cast<char*>(e.value.data()),
            static_cast<std::streamsize>(sizeof(double) * e.value.size()));
  }
  if (!is) throw std::runtime_error("checkpoint: truncated file '" + path + "'");
  return out;
}

}  // namespace henfd
