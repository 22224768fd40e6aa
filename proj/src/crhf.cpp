#include "rbc/crhf.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rbc {
namespace {

template <typename T>
void putLE(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T getLE(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw CrhfError("truncated CRHF stream");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

void writeHeader(std::ostream& os, std::uint32_t kind, const LatticeBox& box) {
  os.write("CRHF", 4);
  putLE<std::uint32_t>(os, kCrhfVersion);
  putLE<std::uint32_t>(os, kind);
  putLE<std::uint32_t>(os, static_cast<std::uint32_t>(box.dim()));
  for (int k = 0; k < box.dim(); ++k) putLE<std::int64_t>(os, box.half(k));
}

std::ofstream openOut(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CrhfError("cannot open " + path + " for writing");
  return os;
}

}  // namespace

void writeCrhf(std::ostream& os, const NodeField& u) {
  writeHeader(os, 0, u.box);
  for (double v : u.values) putLE<double>(os, v);
}

void writeCrhf(std::ostream& os, const EdgeField& h) {
  writeHeader(os, 1, h.box);
  for (int k = 0; k < h.box.dim(); ++k)
    for (std::size_t idx = 0; idx < h.box.nodeCount(); ++idx)
      if (h.box.hasEdge(h.box.coord(idx), k)) putLE<double>(os, h.dir[k][idx]);
}

void writeCrhf(const std::string& path, const NodeField& u) {
  auto os = openOut(path);
  writeCrhf(os, u);
  if (!os) throw CrhfError("write failed: " + path);
}

void writeCrhf(const std::string& path, const EdgeField& h) {
  auto os = openOut(path);
  writeCrhf(os, h);
  if (!os) throw CrhfError("write failed: " + path);
}

CrhfField readCrhf(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "CRHF", 4) != 0) throw CrhfError("bad CRHF magic");
  const auto version = getLE<std::uint32_t>(is);
  if (version != kCrhfVersion) throw CrhfError("unsupported CRHF version " + std::to_string(version));
  const auto kind = getLE<std::uint32_t>(is);
  const auto d = getLE<std::uint32_t>(is);
  if (d != 2 && d != 3) throw CrhfError("bad CRHF dimension");
  Coord half{0, 0, 0};
  for (std::uint32_t k = 0; k < d; ++k) half[k] = getLE<std::int64_t>(is);
  const LatticeBox box(static_cast<int>(d), half);
  if (kind == 0) {
    NodeField u(box);
    for (auto& v : u.values) v = getLE<double>(is);
    return u;
  }
  if (kind == 1) {
    EdgeField h(box);
    for (int k = 0; k < box.dim(); ++k)
      for (std::size_t idx = 0; idx < box.nodeCount(); ++idx)
        if (box.hasEdge(box.coord(idx), k)) h.dir[k][idx] = getLE<double>(is);
    return h;
  }
  throw CrhfError("bad CRHF kind " + std::to_string(kind));
}

CrhfField readCrhf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CrhfError("cannot open " + path);
  return readCrhf(is);
}

}  // namespace rbc
