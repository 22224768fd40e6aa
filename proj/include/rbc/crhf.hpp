#pragma once

// CRHF binary field dumps.
//
// Layout (all little-endian): "CRHF", u32 version = 1, u32 kind (0 node,
// 1 edge), u32 d, d x i64 half width per axis, then f64 payload. Node payloads
// are in row-major node order. Edge payloads are grouped by direction k = 1..d;
// within a direction the edges (n, n + e_k) are listed in row-major order of n
// over the nodes that have such an edge.

#include <iosfwd>
#include <string>
#include <variant>

#include "rbc/lattice.hpp"

namespace rbc {

inline constexpr std::uint32_t kCrhfVersion = 1;

class CrhfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void writeCrhf(std::ostream& os, const NodeField& u);
void writeCrhf(std::ostream& os, const EdgeField& h);
void writeCrhf(const std::string& path, const NodeField& u);
void writeCrhf(const std::string& path, const EdgeField& h);

using CrhfField = std::variant<NodeField, EdgeField>;
CrhfField readCrhf(std::istream& is);
CrhfField readCrhf(const std::string& path);

}  // namespace rbc
