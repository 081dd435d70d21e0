#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "slimipl/common.hpp"

namespace slimipl::io {

// Little-endian primitives over std::ostream / std::istream.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  // Shape prefix (rows, cols) followed by row-major f64 data.
  void matrix(const Matrix& m);
  void tokens(const TokenSeq& t);

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  Matrix matrix();
  TokenSeq tokens();
  bool at_end();

 private:
  void read_bytes(char* dst, std::size_t n);

  std::istream& is_;
};

}  // namespace slimipl::io
