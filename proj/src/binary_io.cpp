#include "slimipl/binary_io.hpp"

#include <bit>
#include <istream>
#include <ostream>

namespace slimipl::io {

namespace {

// Guards against absurd lengths from corrupt files.
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 34;

}  // namespace

void BinaryWriter::u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }

void BinaryWriter::u32(std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  }
  os_.write(buf, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  }
  os_.write(buf, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  os_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::matrix(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    f64(m.data()[i]);
  }
}

void BinaryWriter::tokens(const TokenSeq& t) {
  u64(t.size());
  for (int v : t) {
    u32(static_cast<std::uint32_t>(v));
  }
}

void BinaryReader::read_bytes(char* dst, std::size_t n) {
  is_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is_.gcount()) != n) {
    throw Error(ErrorCode::kIo, "unexpected end of binary stream");
  }
}

std::uint8_t BinaryReader::u8() {
  char c;
  read_bytes(&c, 1);
  return static_cast<std::uint8_t>(c);
}

std::uint32_t BinaryReader::u32() {
  unsigned char buf[4];
  read_bytes(reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  }
  return v;
}

std::uint64_t BinaryReader::u64() {
  unsigned char buf[8];
  read_bytes(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const auto n = u64();
  if (n > kMaxLength) {
    throw Error(ErrorCode::kIo, "string length out of range");
  }
  std::string s(n, '\0');
  read_bytes(s.data(), n);
  return s;
}

Matrix BinaryReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (rows > kMaxLength || cols > kMaxLength || rows * cols > kMaxLength) {
    throw Error(ErrorCode::kIo, "matrix shape out of range");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = f64();
  }
  return m;
}

TokenSeq BinaryReader::tokens() {
  const auto n = u64();
  if (n > kMaxLength) {
    throw Error(ErrorCode::kIo, "token sequence length out of range");
  }
  TokenSeq t(n);
  for (auto& v : t) {
    v = static_cast<int>(u32());
  }
  return t;
}

bool BinaryReader::at_end() { return is_.peek() == std::char_traits<char>::eof(); }

}  // namespace slimipl::io
