#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "slimipl/common.hpp"
#include "slimipl/model.hpp"

namespace slimipl {

// Build identifier written into every checkpoint; resuming across builds with a
// different identifier is refused.
inline constexpr const char* kBuildVersion = "slimipl-1.0.0";

// Binary container of named entries: f64 tensors with a (rows, cols) header
// and opaque byte blobs. All numbers little-endian.
class Checkpoint {
 public:
  void put_tensor(const std::string& name, const Matrix& value);
  void put_bytes(const std::string& name, std::string value);
  void put_int(const std::string& name, std::int64_t value);
  void put_double(const std::string& name, double value);

  bool has(const std::string& name) const;
  const Matrix& tensor(const std::string& name) const;
  const std::string& bytes(const std::string& name) const;
  std::int64_t get_int(const std::string& name) const;
  double get_double(const std::string& name) const;

  void write(std::ostream& os, const std::string& build_version = kBuildVersion) const;
  static Checkpoint read(std::istream& is, const std::string& expected_build = kBuildVersion);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, Matrix> tensors_;
  std::map<std::string, std::string> blobs_;
};

void put_model(Checkpoint& ckpt, const std::string& prefix, const model::ModelState& m);
model::ModelState get_model(const Checkpoint& ckpt, const std::string& prefix);

void save_model(const std::string& path, const model::ModelState& m);
model::ModelState load_model(const std::string& path);

}  // namespace slimipl
