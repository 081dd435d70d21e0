#include "slimipl/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slimipl/binary_io.hpp"

namespace slimipl {

namespace {

constexpr char kMagic[] = "SLIMCKPT";
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kTensor = 0;
constexpr std::uint8_t kBytes = 1;

}  // namespace

void Checkpoint::put_tensor(const std::string& name, const Matrix& value) { tensors_[name] = value; }

void Checkpoint::put_bytes(const std::string& name, std::string value) { blobs_[name] = std::move(value); }

void Checkpoint::put_int(const std::string& name, std::int64_t value) {
  std::ostringstream os;
  io::BinaryWriter(os).i64(value);
  blobs_[name] = os.str();
}

void Checkpoint::put_double(const std::string& name, double value) {
  std::ostringstream os;
  io::BinaryWriter(os).f64(value);
  blobs_[name] = os.str();
}

bool Checkpoint::has(const std::string& name) const {
  return tensors_.count(name) > 0 || blobs_.count(name) > 0;
}

const Matrix& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint has no tensor '" + name + "'");
  }
  return it->second;
}

const std::string& Checkpoint::bytes(const std::string& name) const {
  auto it = blobs_.find(name);
  if (it == blobs_.end()) {
    throw Error(ErrorCode::kParse, "checkpoint has no entry '" + name + "'");
  }
  return it->second;
}

std::int64_t Checkpoint::get_int(const std::string& name) const {
  std::istringstream is(bytes(name));
  return io::BinaryReader(is).i64();
}

double Checkpoint::get_double(const std::string& name) const {
  std::istringstream is(bytes(name));
  return io::BinaryReader(is).f64();
}

void Checkpoint::write(std::ostream& os, const std::string& build_version) const {
  io::BinaryWriter w(os);
  os.write(kMagic, 8);
  w.u32(kFormatVersion);
  w.str(build_version);
  w.u64(tensors_.size() + blobs_.size());
  for (const auto& [name, value] : tensors_) {
    w.str(name);
    w.u8(kTensor);
    w.matrix(value);
  }
  for (const auto& [name, value] : blobs_) {
    w.str(name);
    w.u8(kBytes);
    w.str(value);
  }
}

Checkpoint Checkpoint::read(std::istream& is, const std::string& expected_build) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw Error(ErrorCode::kParse, "not a checkpoint file");
  }
  io::BinaryReader r(is);
  if (r.u32() != kFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported checkpoint format");
  }
  const std::string build = r.str();
  if (build != expected_build) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint written by '" + build + "', expected '" + expected_build + "'");
  }
  Checkpoint ckpt;
  const auto count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto kind = r.u8();
    if (kind == kTensor) {
      ckpt.tensors_[name] = r.matrix();
    } else if (kind == kBytes) {
      ckpt.blobs_[name] = r.str();
    } else {
      throw Error(ErrorCode::kParse, "unknown checkpoint entry kind");
    }
  }
  return ckpt;
}

void Checkpoint::save(const std::string& path) const {
  // Write-then-rename so a crash never leaves a truncated checkpoint behind.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) {
      throw Error(ErrorCode::kIo, "cannot write " + tmp);
    }
    write(os);
    if (!os) {
      throw Error(ErrorCode::kIo, "write failed for " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorCode::kIo, "cannot rename " + tmp);
  }
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error(ErrorCode::kIo, "cannot open " + path);
  }
  return read(is);
}

void put_model(Checkpoint& ckpt, const std::string& prefix, const model::ModelState& m) {
  const auto& c = m.config;
  Matrix shape(1, 7);
  shape << c.feature_dim, c.kernel, c.stride, c.hidden, c.blocks, c.vocab_size, c.dropout;
  ckpt.put_tensor(prefix + "config", shape);
  ckpt.put_double(prefix + "dropout", m.dropout);
  ckpt.put_int(prefix + "update_count", m.update_count);
  const auto names = m.param_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    ckpt.put_tensor(prefix + names[i], m.params[i]);
  }
}

model::ModelState get_model(const Checkpoint& ckpt, const std::string& prefix) {
  const Matrix& shape = ckpt.tensor(prefix + "config");
  if (shape.rows() != 1 || shape.cols() != 7) {
    throw Error(ErrorCode::kShapeMismatch, "bad model config record");
  }
  model::ModelConfig c;
  c.feature_dim = static_cast<int>(shape(0, 0));
  c.kernel = static_cast<int>(shape(0, 1));
  c.stride = static_cast<int>(shape(0, 2));
  c.hidden = static_cast<int>(shape(0, 3));
  c.blocks = static_cast<int>(shape(0, 4));
  c.vocab_size = static_cast<int>(shape(0, 5));
  c.dropout = shape(0, 6);
  model::ModelState m = model::init_model(c, 0);
  m.dropout = ckpt.get_double(prefix + "dropout");
  m.update_count = ckpt.get_int(prefix + "update_count");
  const auto names = m.param_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Matrix& t = ckpt.tensor(prefix + names[i]);
    if (t.rows() != m.params[i].rows() || t.cols() != m.params[i].cols()) {
      throw Error(ErrorCode::kShapeMismatch, "tensor '" + names[i] + "' has the wrong shape");
    }
    m.params[i] = t;
  }
  return m;
}

void save_model(const std::string& path, const model::ModelState& m) {
  Checkpoint ckpt;
  put_model(ckpt, "model/", m);
  ckpt.save(path);
}

model::ModelState load_model(const std::string& path) { return get_model(Checkpoint::load(path), "model/"); }

}  // namespace slimipl
