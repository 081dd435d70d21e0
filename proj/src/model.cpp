#include "slimipl/model.hpp"

#include <cmath>

namespace slimipl::model {

namespace {

constexpr std::size_t kConvW = 0;
constexpr std::size_t kConvB = 1;
constexpr std::size_t kBlockBase = 2;
constexpr std::size_t kPerBlock = 4;

std::size_t out_w(const ModelConfig& cfg) { return kBlockBase + kPerBlock * cfg.blocks; }

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform_unit(rng) < rate ? 0.0 : keep_scale;
  }
  return mask;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_grad(const Matrix& grad, const Matrix& pre) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

Matrix add_bias(Matrix x, const Matrix& bias) {
  x.rowwise() += bias.row(0);
  return x;
}

}  // namespace

void ModelConfig::validate() const {
  if (feature_dim < 1 || vocab_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "feature_dim and vocab_size must be >= 1");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidConfig, "conv kernel must be odd");
  }
  if (stride < 1 || hidden < 1 || blocks < 1) {
    throw Error(ErrorCode::kInvalidConfig, "stride, hidden and blocks must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "dropout must be in [0, 1)");
  }
}

int output_frames(int frames, int stride) { return (frames + stride - 1) / stride; }

std::vector<std::string> ModelState::param_names() const {
  std::vector<std::string> names = {"conv.weight", "conv.bias"};
  for (int b = 0; b < config.blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    names.insert(names.end(), {p + "fc1.weight", p + "fc1.bias", p + "fc2.weight", p + "fc2.bias"});
  }
  names.insert(names.end(), {"output.weight", "output.bias"});
  return names;
}

std::size_t ModelState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) {
    n += static_cast<std::size_t>(p.size());
  }
  return n;
}

Gradients zeros_like(const ModelState& m) {
  Gradients g;
  g.reserve(m.params.size());
  for (const auto& p : m.params) {
    g.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return g;
}

std::size_t expected_parameter_count(const ModelConfig& cfg) {
  const std::size_t h = cfg.hidden;
  const std::size_t classes = cfg.vocab_size + 1;
  const std::size_t conv = h * cfg.kernel * cfg.feature_dim + h;
  const std::size_t block = 2 * (h * h + h);
  return conv + cfg.blocks * block + classes * h + classes;
}

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = (2.0 * uniform_unit(rng) - 1.0) * bound;
    }
    return w;
  };

  ModelState m;
  m.config = cfg;
  m.dropout = cfg.dropout;
  const int conv_in = cfg.kernel * cfg.feature_dim;
  m.params.push_back(uniform(cfg.hidden, conv_in, conv_in));
  m.params.push_back(uniform(1, cfg.hidden, conv_in));
  for (int b = 0; b < cfg.blocks; ++b) {
    m.params.push_back(uniform(cfg.hidden, cfg.hidden, cfg.hidden));
    m.params.push_back(uniform(1, cfg.hidden, cfg.hidden));
    m.params.push_back(uniform(cfg.hidden, cfg.hidden, cfg.hidden));
    m.params.push_back(uniform(1, cfg.hidden, cfg.hidden));
  }
  m.params.push_back(uniform(cfg.vocab_size + 1, cfg.hidden, cfg.hidden));
  m.params.push_back(uniform(1, cfg.vocab_size + 1, cfg.hidden));
  return m;
}

ForwardResult forward(const ModelState& m, const Matrix& features, Mode mode, Rng* rng) {
  const ModelConfig& cfg = m.config;
  if (features.cols() != cfg.feature_dim) {
    throw Error(ErrorCode::kShapeMismatch, "feature dimension does not match model");
  }
  const int frames = static_cast<int>(features.rows());
  if (frames < cfg.kernel) {
    throw Error(ErrorCode::kInputTooShort,
                std::to_string(frames) + " frames < kernel " + std::to_string(cfg.kernel));
  }
  const bool drop = mode == Mode::kTrain && m.dropout > 0.0;
  if (drop && rng == nullptr) {
    throw Error(ErrorCode::kInvalidInput, "train-mode dropout needs an rng");
  }

  ForwardTape tape;
  const int out = output_frames(frames, cfg.stride);
  const int pad = (cfg.kernel - 1) / 2;
  const int f = cfg.feature_dim;
  tape.patches = Matrix::Zero(out, static_cast<Eigen::Index>(cfg.kernel) * f);
  for (int j = 0; j < out; ++j) {
    for (int i = 0; i < cfg.kernel; ++i) {
      const int src = j * cfg.stride + i - pad;
      if (src >= 0 && src < frames) {
        tape.patches.block(j, static_cast<Eigen::Index>(i) * f, 1, f) = features.row(src);
      }
    }
  }

  tape.conv_pre = add_bias(tape.patches * m.params[kConvW].transpose(), m.params[kConvB]);
  Matrix h = relu(tape.conv_pre);
  if (drop) {
    tape.conv_mask = dropout_mask(h.rows(), h.cols(), m.dropout, *rng);
    h = h.cwiseProduct(tape.conv_mask);
  }

  for (int b = 0; b < cfg.blocks; ++b) {
    const std::size_t base = kBlockBase + kPerBlock * b;
    ForwardTape::BlockTape bt;
    bt.input = h;
    bt.pre = add_bias(h * m.params[base].transpose(), m.params[base + 1]);
    bt.hidden = relu(bt.pre);
    if (drop) {
      bt.mask = dropout_mask(bt.hidden.rows(), bt.hidden.cols(), m.dropout, *rng);
      bt.hidden = bt.hidden.cwiseProduct(bt.mask);
    }
    h = h + add_bias(bt.hidden * m.params[base + 2].transpose(), m.params[base + 3]);
    tape.blocks.push_back(std::move(bt));
  }

  tape.top = h;
  const std::size_t ow = out_w(cfg);
  const Matrix logits = add_bias(h * m.params[ow].transpose(), m.params[ow + 1]);
  auto lp = ctc::LogPosteriors::from_logits(logits);
  tape.probs = lp.values().array().exp().matrix();
  return ForwardResult{std::move(lp), std::move(tape)};
}

ctc::LogPosteriors infer(const ModelState& m, const Matrix& features) {
  return forward(m, features, Mode::kEval).log_posteriors;
}

Gradients backward(const ModelState& m, ForwardTape& tape, const Matrix& grad_log_posteriors) {
  if (tape.consumed_) {
    throw Error(ErrorCode::kStaleTape, "forward tape already consumed");
  }
  if (grad_log_posteriors.rows() != tape.probs.rows() ||
      grad_log_posteriors.cols() != tape.probs.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient does not match forward output");
  }
  tape.consumed_ = true;

  const ModelConfig& cfg = m.config;
  Gradients g = zeros_like(m);

  // Log-softmax Jacobian.
  Matrix g_logits = grad_log_posteriors;
  const RowVector::PlainObject row_sums = grad_log_posteriors.rowwise().sum().transpose();
  for (Eigen::Index t = 0; t < g_logits.rows(); ++t) {
    g_logits.row(t) -= tape.probs.row(t) * row_sums(t);
  }

  const std::size_t ow = out_w(cfg);
  g[ow] = g_logits.transpose() * tape.top;
  g[ow + 1] = g_logits.colwise().sum();
  Matrix g_h = g_logits * m.params[ow];

  for (int b = cfg.blocks - 1; b >= 0; --b) {
    const std::size_t base = kBlockBase + kPerBlock * b;
    const auto& bt = tape.blocks[b];
    g[base + 2] = g_h.transpose() * bt.hidden;
    g[base + 3] = g_h.colwise().sum();
    Matrix g_hidden = g_h * m.params[base + 2];
    if (bt.mask.size() > 0) {
      g_hidden = g_hidden.cwiseProduct(bt.mask);
    }
    const Matrix g_pre = relu_grad(g_hidden, bt.pre);
    g[base] = g_pre.transpose() * bt.input;
    g[base + 1] = g_pre.colwise().sum();
    g_h += g_pre * m.params[base];
  }

  if (tape.conv_mask.size() > 0) {
    g_h = g_h.cwiseProduct(tape.conv_mask);
  }
  const Matrix g_conv = relu_grad(g_h, tape.conv_pre);
  g[kConvW] = g_conv.transpose() * tape.patches;
  g[kConvB] = g_conv.colwise().sum();
  return g;
}

void set_dropout(ModelState& m, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "dropout must be in [0, 1)");
  }
  m.dropout = rate;
}

}  // namespace slimipl::model
