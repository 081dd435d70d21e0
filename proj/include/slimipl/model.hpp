#pragma once

#include <string>
#include <vector>

#include "slimipl/common.hpp"
#include "slimipl/ctc.hpp"

namespace slimipl::model {

struct ModelConfig {
  int feature_dim = 16;
  int kernel = 7;
  int stride = 3;
  int hidden = 32;
  int blocks = 1;
  int vocab_size = 8;
  double dropout = 0.5;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Frame count after the strided convolution: ceil(frames / stride).
int output_frames(int frames, int stride);

// Conv (kernel x feature_dim -> hidden), `blocks` residual feed-forward blocks,
// and a projection onto vocab_size + 1 classes (blank last).
struct ModelState {
  ModelConfig config;
  std::vector<Matrix> params;
  double dropout = 0.0;
  std::int64_t update_count = 0;

  std::vector<std::string> param_names() const;
  std::size_t parameter_count() const;
};

using Gradients = std::vector<Matrix>;

// Zero tensors with the same shapes as the model parameters.
Gradients zeros_like(const ModelState& m);

// Closed-form parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& cfg);

ModelState init_model(const ModelConfig& cfg, std::uint64_t seed);

enum class Mode { kTrain, kEval };

struct ForwardResult;

// Activations and dropout masks of one forward call; consumed by one backward.
class ForwardTape {
 public:
  bool consumed() const { return consumed_; }

 private:
  friend ForwardResult forward(const ModelState& m, const Matrix& features, Mode mode, Rng* rng);
  friend Gradients backward(const ModelState& m, ForwardTape& tape, const Matrix& grad_log_posteriors);

  struct BlockTape {
    Matrix input;
    Matrix pre;     // before ReLU
    Matrix hidden;  // after ReLU and dropout
    Matrix mask;    // empty when dropout is inactive
  };

  Matrix patches;
  Matrix conv_pre;
  Matrix conv_mask;
  std::vector<BlockTape> blocks;
  Matrix top;
  Matrix probs;
  bool consumed_ = false;
};

struct ForwardResult {
  ctc::LogPosteriors log_posteriors;
  ForwardTape tape;
};

// rng is required in train mode when dropout > 0.
ForwardResult forward(const ModelState& m, const Matrix& features, Mode mode, Rng* rng = nullptr);

// Evaluation-mode forward without keeping a tape.
ctc::LogPosteriors infer(const ModelState& m, const Matrix& features);

Gradients backward(const ModelState& m, ForwardTape& tape, const Matrix& grad_log_posteriors);

void set_dropout(ModelState& m, double rate);

}  // namespace slimipl::model
