#pragma once

#include <limits>
#include <vector>

#include "slimipl/model.hpp"

namespace slimipl::optim {

struct AdagradState {
  std::vector<Matrix> accumulators;
  double lr = 0.05;
  double eps = 1e-8;
  std::int64_t rejected_steps = 0;

  static AdagradState for_model(const model::ModelState& m, double lr, double eps = 1e-8);
};

// theta <- theta - lr * g / (sqrt(acc) + eps), after acc += g^2.
// A gradient containing a non-finite value is rejected: nothing changes and
// rejected_steps is incremented. Returns whether the step was applied.
bool adagrad_step(model::ModelState& m, const model::Gradients& grads, AdagradState& state);

// Halves the learning rate when the (lower-is-better) metric has not improved
// by more than min_delta for `patience` consecutive evaluations.
struct PlateauScheduler {
  int patience = 3;
  double min_delta = 1e-4;
  double best_metric = std::numeric_limits<double>::infinity();
  int evals_since_best = 0;
  int halvings = 0;

  static constexpr double kFactor = 2.0;
};

double plateau_update(PlateauScheduler& sched, AdagradState& opt, double dev_metric);

struct EmaState {
  std::vector<Matrix> shadow;
  double decay = 0.999;

  static EmaState from_model(const model::ModelState& m, double decay);
};

void ema_update(EmaState& ema, const model::ModelState& m);

// Swaps the shadow weights into the model for eval-mode inference and swaps
// them back on destruction. Must not outlive an optimizer step.
class EmaSwap {
 public:
  EmaSwap(EmaState& ema, model::ModelState& m);
  ~EmaSwap();
  EmaSwap(const EmaSwap&) = delete;
  EmaSwap& operator=(const EmaSwap&) = delete;

  const model::ModelState& model() const { return model_; }

 private:
  EmaState& ema_;
  model::ModelState& model_;
};

inline EmaSwap ema_swap_for_inference(EmaState& ema, model::ModelState& m) { return EmaSwap(ema, m); }

}  // namespace slimipl::optim
