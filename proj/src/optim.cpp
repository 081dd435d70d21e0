#include "slimipl/optim.hpp"

#include <cmath>

namespace slimipl::optim {

namespace {

void check_shapes(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor count mismatch");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) {
      throw Error(ErrorCode::kShapeMismatch, "tensor " + std::to_string(i) + " shape mismatch");
    }
  }
}

}  // namespace

AdagradState AdagradState::for_model(const model::ModelState& m, double lr, double eps) {
  if (!(lr > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "learning rate must be > 0");
  }
  AdagradState s;
  s.accumulators = model::zeros_like(m);
  s.lr = lr;
  s.eps = eps;
  return s;
}

bool adagrad_step(model::ModelState& m, const model::Gradients& grads, AdagradState& state) {
  check_shapes(m.params, grads);
  check_shapes(m.params, state.accumulators);
  for (const auto& g : grads) {
    if (!g.allFinite()) {
      ++state.rejected_steps;
      return false;
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    state.accumulators[i].array() += grads[i].array().square();
    m.params[i].array() -= state.lr * grads[i].array() / (state.accumulators[i].array().sqrt() + state.eps);
  }
  ++m.update_count;
  return true;
}

double plateau_update(PlateauScheduler& sched, AdagradState& opt, double dev_metric) {
  if (!std::isfinite(dev_metric)) {
    throw Error(ErrorCode::kInvalidInput, "plateau metric must be finite");
  }
  if (dev_metric < sched.best_metric - sched.min_delta) {
    sched.best_metric = dev_metric;
    sched.evals_since_best = 0;
    return opt.lr;
  }
  if (++sched.evals_since_best >= sched.patience) {
    opt.lr /= PlateauScheduler::kFactor;
    ++sched.halvings;
    sched.evals_since_best = 0;
  }
  return opt.lr;
}

EmaState EmaState::from_model(const model::ModelState& m, double decay) {
  if (!(decay >= 0.0 && decay < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ema decay must be in [0, 1)");
  }
  return EmaState{m.params, decay};
}

void ema_update(EmaState& ema, const model::ModelState& m) {
  check_shapes(ema.shadow, m.params);
  for (std::size_t i = 0; i < ema.shadow.size(); ++i) {
    ema.shadow[i] = ema.decay * ema.shadow[i] + (1.0 - ema.decay) * m.params[i];
  }
}

EmaSwap::EmaSwap(EmaState& ema, model::ModelState& m) : ema_(ema), model_(m) {
  check_shapes(ema.shadow, m.params);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    m.params[i].swap(ema.shadow[i]);
  }
}

EmaSwap::~EmaSwap() {
  for (std::size_t i = 0; i < model_.params.size(); ++i) {
    model_.params[i].swap(ema_.shadow[i]);
  }
}

}  // namespace slimipl::optim
