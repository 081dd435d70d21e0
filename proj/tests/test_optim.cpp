#include <cmath>

#include "doctest.h"
#include "slimipl/optim.hpp"

using namespace slimipl;
using namespace slimipl::optim;

namespace {

model::ModelState tiny_model() {
  model::ModelConfig c;
  c.feature_dim = 2;
  c.kernel = 3;
  c.stride = 1;
  c.hidden = 3;
  c.blocks = 1;
  c.vocab_size = 2;
  return model::init_model(c, 1);
}

model::Gradients filled_grads(const model::ModelState& m, double v) {
  auto g = model::zeros_like(m);
  for (auto& t : g) t.setConstant(v);
  return g;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters alone") {
  auto m = tiny_model();
  const auto before = m.params;
  auto opt = AdagradState::for_model(m, 0.1);
  CHECK(adagrad_step(m, model::zeros_like(m), opt));
  for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(m.params[i] == before[i]);
  CHECK(m.update_count == 1);
}

TEST_CASE("first step moves every weight by lr against the gradient sign") {
  auto m = tiny_model();
  const auto before = m.params;
  auto opt = AdagradState::for_model(m, 0.1);
  auto g = model::zeros_like(m);
  Rng rng(2);
  for (auto& t : g)
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = standard_normal(rng);
  adagrad_step(m, g, opt);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (Eigen::Index k = 0; k < g[i].size(); ++k) {
      const double step = m.params[i].data()[k] - before[i].data()[k];
      const double sign = g[i].data()[k] > 0 ? 1.0 : -1.0;
      CHECK(step == doctest::Approx(-0.1 * sign).epsilon(1e-6));
    }
  }
}

TEST_CASE("constant gradients give shrinking steps of lr / sqrt(n)") {
  auto m = tiny_model();
  auto opt = AdagradState::for_model(m, 0.2);
  const auto g = filled_grads(m, 0.7);
  double prev = 0.0;
  for (int n = 1; n <= 10; ++n) {
    const double before = m.params[0](0, 0);
    adagrad_step(m, g, opt);
    const double step = before - m.params[0](0, 0);
    CHECK(step == doctest::Approx(0.2 / std::sqrt(n)).epsilon(1e-6));
    if (n > 1) CHECK(step < prev);
    prev = step;
  }
}

TEST_CASE("non-finite gradients are rejected") {
  auto m = tiny_model();
  const auto before = m.params;
  auto opt = AdagradState::for_model(m, 0.1);
  auto g = filled_grads(m, 1.0);
  g[2](0, 0) = std::nan("");
  CHECK_FALSE(adagrad_step(m, g, opt));
  CHECK(opt.rejected_steps == 1);
  CHECK(m.update_count == 0);
  for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(m.params[i] == before[i]);
  for (const auto& a : opt.accumulators) CHECK(a.cwiseAbs().maxCoeff() == 0.0);
  g[2](0, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(adagrad_step(m, g, opt));
  CHECK(opt.rejected_steps == 2);
}

TEST_CASE("plateau scheduler") {
  auto m = tiny_model();
  auto opt = AdagradState::for_model(m, 0.08);
  PlateauScheduler s;
  CHECK(plateau_update(s, opt, 0.5) == 0.08);
  CHECK(plateau_update(s, opt, 0.4) == 0.08);
  // improvements within min_delta do not count
  CHECK(plateau_update(s, opt, 0.39995) == 0.08);
  CHECK(plateau_update(s, opt, 0.41) == 0.08);
  CHECK(plateau_update(s, opt, 0.40) == 0.04);
  CHECK(s.halvings == 1);
  CHECK(s.best_metric == 0.4);
  // counter restarts after a halving
  CHECK(plateau_update(s, opt, 0.5) == 0.04);
  CHECK(plateau_update(s, opt, 0.5) == 0.04);
  CHECK(plateau_update(s, opt, 0.3) == 0.04);
  CHECK(s.evals_since_best == 0);
  CHECK_THROWS_AS(plateau_update(s, opt, std::nan("")), Error);
}

TEST_CASE("EMA closed form") {
  auto m = tiny_model();
  for (auto& p : m.params) p.setZero();
  auto ema = EmaState::from_model(m, 0.999);
  for (auto& p : m.params) p.setOnes();
  for (int i = 0; i < 1000; ++i) ema_update(ema, m);
  const double expected = 1.0 - std::pow(0.999, 1000);
  CHECK(expected == doctest::Approx(0.6323).epsilon(1e-4));
  for (const auto& s : ema.shadow) CHECK((s.array() - expected).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("decay zero tracks the current model") {
  auto m = tiny_model();
  auto ema = EmaState::from_model(m, 0.0);
  m.params[0].array() += 3.0;
  ema_update(ema, m);
  CHECK(ema.shadow[0] == m.params[0]);
  CHECK_THROWS_AS(EmaState::from_model(m, 1.0), Error);
}

TEST_CASE("swap exposes the shadow and restores on exit") {
  auto m = tiny_model();
  auto ema = EmaState::from_model(m, 0.9);
  for (auto& s : ema.shadow) s.setConstant(5.0);
  const auto live = m.params;
  {
    auto swap = ema_swap_for_inference(ema, m);
    CHECK(swap.model().params[0].isConstant(5.0));
    CHECK(m.params[1].isConstant(5.0));
  }
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    CHECK(m.params[i] == live[i]);
    CHECK(ema.shadow[i].isConstant(5.0));
  }
}
