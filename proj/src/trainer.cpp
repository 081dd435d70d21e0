#include "slimipl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "slimipl/binary_io.hpp"
#include "slimipl/config.hpp"
#include "slimipl/ctc.hpp"

namespace slimipl::trainer {

namespace {

enum StreamTag : std::uint64_t { kDataStream = 1, kAugmentStream, kDropoutStream, kCacheStream, kBatchStream, kInitStream };

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

// Non-owning handle to corpus-owned features.
std::shared_ptr<const Matrix> borrow(const Matrix& m) {
  return std::shared_ptr<const Matrix>(std::shared_ptr<const Matrix>{}, &m);
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kSlimIpl:
      return "slimipl";
    case Variant::kSupervisedOnly:
      return "supervised_only";
    case Variant::kNaiveNoCache:
      return "naive_no_cache";
    case Variant::kEmaCache:
      return "ema_cache";
    case Variant::kEmaNoCache:
      return "ema_no_cache";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::kSlimIpl, Variant::kSupervisedOnly, Variant::kNaiveNoCache,
                    Variant::kEmaCache, Variant::kEmaNoCache}) {
    if (s == to_string(v)) {
      return v;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown variant '" + s + "'");
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::kPretrain:
      return "pretrain";
    case Phase::kFill:
      return "fill";
    case Phase::kMain:
      return "main";
  }
  return "?";
}

bool uses_cache(Variant v) { return v == Variant::kSlimIpl || v == Variant::kEmaCache; }
bool uses_ema(Variant v) { return v == Variant::kEmaCache || v == Variant::kEmaNoCache; }
bool uses_unlabeled(Variant v) { return v != Variant::kSupervisedOnly; }

bool detect_divergence(std::span<const eval::MetricsRecord> history, const DivergenceConfig& cfg) {
  if (history.empty()) {
    return false;
  }
  const auto& last = history.back();
  if (last.empty_pl_fraction != eval::kNotApplicable && last.empty_pl_fraction > cfg.empty_fraction) {
    return true;
  }
  const std::size_t window = static_cast<std::size_t>(std::max(cfg.window, 1));
  if (history.size() <= window) {
    return false;
  }
  const std::size_t split = history.size() - window;
  double best = history[0].dev_ter;
  for (std::size_t i = 0; i < split; ++i) {
    best = std::min(best, history[i].dev_ter);
  }
  for (std::size_t i = split; i < history.size(); ++i) {
    if (!(history[i].dev_ter > best + cfg.ter_regression)) {
      return false;
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (sup_updates < 1 || unsup_updates < 0) {
    throw Error(ErrorCode::kInvalidConfig, "need sup_updates >= 1 and unsup_updates >= 0");
  }
  if (!(replace_prob >= 0.0 && replace_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "replace_prob must be in [0, 1]");
  }
  if (uses_cache(variant) && cache_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "cache_size must be >= 1");
  }
  if (batch_size < 1 || eval_every < 1 || max_updates < 0 || auto_m_limit < 0) {
    throw Error(ErrorCode::kInvalidConfig, "batch_size, eval_every must be >= 1");
  }
  for (double d : {dropout_initial, dropout_final}) {
    if (!(d >= 0.0 && d < 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "dropout must be in [0, 1)");
    }
  }
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ema_decay must be in [0, 1)");
  }
  if (!(lr > 0.0) || plateau_patience < 1 || max_halvings < 1) {
    throw Error(ErrorCode::kInvalidConfig, "invalid optimizer settings");
  }
}

TrainConfig TrainConfig::librilight_10h() {
  TrainConfig cfg;
  cfg.dropout_initial = 0.5;
  cfg.dropout_final = 0.1;
  cfg.cache_size = 1000;
  cfg.replace_prob = 0.1;
  cfg.sup_updates = 1;
  cfg.unsup_updates = 10;
  return cfg;
}

TrainConfig TrainConfig::librispeech_100h() {
  TrainConfig cfg;
  cfg.dropout_initial = 0.3;
  cfg.dropout_final = 0.1;
  cfg.cache_size = 100;
  cfg.replace_prob = 0.1;
  cfg.sup_updates = 1;
  cfg.unsup_updates = 1;
  return cfg;
}

Trainer::Trainer(TrainConfig cfg, const model::ModelConfig& model_cfg, TrainData data, PlQualityProbe probe)
    : cfg_(std::move(cfg)), data_(data), probe_(std::move(probe)) {
  cfg_.validate();
  if (data_.labeled.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "labeled split is empty");
  }
  if (data_.dev.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "dev split is empty");
  }
  if (static_cast<std::size_t>(cfg_.batch_size) > data_.labeled.size()) {
    throw Error(ErrorCode::kInvalidConfig, "labeled split smaller than batch_size");
  }
  if (uses_unlabeled(cfg_.variant) && static_cast<std::size_t>(cfg_.batch_size) > data_.unlabeled.size()) {
    throw Error(ErrorCode::kInvalidConfig, "unlabeled split smaller than batch_size");
  }
  auto mcfg = model_cfg;
  mcfg.dropout = cfg_.dropout_initial;
  model_ = model::init_model(mcfg, derive_seed(cfg_.seed, kInitStream));
  optimizer_ = optim::AdagradState::for_model(model_, cfg_.lr, cfg_.adagrad_eps);
  scheduler_.patience = cfg_.plateau_patience;
  scheduler_.min_delta = cfg_.plateau_min_delta;
  cfg_.augment.validate(mcfg.feature_dim);

  data_rng_.seed(derive_seed(cfg_.seed, kDataStream));
  augment_rng_.seed(derive_seed(cfg_.seed, kAugmentStream));
  dropout_rng_.seed(derive_seed(cfg_.seed, kDropoutStream));
  cache_rng_.seed(derive_seed(cfg_.seed, kCacheStream));
  epoch_batches_ = data::make_batches(data_.labeled.size(), cfg_.batch_size,
                                      derive_seed(cfg_.seed, kBatchStream), epoch_);
  wall_origin_ms_ = now_ms();
}

bool Trainer::diverged() const {
  return std::any_of(history_.begin(), history_.end(), [](const auto& r) { return r.divergence_flag; });
}

void Trainer::run(eval::MetricsSink& sink, const std::function<bool(const Trainer&)>& on_eval) {
  while (!done_) {
    step();
    if (pending_eval_) {
      const Phase label = *pending_eval_;
      pending_eval_.reset();
      evaluate(sink, label);
      if (on_eval && !on_eval(*this)) {
        return;
      }
    }
  }
}

bool Trainer::pretrain_finished() const {
  if (update_index_ >= cfg_.max_updates) {
    return false;
  }
  if (cfg_.pretrain_updates >= 0) {
    return update_index_ >= cfg_.pretrain_updates;
  }
  return scheduler_.halvings > 0 || update_index_ >= cfg_.auto_m_limit;
}

void Trainer::step() {
  switch (phase_) {
    case Phase::kPretrain:
      if (pretrain_finished()) {
        pretrain_done_at_ = update_index_;
        if (last_eval_ != update_index_) {
          pending_eval_ = Phase::kPretrain;
        }
        if (uses_cache(cfg_.variant)) {
          enter_fill();
        } else {
          enter_main();
        }
        return;
      }
      supervised_update();
      if (update_index_ >= cfg_.max_updates) {
        done_ = true;
        pending_eval_ = Phase::kPretrain;
      } else if (update_index_ % cfg_.eval_every == 0) {
        pending_eval_ = Phase::kPretrain;
      }
      return;

    case Phase::kFill:
      if (cache_->full()) {
        if (last_eval_ != update_index_) {
          pending_eval_ = Phase::kFill;
        }
        enter_main();
        return;
      }
      cache_->insert(fresh_entry());
      supervised_update();
      if (update_index_ >= cfg_.max_updates) {
        done_ = true;
        pending_eval_ = Phase::kFill;
      }
      return;

    case Phase::kMain: {
      bool round_complete = false;
      if (cfg_.variant == Variant::kSupervisedOnly) {
        supervised_update();
        round_complete = true;
      } else {
        if (round_sup_done_ < cfg_.sup_updates) {
          supervised_update();
          ++round_sup_done_;
        } else {
          pseudo_labeled_update();
          ++round_unsup_done_;
        }
        if (round_sup_done_ == cfg_.sup_updates && round_unsup_done_ == cfg_.unsup_updates) {
          round_sup_done_ = 0;
          round_unsup_done_ = 0;
          round_complete = true;
        }
      }
      if (update_index_ >= cfg_.max_updates) {
        done_ = true;
        pending_eval_ = Phase::kMain;
      } else if (round_complete && update_index_ - last_eval_ >= cfg_.eval_every) {
        pending_eval_ = Phase::kMain;
      }
      return;
    }
  }
}

void Trainer::enter_fill() {
  phase_ = Phase::kFill;
  cache_.emplace(static_cast<std::size_t>(cfg_.cache_size));
  if (uses_ema(cfg_.variant)) {
    ema_ = optim::EmaState::from_model(model_, cfg_.ema_decay);
  }
}

void Trainer::enter_main() {
  phase_ = Phase::kMain;
  round_sup_done_ = 0;
  round_unsup_done_ = 0;
  if (cfg_.variant != Variant::kSupervisedOnly) {
    model::set_dropout(model_, cfg_.dropout_final);
  }
  if (uses_ema(cfg_.variant) && !ema_) {
    ema_ = optim::EmaState::from_model(model_, cfg_.ema_decay);
  }
}

void Trainer::supervised_update() {
  if (batch_pos_ >= epoch_batches_.size()) {
    ++epoch_;
    epoch_batches_ = data::make_batches(data_.labeled.size(), cfg_.batch_size,
                                        derive_seed(cfg_.seed, kBatchStream), epoch_);
    batch_pos_ = 0;
  }
  const auto& batch = epoch_batches_[batch_pos_++];
  std::vector<std::shared_ptr<const Matrix>> features;
  std::vector<TokenSeq> targets;
  std::vector<std::string> ids;
  for (std::size_t idx : batch) {
    const auto& utt = data_.labeled[idx];
    features.push_back(borrow(utt.features));
    targets.push_back(*utt.reference);
    ids.push_back(utt.id);
  }
  train_on(features, targets, ids, UpdateKind::kLabeled, std::nullopt);
}

cache::PLCacheEntry Trainer::fresh_entry() {
  std::vector<std::size_t> picks;
  const std::size_t want = static_cast<std::size_t>(cfg_.batch_size);
  while (picks.size() < want) {
    const std::size_t idx = uniform_index(data_rng_, data_.unlabeled.size());
    if (std::find(picks.begin(), picks.end(), idx) == picks.end()) {
      picks.push_back(idx);
    }
  }
  return generate_pl(picks);
}

cache::PLCacheEntry Trainer::generate_pl(std::span<const std::size_t> unlabeled_indices) {
  PlGenerationEvent event;
  event.update_index = update_index_;
  event.from_ema = ema_.has_value();

  cache::PLCacheEntry entry;
  entry.model_version = update_index_;

  auto label_with = [&](const model::ModelState& source) {
    constexpr model::Mode mode = model::Mode::kEval;
    event.mode = mode;
    event.augmented = false;
    for (std::size_t idx : unlabeled_indices) {
      const auto& utt = data_.unlabeled[idx];
      TokenSeq pl;
      try {
        pl = ctc::greedy_decode(model::forward(source, utt.features, mode).log_posteriors);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInputTooShort) {
          throw;
        }
      }
      ++window_.generated;
      if (pl.empty()) {
        ++window_.generated_empty;
      }
      event.ids.push_back(utt.id);
      event.pls.push_back(pl);
      if (pl.empty() && cfg_.filter_empty_pls) {
        continue;
      }
      entry.batch.push_back({utt.id, borrow(utt.features)});
      entry.pls.push_back(std::move(pl));
    }
  };

  if (ema_) {
    optim::EmaSwap swap(*ema_, model_);
    label_with(swap.model());
  } else {
    label_with(model_);
  }
  if (observer_ != nullptr) {
    observer_->on_pl_generation(event);
  }
  return entry;
}

void Trainer::pseudo_labeled_update() {
  cache::PLCacheEntry entry;
  std::optional<std::uint64_t> entry_id;
  if (cache_) {
    const auto before = cache_->replacements();
    entry = cache_->draw_and_maybe_replace(cfg_.replace_prob, [this] { return fresh_entry(); }, cache_rng_);
    entry_id = entry.entry_id;
    if (observer_ != nullptr) {
      observer_->on_cache_draw({entry.entry_id, cache_->replacements() != before});
    }
  } else {
    entry = fresh_entry();
  }
  std::vector<std::shared_ptr<const Matrix>> features;
  std::vector<std::string> ids;
  for (const auto& u : entry.batch) {
    features.push_back(u.features);
    ids.push_back(u.id);
  }
  window_.pl_ids.insert(window_.pl_ids.end(), ids.begin(), ids.end());
  window_.pls.insert(window_.pls.end(), entry.pls.begin(), entry.pls.end());
  train_on(features, entry.pls, ids, UpdateKind::kPseudoLabeled, entry_id);
}

void Trainer::train_on(std::span<const std::shared_ptr<const Matrix>> features,
                       std::span<const TokenSeq> targets, std::span<const std::string> ids,
                       UpdateKind kind, std::optional<std::uint64_t> entry_id) {
  constexpr model::Mode mode = model::Mode::kTrain;
  model::Gradients grads = model::zeros_like(model_);
  double loss_sum = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Matrix augmented = augment::spec_augment(*features[i], cfg_.augment, augment_rng_);
    model::ForwardResult fw;
    try {
      fw = model::forward(model_, augmented, mode, &dropout_rng_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInputTooShort) {
        throw;
      }
      ++skipped_infeasible_;
      continue;
    }
    const auto loss = ctc::ctc_loss(fw.log_posteriors, targets[i]);
    if (!loss.ok()) {
      ++skipped_infeasible_;
      continue;
    }
    const auto g = model::backward(model_, fw.tape, loss.grad);
    for (std::size_t k = 0; k < grads.size(); ++k) {
      grads[k] += g[k];
    }
    loss_sum += loss.loss;
    ++used;
  }

  if (used > 0) {
    for (auto& g : grads) {
      g /= static_cast<double>(used);
    }
    const double mean_loss = loss_sum / used;
    if (std::isfinite(mean_loss) && optim::adagrad_step(model_, grads, optimizer_)) {
      if (kind == UpdateKind::kLabeled) {
        window_.labeled_loss += mean_loss;
        ++window_.labeled_count;
      } else {
        window_.unlabeled_loss += mean_loss;
        ++window_.unlabeled_count;
      }
    } else if (!std::isfinite(mean_loss)) {
      ++optimizer_.rejected_steps;
    }
  }
  ++update_index_;
  if (ema_) {
    optim::ema_update(*ema_, model_);
  }

  if (observer_ != nullptr) {
    UpdateEvent event;
    event.update_index = update_index_;
    event.phase = phase_;
    event.kind = kind;
    event.mode = mode;
    event.augmented = true;
    event.dropout = model_.dropout;
    event.entry_id = entry_id;
    event.ids.assign(ids.begin(), ids.end());
    observer_->on_update(event);
  }
}

double Trainer::dev_ter() const {
  std::vector<TokenSeq> hyps;
  std::vector<TokenSeq> refs;
  for (const auto& utt : data_.dev) {
    hyps.push_back(ctc::greedy_decode(model::infer(model_, utt.features)));
    refs.push_back(*utt.reference);
  }
  return eval::error_rate(hyps, refs);
}

void Trainer::evaluate(eval::MetricsSink& sink, Phase label) {
  eval::MetricsRecord rec;
  rec.update_index = update_index_;
  rec.phase = to_string(label);
  rec.dev_ter = dev_ter();
  optim::plateau_update(scheduler_, optimizer_, rec.dev_ter);
  if (window_.labeled_count > 0) {
    rec.train_loss_labeled = window_.labeled_loss / static_cast<double>(window_.labeled_count);
  }
  if (window_.unlabeled_count > 0) {
    rec.train_loss_unlabeled = window_.unlabeled_loss / static_cast<double>(window_.unlabeled_count);
  }
  if (probe_ && !window_.pl_ids.empty()) {
    rec.pl_oracle_ter = probe_(window_.pl_ids, window_.pls);
  }
  if (window_.generated > 0) {
    rec.empty_pl_fraction =
        static_cast<double>(window_.generated_empty) / static_cast<double>(window_.generated);
  }
  rec.lr = optimizer_.lr;
  if (cache_ && cache_->size() > 0) {
    rec.cache_mean_staleness = cache_->age_stats(update_index_).mean;
  }
  rec.skipped_infeasible = skipped_infeasible_;
  rec.rejected_steps = optimizer_.rejected_steps;
  rec.wall_ms = now_ms() - wall_origin_ms_;

  history_.push_back(rec);
  if (label != Phase::kPretrain) {
    history_.back().divergence_flag = detect_divergence(history_, cfg_.divergence);
  }
  sink.write(history_.back());

  window_ = Window{};
  last_eval_ = update_index_;
  if (scheduler_.halvings >= cfg_.max_halvings) {
    done_ = true;
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.put_bytes("train/config", config::train_to_ini(cfg_));
  put_model(ckpt, "model/", model_);
  for (std::size_t i = 0; i < optimizer_.accumulators.size(); ++i) {
    ckpt.put_tensor("adagrad/acc" + std::to_string(i), optimizer_.accumulators[i]);
  }
  ckpt.put_double("adagrad/lr", optimizer_.lr);
  ckpt.put_int("adagrad/rejected", optimizer_.rejected_steps);
  ckpt.put_double("plateau/best", scheduler_.best_metric);
  ckpt.put_int("plateau/since_best", scheduler_.evals_since_best);
  ckpt.put_int("plateau/halvings", scheduler_.halvings);
  if (ema_) {
    for (std::size_t i = 0; i < ema_->shadow.size(); ++i) {
      ckpt.put_tensor("ema/shadow" + std::to_string(i), ema_->shadow[i]);
    }
  }
  if (cache_) {
    std::ostringstream os;
    cache_->write(os);
    ckpt.put_bytes("cache/snapshot", os.str());
  }
  ckpt.put_int("run/phase", static_cast<std::int64_t>(phase_));
  ckpt.put_int("run/update_index", update_index_);
  ckpt.put_int("run/pretrain_done_at", pretrain_done_at_);
  ckpt.put_int("run/last_eval", last_eval_);
  ckpt.put_int("run/round_sup", round_sup_done_);
  ckpt.put_int("run/round_unsup", round_unsup_done_);
  ckpt.put_int("run/done", done_ ? 1 : 0);
  ckpt.put_int("run/epoch", epoch_);
  ckpt.put_int("run/batch_pos", static_cast<std::int64_t>(batch_pos_));
  ckpt.put_int("run/skipped", skipped_infeasible_);
  ckpt.put_bytes("rng/data", rng_state(data_rng_));
  ckpt.put_bytes("rng/augment", rng_state(augment_rng_));
  ckpt.put_bytes("rng/dropout", rng_state(dropout_rng_));
  ckpt.put_bytes("rng/cache", rng_state(cache_rng_));

  ckpt.put_double("window/labeled_loss", window_.labeled_loss);
  ckpt.put_int("window/labeled_count", window_.labeled_count);
  ckpt.put_double("window/unlabeled_loss", window_.unlabeled_loss);
  ckpt.put_int("window/unlabeled_count", window_.unlabeled_count);
  ckpt.put_int("window/generated", window_.generated);
  ckpt.put_int("window/generated_empty", window_.generated_empty);
  {
    std::ostringstream os;
    io::BinaryWriter w(os);
    w.u64(window_.pl_ids.size());
    for (std::size_t i = 0; i < window_.pl_ids.size(); ++i) {
      w.str(window_.pl_ids[i]);
      w.tokens(window_.pls[i]);
    }
    ckpt.put_bytes("window/pls", os.str());
  }
  std::string history;
  for (const auto& r : history_) {
    history += eval::to_json_line(r) + "\n";
  }
  ckpt.put_bytes("run/history", history);
  return ckpt;
}

Trainer Trainer::resume(const Checkpoint& ckpt, TrainData data, PlQualityProbe probe) {
  const auto cfg = config::train_from_ini(ckpt.bytes("train/config"));
  auto m = get_model(ckpt, "model/");
  Trainer t(cfg, m.config, data, std::move(probe));
  t.model_ = std::move(m);
  for (std::size_t i = 0; i < t.optimizer_.accumulators.size(); ++i) {
    const Matrix& acc = ckpt.tensor("adagrad/acc" + std::to_string(i));
    if (acc.rows() != t.model_.params[i].rows() || acc.cols() != t.model_.params[i].cols()) {
      throw Error(ErrorCode::kShapeMismatch, "optimizer state does not match the model");
    }
    t.optimizer_.accumulators[i] = acc;
  }
  t.optimizer_.lr = ckpt.get_double("adagrad/lr");
  t.optimizer_.rejected_steps = ckpt.get_int("adagrad/rejected");
  t.scheduler_.best_metric = ckpt.get_double("plateau/best");
  t.scheduler_.evals_since_best = static_cast<int>(ckpt.get_int("plateau/since_best"));
  t.scheduler_.halvings = static_cast<int>(ckpt.get_int("plateau/halvings"));
  if (ckpt.has("ema/shadow0")) {
    optim::EmaState ema{{}, cfg.ema_decay};
    for (std::size_t i = 0; i < t.model_.params.size(); ++i) {
      ema.shadow.push_back(ckpt.tensor("ema/shadow" + std::to_string(i)));
    }
    t.ema_ = std::move(ema);
  }
  if (ckpt.has("cache/snapshot")) {
    std::istringstream is(ckpt.bytes("cache/snapshot"));
    t.cache_.emplace(cache::PLCache::read(is));
  }
  t.phase_ = static_cast<Phase>(ckpt.get_int("run/phase"));
  t.update_index_ = ckpt.get_int("run/update_index");
  t.pretrain_done_at_ = ckpt.get_int("run/pretrain_done_at");
  t.last_eval_ = ckpt.get_int("run/last_eval");
  t.round_sup_done_ = static_cast<int>(ckpt.get_int("run/round_sup"));
  t.round_unsup_done_ = static_cast<int>(ckpt.get_int("run/round_unsup"));
  t.done_ = ckpt.get_int("run/done") != 0;
  t.epoch_ = ckpt.get_int("run/epoch");
  t.batch_pos_ = static_cast<std::size_t>(ckpt.get_int("run/batch_pos"));
  t.epoch_batches_ = data::make_batches(t.data_.labeled.size(), cfg.batch_size,
                                        derive_seed(cfg.seed, kBatchStream), t.epoch_);
  t.skipped_infeasible_ = ckpt.get_int("run/skipped");
  set_rng_state(t.data_rng_, ckpt.bytes("rng/data"));
  set_rng_state(t.augment_rng_, ckpt.bytes("rng/augment"));
  set_rng_state(t.dropout_rng_, ckpt.bytes("rng/dropout"));
  set_rng_state(t.cache_rng_, ckpt.bytes("rng/cache"));

  t.window_.labeled_loss = ckpt.get_double("window/labeled_loss");
  t.window_.labeled_count = ckpt.get_int("window/labeled_count");
  t.window_.unlabeled_loss = ckpt.get_double("window/unlabeled_loss");
  t.window_.unlabeled_count = ckpt.get_int("window/unlabeled_count");
  t.window_.generated = ckpt.get_int("window/generated");
  t.window_.generated_empty = ckpt.get_int("window/generated_empty");
  {
    std::istringstream is(ckpt.bytes("window/pls"));
    io::BinaryReader r(is);
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      t.window_.pl_ids.push_back(r.str());
      t.window_.pls.push_back(r.tokens());
    }
  }
  std::istringstream hs(ckpt.bytes("run/history"));
  std::string line;
  while (std::getline(hs, line)) {
    if (!line.empty()) {
      t.history_.push_back(eval::from_json_line(line));
    }
  }
  return t;
}

}  // namespace slimipl::trainer
