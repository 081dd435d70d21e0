#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimipl/augment.hpp"
#include "slimipl/cache.hpp"
#include "slimipl/checkpoint.hpp"
#include "slimipl/data.hpp"
#include "slimipl/eval.hpp"
#include "slimipl/model.hpp"
#include "slimipl/optim.hpp"

namespace slimipl::trainer {

enum class Variant { kSlimIpl, kSupervisedOnly, kNaiveNoCache, kEmaCache, kEmaNoCache };
enum class Phase { kPretrain, kFill, kMain };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);
const char* to_string(Phase p);

bool uses_cache(Variant v);
bool uses_ema(Variant v);
bool uses_unlabeled(Variant v);

struct DivergenceConfig {
  double empty_fraction = 0.9;
  double ter_regression = 0.15;
  int window = 3;

  bool operator==(const DivergenceConfig&) const = default;
};

// Flags the last record of `history` when its empty pseudo-label fraction
// exceeds the threshold, or when the last `window` dev TERs all sit more than
// ter_regression above the best dev TER recorded before that window.
bool detect_divergence(std::span<const eval::MetricsRecord> history, const DivergenceConfig& cfg);

struct TrainConfig {
  std::int64_t pretrain_updates = 500;  // M; negative selects auto-M
  std::int64_t auto_m_limit = 5000;     // upper bound on M in auto mode
  int cache_size = 100;                 // C, in batches
  double replace_prob = 0.1;            // p
  int sup_updates = 1;                  // N_L
  int unsup_updates = 1;                // N_U
  double dropout_initial = 0.5;
  double dropout_final = 0.1;
  Variant variant = Variant::kSlimIpl;
  double ema_decay = 0.999;
  int batch_size = 8;
  std::int64_t max_updates = 3000;
  int eval_every = 100;
  std::uint64_t seed = 1;
  bool filter_empty_pls = false;
  augment::AugmentConfig augment;
  double lr = 0.05;
  double adagrad_eps = 1e-8;
  int plateau_patience = 3;
  double plateau_min_delta = 1e-4;
  int max_halvings = 5;
  DivergenceConfig divergence;

  double lambda() const { return static_cast<double>(unsup_updates) / sup_updates; }
  void validate() const;
  bool operator==(const TrainConfig&) const = default;

  // Hyperparameter rows of the two low-resource regimes (10h and 100h labeled).
  static TrainConfig librilight_10h();
  static TrainConfig librispeech_100h();
};

// What the trainer may see. Unlabeled utterances carry no reference.
struct TrainData {
  std::span<const data::Utterance> labeled;
  std::span<const data::Utterance> unlabeled;
  std::span<const data::Utterance> dev;

  static TrainData from(const data::Corpus& c) { return {c.labeled, c.unlabeled, c.dev}; }
};

// Scores pseudo-labels by utterance id; supplied by the caller (the trainer has
// no access to unlabeled references).
using PlQualityProbe =
    std::function<double(std::span<const std::string> ids, std::span<const TokenSeq> pls)>;

enum class UpdateKind { kLabeled, kPseudoLabeled };

struct UpdateEvent {
  std::int64_t update_index = 0;  // after the update
  Phase phase = Phase::kPretrain;
  UpdateKind kind = UpdateKind::kLabeled;
  model::Mode mode = model::Mode::kEval;
  bool augmented = false;
  double dropout = 0.0;
  std::optional<std::uint64_t> entry_id;
  std::vector<std::string> ids;
};

struct PlGenerationEvent {
  std::int64_t update_index = 0;
  model::Mode mode = model::Mode::kTrain;
  bool augmented = true;
  bool from_ema = false;
  std::vector<std::string> ids;
  std::vector<TokenSeq> pls;
};

struct CacheDrawEvent {
  std::uint64_t drawn_id = 0;
  bool evicted = false;
};

class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void on_update(const UpdateEvent&) {}
  virtual void on_pl_generation(const PlGenerationEvent&) {}
  virtual void on_cache_draw(const CacheDrawEvent&) {}
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, const model::ModelConfig& model_cfg, TrainData data,
          PlQualityProbe probe = {});

  // Continues a run from a checkpoint produced by save_checkpoint.
  static Trainer resume(const Checkpoint& ckpt, TrainData data, PlQualityProbe probe = {});

  // Runs until convergence or max_updates. on_eval fires after each metrics
  // record is written; returning false pauses the run.
  void run(eval::MetricsSink& sink,
           const std::function<bool(const Trainer&)>& on_eval = {});

  bool done() const { return done_; }
  Checkpoint checkpoint() const;

  void set_observer(TrainObserver* observer) { observer_ = observer; }

  const TrainConfig& config() const { return cfg_; }
  const model::ModelState& model() const { return model_; }
  Phase phase() const { return phase_; }
  std::int64_t update_index() const { return update_index_; }
  std::int64_t resolved_pretrain_updates() const { return pretrain_done_at_; }
  const cache::PLCache* cache() const { return cache_ ? &*cache_ : nullptr; }
  const std::vector<eval::MetricsRecord>& history() const { return history_; }
  bool diverged() const;

  // Greedy pseudo-labels from the configured source (EMA shadow when enabled),
  // eval mode, un-augmented features. Empty labels are dropped when filtering.
  cache::PLCacheEntry generate_pl(std::span<const std::size_t> unlabeled_indices);

 private:
  struct Window {
    double labeled_loss = 0.0;
    std::int64_t labeled_count = 0;
    double unlabeled_loss = 0.0;
    std::int64_t unlabeled_count = 0;
    std::vector<std::string> pl_ids;
    std::vector<TokenSeq> pls;
    std::int64_t generated = 0;
    std::int64_t generated_empty = 0;
  };

  // Performs one update or phase transition; sets pending_eval_ at evaluation points.
  void step();
  void supervised_update();
  void pseudo_labeled_update();
  void train_on(std::span<const std::shared_ptr<const Matrix>> features,
                std::span<const TokenSeq> targets, std::span<const std::string> ids,
                UpdateKind kind, std::optional<std::uint64_t> entry_id);
  cache::PLCacheEntry fresh_entry();
  void enter_fill();
  void enter_main();
  bool pretrain_finished() const;
  void evaluate(eval::MetricsSink& sink, Phase label);
  double dev_ter() const;

  TrainConfig cfg_;
  TrainData data_;
  PlQualityProbe probe_;
  TrainObserver* observer_ = nullptr;

  model::ModelState model_;
  optim::AdagradState optimizer_;
  optim::PlateauScheduler scheduler_;
  std::optional<optim::EmaState> ema_;
  std::optional<cache::PLCache> cache_;

  Phase phase_ = Phase::kPretrain;
  std::int64_t update_index_ = 0;
  std::int64_t pretrain_done_at_ = -1;
  std::int64_t last_eval_ = -1;
  int round_sup_done_ = 0;
  int round_unsup_done_ = 0;
  bool done_ = false;
  std::optional<Phase> pending_eval_;

  std::int64_t epoch_ = 0;
  std::size_t batch_pos_ = 0;
  std::vector<std::vector<std::size_t>> epoch_batches_;

  Rng data_rng_;
  Rng augment_rng_;
  Rng dropout_rng_;
  Rng cache_rng_;

  std::int64_t skipped_infeasible_ = 0;
  Window window_;
  std::vector<eval::MetricsRecord> history_;
  double wall_origin_ms_ = 0.0;
};

}  // namespace slimipl::trainer
