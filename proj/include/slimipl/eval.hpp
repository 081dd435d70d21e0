#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "slimipl/common.hpp"
#include "slimipl/data.hpp"

namespace slimipl::eval {

std::size_t edit_distance(std::span<const int> a, std::span<const int> b);

// Pooled rate: total edit distance over total reference length.
double error_rate(std::span<const TokenSeq> hyps, std::span<const TokenSeq> refs);

// Scores pseudo-labels of unlabeled utterances against their hidden truth.
class PlOracle {
 public:
  explicit PlOracle(const data::HiddenReferences& refs) : refs_(refs) {}

  // Pooled error rate of pls against the hidden references of ids. Utterances
  // with an empty reference count their hypothesis length as insertions, and
  // a zero total reference length yields the normalized insertion count.
  double ter(std::span<const std::string> ids, std::span<const TokenSeq> pls) const;

  const TokenSeq& reference(const std::string& id) const;

 private:
  const data::HiddenReferences& refs_;
};

// Marker for "not applicable" rates in MetricsRecord (e.g. before pseudo-labeling).
inline constexpr double kNotApplicable = -1.0;

struct MetricsRecord {
  std::int64_t update_index = 0;
  std::string phase;
  double dev_ter = 0.0;
  double train_loss_labeled = kNotApplicable;
  double train_loss_unlabeled = kNotApplicable;
  double pl_oracle_ter = kNotApplicable;
  double empty_pl_fraction = kNotApplicable;
  double lr = 0.0;
  double cache_mean_staleness = kNotApplicable;
  bool divergence_flag = false;
  std::int64_t skipped_infeasible = 0;
  std::int64_t rejected_steps = 0;
  double wall_ms = 0.0;

  // Compares every field except wall_ms.
  bool same_trajectory(const MetricsRecord& other) const;
};

std::string to_json_line(const MetricsRecord& r, bool include_wall_time = true);
MetricsRecord from_json_line(const std::string& line);

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void write(const MetricsRecord& r) = 0;
};

class MemorySink : public MetricsSink {
 public:
  void write(const MetricsRecord& r) override { records.push_back(r); }

  std::vector<MetricsRecord> records;
};

// metrics.jsonl (one record per line) plus learning_curve.csv.
class RunDirSink : public MetricsSink {
 public:
  // When resuming, existing records past resume_after are dropped.
  explicit RunDirSink(const std::string& dir, std::int64_t resume_after = -1,
                      bool include_wall_time = true);
  void write(const MetricsRecord& r) override;

 private:
  std::ofstream jsonl_;
  std::ofstream csv_;
  bool include_wall_time_;
};

}  // namespace slimipl::eval
