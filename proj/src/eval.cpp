#include "slimipl/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "json.hpp"

namespace slimipl::eval {

std::size_t edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double error_rate(std::span<const TokenSeq> hyps, std::span<const TokenSeq> refs) {
  if (hyps.size() != refs.size()) {
    throw Error(ErrorCode::kInvalidInput, "hypothesis and reference counts differ");
  }
  std::size_t errors = 0;
  std::size_t length = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    errors += edit_distance(hyps[i], refs[i]);
    length += refs[i].size();
  }
  if (length == 0) {
    throw Error(ErrorCode::kInvalidInput, "total reference length is zero");
  }
  return static_cast<double>(errors) / static_cast<double>(length);
}

const TokenSeq& PlOracle::reference(const std::string& id) const {
  auto it = refs_.refs_.find(id);
  if (it == refs_.refs_.end()) {
    throw Error(ErrorCode::kMissingReferences, "no hidden reference for " + id);
  }
  return it->second;
}

double PlOracle::ter(std::span<const std::string> ids, std::span<const TokenSeq> pls) const {
  if (ids.size() != pls.size()) {
    throw Error(ErrorCode::kInvalidInput, "id and pseudo-label counts differ");
  }
  std::size_t errors = 0;
  std::size_t length = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenSeq& ref = reference(ids[i]);
    errors += edit_distance(pls[i], ref);
    length += ref.size();
  }
  return static_cast<double>(errors) / static_cast<double>(std::max<std::size_t>(length, 1));
}

bool MetricsRecord::same_trajectory(const MetricsRecord& o) const {
  return update_index == o.update_index && phase == o.phase && dev_ter == o.dev_ter &&
         train_loss_labeled == o.train_loss_labeled &&
         train_loss_unlabeled == o.train_loss_unlabeled && pl_oracle_ter == o.pl_oracle_ter &&
         empty_pl_fraction == o.empty_pl_fraction && lr == o.lr &&
         cache_mean_staleness == o.cache_mean_staleness && divergence_flag == o.divergence_flag &&
         skipped_infeasible == o.skipped_infeasible && rejected_steps == o.rejected_steps;
}

std::string to_json_line(const MetricsRecord& r, bool include_wall_time) {
  nlohmann::ordered_json j;
  j["update_index"] = r.update_index;
  j["phase"] = r.phase;
  j["dev_ter"] = r.dev_ter;
  j["train_loss_labeled"] = r.train_loss_labeled;
  j["train_loss_unlabeled"] = r.train_loss_unlabeled;
  j["pl_oracle_ter"] = r.pl_oracle_ter;
  j["empty_pl_fraction"] = r.empty_pl_fraction;
  j["lr"] = r.lr;
  j["cache_mean_staleness"] = r.cache_mean_staleness;
  j["divergence_flag"] = r.divergence_flag;
  j["skipped_infeasible"] = r.skipped_infeasible;
  j["rejected_steps"] = r.rejected_steps;
  if (include_wall_time) {
    j["wall_ms"] = r.wall_ms;
  }
  return j.dump();
}

MetricsRecord from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  MetricsRecord r;
  r.update_index = j.at("update_index").get<std::int64_t>();
  r.phase = j.at("phase").get<std::string>();
  r.dev_ter = j.at("dev_ter").get<double>();
  r.train_loss_labeled = j.at("train_loss_labeled").get<double>();
  r.train_loss_unlabeled = j.at("train_loss_unlabeled").get<double>();
  r.pl_oracle_ter = j.at("pl_oracle_ter").get<double>();
  r.empty_pl_fraction = j.at("empty_pl_fraction").get<double>();
  r.lr = j.at("lr").get<double>();
  r.cache_mean_staleness = j.at("cache_mean_staleness").get<double>();
  r.divergence_flag = j.at("divergence_flag").get<bool>();
  r.skipped_infeasible = j.at("skipped_infeasible").get<std::int64_t>();
  r.rejected_steps = j.at("rejected_steps").get<std::int64_t>();
  r.wall_ms = j.value("wall_ms", 0.0);
  return r;
}

RunDirSink::RunDirSink(const std::string& dir, std::int64_t resume_after, bool include_wall_time)
    : include_wall_time_(include_wall_time) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path jsonl_path = fs::path(dir) / "metrics.jsonl";
  const fs::path csv_path = fs::path(dir) / "learning_curve.csv";

  std::vector<MetricsRecord> kept;
  if (resume_after >= 0 && fs::exists(jsonl_path)) {
    std::ifstream in(jsonl_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      auto r = from_json_line(line);
      if (r.update_index <= resume_after) {
        kept.push_back(std::move(r));
      }
    }
  }
  jsonl_.open(jsonl_path, std::ios::trunc);
  csv_.open(csv_path, std::ios::trunc);
  if (!jsonl_ || !csv_) {
    throw Error(ErrorCode::kIo, "cannot open metrics files in " + dir);
  }
  csv_ << "update_index,dev_ter\n";
  for (const auto& r : kept) {
    write(r);
  }
}

void RunDirSink::write(const MetricsRecord& r) {
  jsonl_ << to_json_line(r, include_wall_time_) << '\n';
  csv_ << r.update_index << ',' << nlohmann::json(r.dev_ter).dump() << '\n';
  jsonl_.flush();
  csv_.flush();
}

}  // namespace slimipl::eval
