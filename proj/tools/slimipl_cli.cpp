// slimipl command-line driver.
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "slimipl/checkpoint.hpp"
#include "slimipl/config.hpp"
#include "slimipl/ctc.hpp"
#include "slimipl/eval.hpp"
#include "slimipl/ngram_lm.hpp"
#include "slimipl/trainer.hpp"

namespace fs = std::filesystem;
using namespace slimipl;

namespace {

// Relative output directories are placed under $SLIMIPL_OUTPUT_ROOT when set.
fs::path resolve_output(const std::string& dir) {
  const fs::path p(dir);
  const char* root = std::getenv("SLIMIPL_OUTPUT_ROOT");
  if (root && *root && p.is_relative()) return fs::path(root) / p;
  return p;
}

config::ExperimentConfig load_config(const std::string& path, const std::string& preset,
                                     const std::vector<std::string>& overrides) {
  if (!path.empty()) return config::load(path, overrides);
  return config::parse_ini(config::to_ini(config::preset(preset)), overrides);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  os << text;
}

data::Corpus corpus_for(const config::ExperimentConfig& cfg, const std::string& path) {
  if (!path.empty()) {
    auto c = data::load_corpus(path);
    if (c.task.feature_dim != cfg.model.feature_dim || c.task.vocab_size != cfg.model.vocab_size)
      throw Error(ErrorCode::kShapeMismatch, "corpus " + path + " does not match the model dimensions");
    return c;
  }
  return data::generate_corpus(cfg.task, cfg.sizes, cfg.data_seed);
}

std::string join(const TokenSeq& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? " " : "") + std::to_string(t[i]);
  return s;
}

TokenSeq parse_tokens(const std::string& s) {
  TokenSeq t;
  std::istringstream is(s);
  for (int v; is >> v;) t.push_back(v);
  return t;
}

// References for any split; the unlabeled ones come through the oracle.
std::vector<TokenSeq> references(const data::Corpus& c, data::Split split) {
  eval::PlOracle oracle(c.hidden);
  std::vector<TokenSeq> refs;
  for (const auto& u : c.split(split)) refs.push_back(u.reference ? *u.reference : oracle.reference(u.id));
  return refs;
}

struct TrainOutcome {
  double final_ter = 0.0;
  std::int64_t updates = 0;
  std::int64_t resolved_m = 0;
  bool diverged = false;
};

// Runs (or resumes) training in run_dir. stop_after > 0 pauses at the first
// eval point at or beyond that update, leaving a resumable checkpoint.
TrainOutcome train_in(const config::ExperimentConfig& cfg, const data::Corpus& corpus, const fs::path& run_dir,
                      bool resume, std::int64_t stop_after, bool wall_time) {
  fs::create_directories(run_dir / "checkpoints");
  const auto latest = run_dir / "checkpoints" / "latest.ckpt";
  eval::PlOracle oracle(corpus.hidden);
  auto probe = [&](std::span<const std::string> ids, std::span<const TokenSeq> pls) { return oracle.ter(ids, pls); };
  const auto data = trainer::TrainData::from(corpus);

  std::optional<trainer::Trainer> t;
  std::int64_t resume_after = -1;
  if (resume && fs::exists(latest)) {
    t.emplace(trainer::Trainer::resume(Checkpoint::load(latest.string()), data, probe));
    resume_after = t->update_index();
    std::cerr << "resuming at update " << resume_after << "\n";
  } else {
    if (resume) std::cerr << "no checkpoint in " << run_dir << ", starting fresh\n";
    write_text(run_dir / "config.ini", config::to_ini(cfg));
    t.emplace(cfg.train, cfg.model, data, probe);
  }
  eval::RunDirSink sink(run_dir.string(), resume_after, wall_time);
  t->run(sink, [&](const trainer::Trainer& tr) {
    const auto tmp = latest.string() + ".tmp";
    tr.checkpoint().save(tmp);
    fs::rename(tmp, latest);
    return stop_after <= 0 || tr.update_index() < stop_after;
  });
  if (t->done()) save_model((run_dir / "model.bin").string(), t->model());
  const auto& h = t->history();
  return {h.empty() ? 1.0 : h.back().dev_ter, t->update_index(), t->resolved_pretrain_updates(), t->diverged()};
}

// --- subcommands -----------------------------------------------------------

struct Common {
  std::string config_path;
  std::string preset = "desk";
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "experiment config file");
    app->add_option("--preset", preset, "preset used when no config file is given")
        ->check(CLI::IsMember(config::preset_names()));
    app->add_option("--set", overrides, "override, section.key=value (repeatable)");
  }
  config::ExperimentConfig load() const { return load_config(config_path, preset, overrides); }
};

int cmd_init_config(const Common& c, const std::string& out) {
  const auto text = config::to_ini(c.load());
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return 0;
}

int cmd_generate_data(const Common& c, std::string out) {
  const auto cfg = c.load();
  if (out.empty()) out = (resolve_output(cfg.output_dir) / "corpus.bin").string();
  const auto corpus = data::generate_corpus(cfg.task, cfg.sizes, cfg.data_seed);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  data::save_corpus(out, corpus);
  std::cout << "wrote " << out << " (" << corpus.labeled.size() << "/" << corpus.unlabeled.size() << "/"
            << corpus.dev.size() << "/" << corpus.test.size() << " utterances)\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& corpus_path, bool resume, std::int64_t stop_after,
              bool no_wall_time) {
  auto cfg = c.load();
  const auto run_dir = resolve_output(cfg.output_dir);
  if (resume && fs::exists(run_dir / "config.ini")) cfg = config::load((run_dir / "config.ini").string());
  const auto corpus = corpus_for(cfg, corpus_path);
  const auto r = train_in(cfg, corpus, run_dir, resume, stop_after, !no_wall_time);
  std::cout << "run " << run_dir.string() << ": " << r.updates << " updates, final dev TER "
            << config::format_double(r.final_ter) << (r.diverged ? " (divergence flagged)" : "") << "\n";
  return 0;
}

int cmd_decode(const Common& c, const std::string& model_path, const std::string& corpus_path,
               const std::string& split_name, std::string out, std::optional<int> beam,
               std::optional<double> alpha, std::optional<double> beta) {
  const auto cfg = c.load();
  const auto m = load_model(model_path);
  const auto corpus = data::load_corpus(corpus_path);
  if (m.config.feature_dim != corpus.task.feature_dim || m.config.vocab_size != corpus.task.vocab_size)
    throw Error(ErrorCode::kShapeMismatch, "model " + model_path + " does not match corpus " + corpus_path);
  const auto split = data::split_from_string(split_name);
  const auto& utts = corpus.split(split);
  if (utts.empty()) throw Error(ErrorCode::kInvalidInput, "split '" + split_name + "' is empty");

  std::vector<TokenSeq> labeled_refs;
  for (const auto& u : corpus.labeled) labeled_refs.push_back(*u.reference);
  const auto lm = ctc::train_ngram_lm(labeled_refs, cfg.decode.lm_order, cfg.decode.lm_smoothing,
                                      corpus.task.vocab_size);
  ctc::DecoderConfig dc;
  dc.beam_size = beam.value_or(cfg.decode.beam_size);
  dc.lm_weight = alpha.value_or(cfg.decode.lm_weight);
  dc.length_bonus = beta.value_or(cfg.decode.length_bonus);
  dc.lm = &lm;
  dc.validate();

  std::vector<TokenSeq> greedy, beamed;
  for (const auto& u : utts) {
    const auto lp = model::infer(m, u.features);
    greedy.push_back(ctc::greedy_decode(lp));
    beamed.push_back(ctc::beam_search_decode(lp, dc));
  }
  const auto refs = references(corpus, split);
  const double greedy_ter = eval::error_rate(greedy, refs);
  const double beam_ter = eval::error_rate(beamed, refs);

  if (out.empty()) out = (fs::path(model_path).parent_path() / ("hyps_" + split_name + ".tsv")).string();
  std::ostringstream hyps;
  for (std::size_t i = 0; i < utts.size(); ++i) hyps << utts[i].id << "\t" << join(beamed[i]) << "\n";
  write_text(out, hyps.str());
  nlohmann::ordered_json j{{"split", split_name},     {"utterances", utts.size()}, {"beam_size", dc.beam_size},
                           {"lm_weight", dc.lm_weight}, {"length_bonus", dc.length_bonus},
                           {"greedy_ter", greedy_ter}, {"beam_ter", beam_ter}};
  write_text(out + ".json", j.dump(2) + "\n");
  std::cout << "greedy TER " << config::format_double(greedy_ter) << "\nbeam TER " << config::format_double(beam_ter)
            << "\nhypotheses: " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& hyps_path, const std::string& corpus_path, const std::string& split_name) {
  const auto corpus = data::load_corpus(corpus_path);
  const auto split = data::split_from_string(split_name);
  const auto refs = references(corpus, split);
  std::map<std::string, TokenSeq> by_id;
  std::ifstream is(hyps_path);
  if (!is) throw Error(ErrorCode::kIo, "cannot read " + hyps_path);
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    by_id[line.substr(0, tab)] = parse_tokens(tab == std::string::npos ? "" : line.substr(tab + 1));
  }
  std::vector<TokenSeq> hyps;
  std::size_t missing = 0;
  for (const auto& u : corpus.split(split)) {
    const auto it = by_id.find(u.id);
    missing += it == by_id.end();
    hyps.push_back(it == by_id.end() ? TokenSeq{} : it->second);
  }
  if (hyps.empty()) throw Error(ErrorCode::kInvalidInput, "split '" + split_name + "' is empty");
  std::cout << "TER " << config::format_double(eval::error_rate(hyps, refs)) << " over " << hyps.size()
            << " utterances";
  if (missing) std::cout << " (" << missing << " missing, scored as empty)";
  std::cout << "\n";
  return 0;
}

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

GridAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw Error(ErrorCode::kInvalidConfig, "grid axis needs key=v1,v2: " + spec);
  GridAxis a{spec.substr(0, eq), {}};
  std::istringstream is(spec.substr(eq + 1));
  for (std::string v; std::getline(is, v, ',');) a.values.push_back(v);
  if (a.values.empty()) throw Error(ErrorCode::kInvalidConfig, "grid axis has no values: " + spec);
  return a;
}

int cmd_sweep(const Common& c, const std::string& corpus_path, const std::vector<std::string>& axes_spec, int jobs) {
  const auto base = c.load();
  std::vector<GridAxis> axes;
  for (const auto& s : axes_spec) axes.push_back(parse_axis(s));

  std::vector<std::vector<std::string>> cells{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& cell : cells)
      for (const auto& v : a.values) {
        auto o = cell;
        o.push_back(a.key + "=" + v);
        next.push_back(o);
      }
    cells = next;
  }

  const auto root = resolve_output(base.output_dir);
  fs::create_directories(root);
  const auto base_corpus = corpus_for(base, corpus_path);
  std::vector<std::string> rows(cells.size());
  std::mutex log_mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cells.size();) {
      char name[32];
      std::snprintf(name, sizeof(name), "cell_%03zu", i);
      std::ostringstream row;
      std::string settings;
      for (const auto& o : cells[i]) settings += (settings.empty() ? "" : " ") + o;
      try {
        auto ov = c.overrides;
        ov.insert(ov.end(), cells[i].begin(), cells[i].end());
        auto cfg = load_config(c.config_path, c.preset, ov);
        cfg.output_dir = (root / name).string();
        const bool same_data = cfg.task == base.task && cfg.sizes == base.sizes && cfg.data_seed == base.data_seed;
        const auto r = same_data ? train_in(cfg, base_corpus, cfg.output_dir, false, 0, true)
                                 : train_in(cfg, data::generate_corpus(cfg.task, cfg.sizes, cfg.data_seed),
                                            cfg.output_dir, false, 0, true);
        const auto& t = cfg.train;
        row << name << "," << trainer::to_string(t.variant) << "," << config::format_double(t.dropout_initial)
            << "->" << config::format_double(t.dropout_final) << "," << t.cache_size << ","
            << config::format_double(t.replace_prob) << "," << r.resolved_m << ","
            << config::format_double(t.lambda()) << "," << config::format_double(r.final_ter) << ","
            << (r.diverged ? "diverged" : "ok") << ",\"" << settings << "\"";
      } catch (const std::exception& e) {
        row << name << ",,,,,,,,failed: " << std::quoted(std::string(e.what()), '\'') << ",\"" << settings << "\"";
      }
      rows[i] = row.str();
      std::lock_guard lock(log_mu);
      std::cerr << rows[i] << "\n";
    }
  };
  std::vector<std::jthread> pool;
  for (int k = 0; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  pool.clear();

  std::ostringstream csv;
  csv << "cell,variant,dropout,C,p,M,lambda,TER,status,settings\n";
  for (const auto& r : rows) csv << r << "\n";
  write_text(root / "summary.csv", csv.str());
  std::cout << csv.str() << "summary: " << (root / "summary.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slimIPL: semi-supervised CTC training with a pseudo-label cache"};
  app.require_subcommand(1);

  Common init_c, gen_c, train_c, decode_c, sweep_c;
  std::string init_out, gen_out, train_corpus, decode_model, decode_corpus, decode_split = "test", decode_out,
      eval_hyps, eval_corpus, eval_split = "test", sweep_corpus;
  bool resume = false, no_wall_time = false;
  std::int64_t stop_after = 0;
  std::optional<int> beam;
  std::optional<double> alpha, beta;
  std::vector<std::string> grid;
  int jobs = 1;

  auto* init = app.add_subcommand("init-config", "print or write a preset config");
  init_c.attach(init);
  init->add_option("-o,--out", init_out, "output file (stdout when omitted)");

  auto* gen = app.add_subcommand("generate-data", "generate the synthetic corpus");
  gen_c.attach(gen);
  gen->add_option("-o,--out", gen_out, "corpus file (default <output>/corpus.bin)");

  auto* train = app.add_subcommand("train", "train a model into the output directory");
  train_c.attach(train);
  train->add_option("--corpus", train_corpus, "corpus file (generated from the config when omitted)");
  train->add_flag("--resume", resume, "continue from the run directory's latest checkpoint");
  train->add_option("--stop-after", stop_after, "pause at the first eval point at or past this update");
  train->add_flag("--no-wall-time", no_wall_time, "omit wall-clock times from metrics.jsonl");

  auto* decode = app.add_subcommand("decode", "decode a split with greedy and beam search");
  decode_c.attach(decode);
  decode->add_option("--model", decode_model, "model file")->required();
  decode->add_option("--corpus", decode_corpus, "corpus file")->required();
  decode->add_option("--split", decode_split, "labeled|unlabeled|dev|test");
  decode->add_option("-o,--out", decode_out, "hypotheses file");
  decode->add_option("--beam", beam, "beam size");
  decode->add_option("--lm-weight", alpha, "LM weight");
  decode->add_option("--length-bonus", beta, "per-token bonus");

  auto* evaluate = app.add_subcommand("evaluate", "score a hypotheses file");
  evaluate->add_option("--hyps", eval_hyps, "hypotheses file (id<TAB>tokens)")->required();
  evaluate->add_option("--corpus", eval_corpus, "corpus file")->required();
  evaluate->add_option("--split", eval_split, "labeled|unlabeled|dev|test");

  auto* sweep = app.add_subcommand("sweep", "train one run per grid cell and summarize");
  sweep_c.attach(sweep);
  sweep->add_option("--corpus", sweep_corpus, "corpus file shared by cells with the base data settings");
  sweep->add_option("--grid", grid, "axis, section.key=v1,v2,... (repeatable)");
  sweep->add_option("-j,--jobs", jobs, "cells trained in parallel")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*init) return cmd_init_config(init_c, init_out);
    if (*gen) return cmd_generate_data(gen_c, gen_out);
    if (*train) return cmd_train(train_c, train_corpus, resume, stop_after, no_wall_time);
    if (*decode) return cmd_decode(decode_c, decode_model, decode_corpus, decode_split, decode_out, beam, alpha, beta);
    if (*evaluate) return cmd_evaluate(eval_hyps, eval_corpus, eval_split);
    if (*sweep) return cmd_sweep(sweep_c, sweep_corpus, grid, jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
