#include "slimipl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace slimipl::config {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& name, const std::string& value) {
  throw Error(ErrorCode::kParse, "invalid value '" + value + "' for " + name);
}

template <typename T>
T parse_number(const std::string& name, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    bad_value(name, text);
  }
  return v;
}

bool parse_bool(const std::string& name, const std::string& text) {
  if (text == "true" || text == "1") {
    return true;
  }
  if (text == "false" || text == "0") {
    return false;
  }
  bad_value(name, text);
}

template <typename T>
Field number(const std::string& section, const std::string& key,
             std::function<T&(ExperimentConfig&)> ref) {
  const std::string name = section + "." + key;
  return Field{
      section, key,
      [ref](const ExperimentConfig& c) {
        const T& v = ref(const_cast<ExperimentConfig&>(c));
        if constexpr (std::is_floating_point_v<T>) {
          return format_double(v);
        } else {
          return std::to_string(v);
        }
      },
      [ref, name](ExperimentConfig& c, const std::string& s) { ref(c) = parse_number<T>(name, s); }};
}

Field boolean(const std::string& section, const std::string& key,
              std::function<bool&(ExperimentConfig&)> ref) {
  const std::string name = section + "." + key;
  return Field{section, key,
               [ref](const ExperimentConfig& c) {
                 return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
               },
               [ref, name](ExperimentConfig& c, const std::string& s) { ref(c) = parse_bool(name, s); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      number<int>("task", "vocab_size", [](C& c) -> int& { return c.task.vocab_size; }),
      number<int>("task", "feature_dim", [](C& c) -> int& { return c.task.feature_dim; }),
      number<int>("task", "min_token_frames", [](C& c) -> int& { return c.task.min_token_frames; }),
      number<int>("task", "max_token_frames", [](C& c) -> int& { return c.task.max_token_frames; }),
      number<double>("task", "noise_std", [](C& c) -> double& { return c.task.noise_std; }),
      number<std::uint64_t>("task", "prototype_seed",
                            [](C& c) -> std::uint64_t& { return c.task.prototype_seed; }),
      number<int>("task", "min_tokens", [](C& c) -> int& { return c.task.min_tokens; }),
      number<int>("task", "max_tokens", [](C& c) -> int& { return c.task.max_tokens; }),
      boolean("task", "distinct_neighbors", [](C& c) -> bool& { return c.task.distinct_neighbors; }),
      number<double>("task", "silence_fraction", [](C& c) -> double& { return c.task.silence_fraction; }),
      number<int>("task", "max_edge_silence", [](C& c) -> int& { return c.task.max_edge_silence; }),
      number<int>("task", "num_speakers", [](C& c) -> int& { return c.task.num_speakers; }),
      number<int>("task", "labeled_speakers", [](C& c) -> int& { return c.task.labeled_speakers; }),
      number<double>("task", "speaker_variability",
                     [](C& c) -> double& { return c.task.speaker_variability; }),
      number<std::uint64_t>("task", "seed", [](C& c) -> std::uint64_t& { return c.data_seed; }),

      number<int>("splits", "labeled", [](C& c) -> int& { return c.sizes.labeled; }),
      number<int>("splits", "unlabeled", [](C& c) -> int& { return c.sizes.unlabeled; }),
      number<int>("splits", "dev", [](C& c) -> int& { return c.sizes.dev; }),
      number<int>("splits", "test", [](C& c) -> int& { return c.sizes.test; }),

      number<int>("model", "kernel", [](C& c) -> int& { return c.model.kernel; }),
      number<int>("model", "stride", [](C& c) -> int& { return c.model.stride; }),
      number<int>("model", "hidden", [](C& c) -> int& { return c.model.hidden; }),
      number<int>("model", "blocks", [](C& c) -> int& { return c.model.blocks; }),

      Field{"train", "variant", [](const C& c) { return std::string(trainer::to_string(c.train.variant)); },
            [](C& c, const std::string& s) { c.train.variant = trainer::variant_from_string(s); }},
      number<std::int64_t>("train", "pretrain_updates",
                           [](C& c) -> std::int64_t& { return c.train.pretrain_updates; }),
      number<std::int64_t>("train", "auto_m_limit", [](C& c) -> std::int64_t& { return c.train.auto_m_limit; }),
      number<int>("train", "cache_size", [](C& c) -> int& { return c.train.cache_size; }),
      number<double>("train", "replace_prob", [](C& c) -> double& { return c.train.replace_prob; }),
      number<int>("train", "sup_updates", [](C& c) -> int& { return c.train.sup_updates; }),
      number<int>("train", "unsup_updates", [](C& c) -> int& { return c.train.unsup_updates; }),
      number<double>("train", "dropout_initial", [](C& c) -> double& { return c.train.dropout_initial; }),
      number<double>("train", "dropout_final", [](C& c) -> double& { return c.train.dropout_final; }),
      number<double>("train", "ema_decay", [](C& c) -> double& { return c.train.ema_decay; }),
      number<int>("train", "batch_size", [](C& c) -> int& { return c.train.batch_size; }),
      number<std::int64_t>("train", "max_updates", [](C& c) -> std::int64_t& { return c.train.max_updates; }),
      number<int>("train", "eval_every", [](C& c) -> int& { return c.train.eval_every; }),
      number<std::uint64_t>("train", "seed", [](C& c) -> std::uint64_t& { return c.train.seed; }),
      boolean("train", "filter_empty_pls", [](C& c) -> bool& { return c.train.filter_empty_pls; }),
      number<double>("train", "lr", [](C& c) -> double& { return c.train.lr; }),
      number<double>("train", "adagrad_eps", [](C& c) -> double& { return c.train.adagrad_eps; }),
      number<int>("train", "plateau_patience", [](C& c) -> int& { return c.train.plateau_patience; }),
      number<double>("train", "plateau_min_delta", [](C& c) -> double& { return c.train.plateau_min_delta; }),
      number<int>("train", "max_halvings", [](C& c) -> int& { return c.train.max_halvings; }),

      number<int>("augment", "num_freq_masks", [](C& c) -> int& { return c.train.augment.num_freq_masks; }),
      number<int>("augment", "freq_param", [](C& c) -> int& { return c.train.augment.freq_param; }),
      number<int>("augment", "num_time_masks", [](C& c) -> int& { return c.train.augment.num_time_masks; }),
      number<int>("augment", "time_param", [](C& c) -> int& { return c.train.augment.time_param; }),
      number<double>("augment", "max_time_ratio",
                     [](C& c) -> double& { return c.train.augment.max_time_ratio; }),
      number<double>("augment", "mask_value", [](C& c) -> double& { return c.train.augment.mask_value; }),

      number<double>("divergence", "empty_fraction",
                     [](C& c) -> double& { return c.train.divergence.empty_fraction; }),
      number<double>("divergence", "ter_regression",
                     [](C& c) -> double& { return c.train.divergence.ter_regression; }),
      number<int>("divergence", "window", [](C& c) -> int& { return c.train.divergence.window; }),

      number<int>("decode", "beam_size", [](C& c) -> int& { return c.decode.beam_size; }),
      number<double>("decode", "lm_weight", [](C& c) -> double& { return c.decode.lm_weight; }),
      number<double>("decode", "length_bonus", [](C& c) -> double& { return c.decode.length_bonus; }),
      number<int>("decode", "lm_order", [](C& c) -> int& { return c.decode.lm_order; }),
      number<double>("decode", "lm_smoothing", [](C& c) -> double& { return c.decode.lm_smoothing; }),

      Field{"output", "dir", [](const C& c) { return c.output_dir; },
            [](C& c, const std::string& s) { c.output_dir = s; }},
  };
  return table;
}

bool in_sections(const Field& f, const std::set<std::string>& sections) {
  return sections.empty() || sections.count(f.section) > 0;
}

std::string render(const ExperimentConfig& cfg, const std::set<std::string>& sections) {
  std::ostringstream os;
  std::string current;
  for (const auto& f : fields()) {
    if (!in_sections(f, sections)) {
      continue;
    }
    if (f.section != current) {
      if (!current.empty()) {
        os << '\n';
      }
      os << '[' << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

void apply(ExperimentConfig& cfg, const std::string& text, const std::vector<std::string>& overrides,
           const std::set<std::string>& sections) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kParse, e.message() + " at line " + std::to_string(e.line()));
  }

  std::set<std::string> known;
  for (const auto& f : fields()) {
    if (in_sections(f, sections)) {
      known.insert(f.section + "." + f.key);
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "override '" + ov + "' is not section.key=value");
    }
    const std::string name = ov.substr(0, eq);
    if (known.count(name) == 0) {
      throw Error(ErrorCode::kParse, "unknown key " + name);
    }
    tree.put(pt::ptree::path_type(name, '.'), ov.substr(eq + 1));
  }

  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorCode::kParse, "unknown key " + section + " outside any section");
    }
    for (const auto& [key, value] : body) {
      if (known.count(section + "." + key) == 0) {
        throw Error(ErrorCode::kParse, "unknown key " + section + "." + key);
      }
    }
  }
  for (const auto& f : fields()) {
    if (!in_sections(f, sections)) {
      continue;
    }
    const auto value = tree.get_optional<std::string>(pt::ptree::path_type(f.section + "." + f.key, '.'));
    if (!value) {
      throw Error(ErrorCode::kParse, "missing key " + f.section + "." + f.key);
    }
    f.set(cfg, *value);
  }
}

const std::set<std::string> kTrainSections = {"train", "augment", "divergence"};

}  // namespace

void ExperimentConfig::validate() const {
  task.validate();
  model.validate();
  train.validate();
  train.augment.validate(task.feature_dim);
  if (model.feature_dim != task.feature_dim || model.vocab_size != task.vocab_size) {
    throw Error(ErrorCode::kInvalidConfig, "model dimensions do not match the task");
  }
  if (sizes.labeled < 1 || sizes.dev < 1 || sizes.unlabeled < 0 || sizes.test < 0) {
    throw Error(ErrorCode::kInvalidConfig, "split sizes must be positive");
  }
  if (decode.beam_size < 1 || decode.lm_order < 1 || !(decode.lm_smoothing > 0.0) ||
      decode.lm_weight < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid decode settings");
  }
}

std::string to_ini(const ExperimentConfig& cfg) { return render(cfg, {}); }

ExperimentConfig parse_ini(const std::string& text, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  apply(cfg, text, overrides, {});
  // Shared dimensions are owned by [task] and [train].
  cfg.model.feature_dim = cfg.task.feature_dim;
  cfg.model.vocab_size = cfg.task.vocab_size;
  cfg.model.dropout = cfg.train.dropout_initial;
  cfg.validate();
  return cfg;
}

ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) {
    throw Error(ErrorCode::kIo, "cannot open config " + path);
  }
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_ini(ss.str(), overrides);
}

std::string train_to_ini(const trainer::TrainConfig& cfg) {
  ExperimentConfig wrapper;
  wrapper.train = cfg;
  return render(wrapper, kTrainSections);
}

trainer::TrainConfig train_from_ini(const std::string& text) {
  ExperimentConfig wrapper;
  apply(wrapper, text, {}, kTrainSections);
  return wrapper.train;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.task = data::SynthTaskConfig::desk();
  cfg.model.feature_dim = cfg.task.feature_dim;
  cfg.model.vocab_size = cfg.task.vocab_size;
  if (name == "desk") {
    cfg.train.max_updates = 6000;
  } else if (name == "ll10") {
    const auto t = trainer::TrainConfig::librilight_10h();
    cfg.train = t;
  } else if (name == "ls100") {
    cfg.train = trainer::TrainConfig::librispeech_100h();
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown preset '" + name + "'");
  }
  cfg.model.dropout = cfg.train.dropout_initial;
  cfg.output_dir = "runs/" + name;
  return cfg;
}

std::vector<std::string> preset_names() { return {"desk", "ll10", "ls100"}; }

}  // namespace slimipl::config
