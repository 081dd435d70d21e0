#include "slimipl/data.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "slimipl/binary_io.hpp"

namespace slimipl::data {

namespace {

constexpr char kMagic[] = "SLIMCORP";
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void SynthTaskConfig::validate() const {
  if (vocab_size < 1 || feature_dim < 1) {
    throw Error(ErrorCode::kInvalidConfig, "vocab_size and feature_dim must be >= 1");
  }
  if (min_token_frames < 1 || max_token_frames < min_token_frames) {
    throw Error(ErrorCode::kInvalidConfig, "token frame range must satisfy 1 <= min <= max");
  }
  if (min_tokens < 1 || max_tokens < min_tokens) {
    throw Error(ErrorCode::kInvalidConfig, "token count range must satisfy 1 <= min <= max");
  }
  if (!(noise_std >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "noise_std must be >= 0");
  }
  if (distinct_neighbors && vocab_size < 2 && max_tokens > 1) {
    throw Error(ErrorCode::kInvalidConfig, "distinct_neighbors needs vocab_size >= 2");
  }
  if (max_edge_silence < 0) {
    throw Error(ErrorCode::kInvalidConfig, "max_edge_silence must be >= 0");
  }
  if (num_speakers < 0 || labeled_speakers < 0 || labeled_speakers > num_speakers ||
      (num_speakers > 0 && labeled_speakers == 0) || !(speaker_variability >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "need 0 < labeled_speakers <= num_speakers when speakers are used");
  }
  if (!(silence_fraction >= 0.0 && silence_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "silence_fraction must be in [0, 1]");
  }
}

SynthTaskConfig SynthTaskConfig::letters() {
  SynthTaskConfig cfg;
  cfg.vocab_size = 28;
  cfg.feature_dim = 32;
  return cfg;
}

SynthTaskConfig SynthTaskConfig::desk() {
  SynthTaskConfig cfg;
  cfg.noise_std = 0.3;
  cfg.num_speakers = 100;
  cfg.labeled_speakers = 10;
  cfg.speaker_variability = 0.8;
  return cfg;
}

const char* to_string(Split s) {
  switch (s) {
    case Split::kLabeled:
      return "labeled";
    case Split::kUnlabeled:
      return "unlabeled";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  for (Split sp : {Split::kLabeled, Split::kUnlabeled, Split::kDev, Split::kTest}) {
    if (s == to_string(sp)) {
      return sp;
    }
  }
  throw Error(ErrorCode::kInvalidInput, "unknown split '" + s + "'");
}

const std::vector<Utterance>& Corpus::split(Split s) const {
  switch (s) {
    case Split::kLabeled:
      return labeled;
    case Split::kUnlabeled:
      return unlabeled;
    case Split::kDev:
      return dev;
    case Split::kTest:
      return test;
  }
  return labeled;
}

Matrix prototypes(const SynthTaskConfig& cfg) {
  Rng rng(cfg.prototype_seed);
  Matrix protos(cfg.vocab_size, cfg.feature_dim);
  for (int v = 0; v < cfg.vocab_size; ++v) {
    for (int f = 0; f < cfg.feature_dim; ++f) {
      protos(v, f) = standard_normal(rng);
    }
    protos.row(v).normalize();
  }
  return protos;
}

std::vector<Matrix> speaker_prototypes(const SynthTaskConfig& cfg) {
  const Matrix base = prototypes(cfg);
  if (cfg.num_speakers == 0) {
    return {base};
  }
  std::vector<Matrix> out;
  const double scale = cfg.speaker_variability / std::sqrt(static_cast<double>(cfg.feature_dim));
  for (int s = 0; s < cfg.num_speakers; ++s) {
    Rng rng(derive_seed(cfg.prototype_seed, 1 + static_cast<std::uint64_t>(s)));
    Matrix transform = Matrix::Identity(cfg.feature_dim, cfg.feature_dim);
    for (Eigen::Index i = 0; i < transform.size(); ++i) {
      transform.data()[i] += scale * standard_normal(rng);
    }
    out.push_back(base * transform.transpose());
  }
  return out;
}

RenderedUtterance render_utterance(const SynthTaskConfig& cfg, const Matrix& protos, Rng& rng,
                                   bool silence) {
  RenderedUtterance out;
  const int length = uniform_int(rng, cfg.min_tokens, cfg.max_tokens);
  TokenSeq tokens;
  std::vector<int> durations;
  for (int i = 0; i < length; ++i) {
    int tok = 0;
    if (cfg.distinct_neighbors && i > 0) {
      // Uniform over the V-1 tokens differing from the previous one.
      tok = uniform_int(rng, 0, cfg.vocab_size - 2);
      if (tok >= tokens.back()) {
        ++tok;
      }
    } else {
      tok = uniform_int(rng, 0, cfg.vocab_size - 1);
    }
    tokens.push_back(tok);
    durations.push_back(uniform_int(rng, cfg.min_token_frames, cfg.max_token_frames));
  }

  int lead = 0;
  int trail = 0;
  if (cfg.max_edge_silence > 0) {
    lead = uniform_int(rng, 0, cfg.max_edge_silence);
    trail = uniform_int(rng, 0, cfg.max_edge_silence);
  }
  const int frames = lead + std::accumulate(durations.begin(), durations.end(), 0) + trail;
  out.features = Matrix(frames, cfg.feature_dim);
  int row = 0;
  auto emit = [&](int tok) {
    for (int f = 0; f < cfg.feature_dim; ++f) {
      const double clean = tok < 0 ? 0.0 : protos(tok, f);
      out.features(row, f) = clean + cfg.noise_std * standard_normal(rng);
    }
    out.frame_tokens.push_back(tok);
    ++row;
  };
  for (int d = 0; d < lead; ++d) {
    emit(-1);
  }
  for (int i = 0; i < length; ++i) {
    for (int d = 0; d < durations[i]; ++d) {
      emit(silence ? -1 : tokens[i]);
    }
  }
  for (int d = 0; d < trail; ++d) {
    emit(-1);
  }
  if (!silence) {
    out.tokens = std::move(tokens);
  }
  return out;
}

Utterance normalize(Utterance utt) {
  const double n = static_cast<double>(utt.features.size());
  if (n < 1) {
    return utt;
  }
  const double mean = utt.features.mean();
  const double var = (utt.features.array() - mean).square().sum() / n;
  if (!(var > 1e-24)) {
    utt.features.setZero();
    utt.degenerate = true;
    return utt;
  }
  utt.features = ((utt.features.array() - mean) / std::sqrt(var)).matrix();
  return utt;
}

Corpus generate_corpus(const SynthTaskConfig& cfg, const SplitSizes& sizes, std::uint64_t seed) {
  cfg.validate();
  Corpus corpus;
  corpus.task = cfg;
  corpus.sizes = sizes;
  corpus.seed = seed;
  const std::vector<Matrix> speakers = speaker_prototypes(cfg);

  auto build = [&](Split split, int count, std::vector<Utterance>& dst) {
    // The silence decision gets its own stream so the silence fraction does not
    // perturb the rendering of the remaining utterances.
    Rng silence_rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(split)));
    for (int i = 0; i < count; ++i) {
      const bool silence =
          split == Split::kUnlabeled && uniform_unit(silence_rng) < cfg.silence_fraction;
      Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(split) << 32) | static_cast<std::uint64_t>(i)));
      std::size_t speaker = 0;
      if (cfg.num_speakers > 0) {
        const int pool = split == Split::kLabeled ? cfg.labeled_speakers : cfg.num_speakers;
        speaker = static_cast<std::size_t>(uniform_int(rng, 0, pool - 1));
      }
      auto rendered = render_utterance(cfg, speakers[speaker], rng, silence);
      Utterance utt;
      utt.id = std::string(to_string(split)) + "-" + std::to_string(i);
      utt.features = std::move(rendered.features);
      if (split == Split::kUnlabeled) {
        corpus.hidden.add(utt.id, std::move(rendered.tokens));
      } else {
        utt.reference = std::move(rendered.tokens);
      }
      dst.push_back(normalize(std::move(utt)));
    }
  };
  build(Split::kLabeled, sizes.labeled, corpus.labeled);
  build(Split::kUnlabeled, sizes.unlabeled, corpus.unlabeled);
  build(Split::kDev, sizes.dev, corpus.dev);
  build(Split::kTest, sizes.test, corpus.test);
  return corpus;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, int batch_size,
                                                   std::uint64_t seed, std::int64_t epoch) {
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

void write_corpus(std::ostream& os, const Corpus& corpus) {
  io::BinaryWriter w(os);
  os.write(kMagic, 8);
  w.u32(kFormatVersion);
  const auto& t = corpus.task;
  w.u32(static_cast<std::uint32_t>(t.vocab_size));
  w.u32(static_cast<std::uint32_t>(t.feature_dim));
  w.u32(static_cast<std::uint32_t>(t.min_token_frames));
  w.u32(static_cast<std::uint32_t>(t.max_token_frames));
  w.f64(t.noise_std);
  w.u64(t.prototype_seed);
  w.u32(static_cast<std::uint32_t>(t.min_tokens));
  w.u32(static_cast<std::uint32_t>(t.max_tokens));
  w.u8(t.distinct_neighbors ? 1 : 0);
  w.f64(t.silence_fraction);
  w.u32(static_cast<std::uint32_t>(t.num_speakers));
  w.u32(static_cast<std::uint32_t>(t.labeled_speakers));
  w.f64(t.speaker_variability);
  w.u32(static_cast<std::uint32_t>(t.max_edge_silence));
  w.u32(static_cast<std::uint32_t>(corpus.sizes.labeled));
  w.u32(static_cast<std::uint32_t>(corpus.sizes.unlabeled));
  w.u32(static_cast<std::uint32_t>(corpus.sizes.dev));
  w.u32(static_cast<std::uint32_t>(corpus.sizes.test));
  w.u64(corpus.seed);

  for (Split split : {Split::kLabeled, Split::kUnlabeled, Split::kDev, Split::kTest}) {
    for (const auto& utt : corpus.split(split)) {
      w.str(utt.id);
      w.u8(static_cast<std::uint8_t>(split));
      w.u8(utt.degenerate ? 1 : 0);
      if (split == Split::kUnlabeled) {
        w.tokens(corpus.hidden.refs_.at(utt.id));
      } else {
        w.tokens(utt.reference.value_or(TokenSeq{}));
      }
      w.matrix(utt.features);
    }
  }
}

Corpus read_corpus(std::istream& is) {
  io::BinaryReader r(is);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw Error(ErrorCode::kParse, "not a corpus file");
  }
  if (r.u32() != kFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported corpus format version");
  }
  Corpus c;
  auto& t = c.task;
  t.vocab_size = static_cast<int>(r.u32());
  t.feature_dim = static_cast<int>(r.u32());
  t.min_token_frames = static_cast<int>(r.u32());
  t.max_token_frames = static_cast<int>(r.u32());
  t.noise_std = r.f64();
  t.prototype_seed = r.u64();
  t.min_tokens = static_cast<int>(r.u32());
  t.max_tokens = static_cast<int>(r.u32());
  t.distinct_neighbors = r.u8() != 0;
  t.silence_fraction = r.f64();
  t.num_speakers = static_cast<int>(r.u32());
  t.labeled_speakers = static_cast<int>(r.u32());
  t.speaker_variability = r.f64();
  t.max_edge_silence = static_cast<int>(r.u32());
  c.sizes.labeled = static_cast<int>(r.u32());
  c.sizes.unlabeled = static_cast<int>(r.u32());
  c.sizes.dev = static_cast<int>(r.u32());
  c.sizes.test = static_cast<int>(r.u32());
  c.seed = r.u64();

  const std::size_t total = static_cast<std::size_t>(c.sizes.labeled) + c.sizes.unlabeled +
                            c.sizes.dev + c.sizes.test;
  for (std::size_t i = 0; i < total; ++i) {
    Utterance utt;
    utt.id = r.str();
    const auto split = static_cast<Split>(r.u8());
    utt.degenerate = r.u8() != 0;
    TokenSeq ref = r.tokens();
    utt.features = r.matrix();
    switch (split) {
      case Split::kLabeled:
        utt.reference = std::move(ref);
        c.labeled.push_back(std::move(utt));
        break;
      case Split::kUnlabeled:
        c.hidden.add(utt.id, std::move(ref));
        c.unlabeled.push_back(std::move(utt));
        break;
      case Split::kDev:
        utt.reference = std::move(ref);
        c.dev.push_back(std::move(utt));
        break;
      case Split::kTest:
        utt.reference = std::move(ref);
        c.test.push_back(std::move(utt));
        break;
      default:
        throw Error(ErrorCode::kParse, "bad split tag in corpus file");
    }
  }
  return c;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error(ErrorCode::kIo, "cannot write " + path);
  }
  write_corpus(os, corpus);
  if (!os) {
    throw Error(ErrorCode::kIo, "write failed for " + path);
  }
}

Corpus load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error(ErrorCode::kIo, "cannot open " + path);
  }
  return read_corpus(is);
}

}  // namespace slimipl::data
