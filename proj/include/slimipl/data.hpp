#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimipl/common.hpp"

namespace slimipl::eval {
class PlOracle;
}

namespace slimipl::data {

struct Utterance {
  std::string id;
  Matrix features;  // frames x feature_dim
  // Absent for the unlabeled split; its truth lives in HiddenReferences.
  std::optional<TokenSeq> reference;
  // Set when normalization met a zero-variance input.
  bool degenerate = false;

  int frames() const { return static_cast<int>(features.rows()); }
};

struct SynthTaskConfig {
  int vocab_size = 8;
  int feature_dim = 16;
  int min_token_frames = 4;
  int max_token_frames = 8;
  double noise_std = 0.5;
  std::uint64_t prototype_seed = 17;
  int min_tokens = 3;
  int max_tokens = 6;
  // Forbid equal adjacent tokens; back-to-back identical prototypes are
  // acoustically indistinguishable from one long token.
  bool distinct_neighbors = true;
  // Fraction of unlabeled utterances rendered as pure noise with an empty
  // transcription.
  double silence_fraction = 0.0;
  // Noise-only frames before and after the tokens, each uniform in [0, max].
  int max_edge_silence = 0;
  // Speaker pool: each speaker applies a fixed random linear distortion
  // I + speaker_variability * G (G Gaussian, scaled by 1/sqrt(feature_dim)) to
  // the prototypes. Labeled utterances come from the first labeled_speakers
  // speakers only; other splits draw from the whole pool. 0 speakers disables.
  int num_speakers = 0;
  int labeled_speakers = 0;
  double speaker_variability = 0.0;

  void validate() const;
  bool operator==(const SynthTaskConfig&) const = default;

  // 26 letters, apostrophe, and word boundary.
  static SynthTaskConfig letters();
  // Default experiment task: 100 speakers, labeled data from 10 of them.
  static SynthTaskConfig desk();
};

struct SplitSizes {
  int labeled = 250;
  int unlabeled = 5000;
  int dev = 200;
  int test = 500;

  bool operator==(const SplitSizes&) const = default;
};

enum class Split : std::uint8_t { kLabeled = 0, kUnlabeled = 1, kDev = 2, kTest = 3 };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct Corpus;

// Ground truth for the unlabeled split. Only eval::PlOracle can read it.
class HiddenReferences {
 public:
  std::size_t size() const { return refs_.size(); }
  bool contains(const std::string& id) const { return refs_.count(id) > 0; }
  void add(const std::string& id, TokenSeq ref) { refs_[id] = std::move(ref); }

  bool operator==(const HiddenReferences&) const = default;

 private:
  friend class slimipl::eval::PlOracle;
  friend void write_corpus(std::ostream& os, const Corpus& corpus);

  std::map<std::string, TokenSeq> refs_;
};

struct Corpus {
  SynthTaskConfig task;
  SplitSizes sizes;
  std::uint64_t seed = 0;
  std::vector<Utterance> labeled;
  std::vector<Utterance> unlabeled;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;
  HiddenReferences hidden;

  const std::vector<Utterance>& split(Split s) const;
};

// Unit-norm token prototypes in R^feature_dim, fixed by prototype_seed.
Matrix prototypes(const SynthTaskConfig& cfg);

struct RenderedUtterance {
  TokenSeq tokens;
  Matrix features;       // before normalization
  std::vector<int> frame_tokens;  // token per frame, -1 for silence
};

// Per-speaker prototype sets (num_speakers x vocab_size rows of feature_dim),
// fixed by prototype_seed. With no speakers, a single set equal to prototypes().
std::vector<Matrix> speaker_prototypes(const SynthTaskConfig& cfg);

// Draws a token string and renders it (raw, un-normalized) with the given
// prototype set.
RenderedUtterance render_utterance(const SynthTaskConfig& cfg, const Matrix& protos, Rng& rng,
                                   bool silence = false);

Corpus generate_corpus(const SynthTaskConfig& cfg, const SplitSizes& sizes, std::uint64_t seed);

// Zero mean, unit variance over all cells of the utterance.
Utterance normalize(Utterance utt);

// Seeded shuffle of [0, count) per epoch, cut into batches; last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, int batch_size,
                                                   std::uint64_t seed, std::int64_t epoch);

void write_corpus(std::ostream& os, const Corpus& corpus);
Corpus read_corpus(std::istream& is);
void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path);

}  // namespace slimipl::data
