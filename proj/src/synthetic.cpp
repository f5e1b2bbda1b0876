#include "pabi/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "pabi/random.hpp"

namespace pabi {

namespace {

class Zipf {
 public:
  Zipf(std::size_t n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += std::pow(static_cast<double>(r + 1), -exponent);
      cdf_[r] = total;
    }
    for (double& c : cdf_) c /= total;
  }

  std::size_t draw(Rng& rng) const {
    const double u = uniform01(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

void check(const SyntheticConfig& c) {
  if (c.types.empty() || c.types.size() != c.type_weights.size())
    throw Error(ErrorCode::ConfigError, "synthetic types and type_weights must be nonempty and of equal length");
  if (c.min_length == 0 || c.max_length < c.min_length)
    throw Error(ErrorCode::ConfigError, "synthetic sentence lengths must satisfy 1 <= min_length <= max_length");
  if (c.max_entity_length == 0 || c.outside_vocab == 0 || c.begin_vocab == 0 || c.inside_vocab == 0 ||
      c.shared_vocab == 0 || c.cues_per_type == 0)
    throw Error(ErrorCode::ConfigError, "synthetic vocabulary sizes must be positive");
}

}  // namespace

BioScheme synthetic_scheme(const SyntheticConfig& config) { return BioScheme(config.types); }

TagDataset generate_sentences(const SyntheticConfig& config, std::size_t count, std::uint64_t stream_seed) {
  check(config);
  const BioScheme scheme = synthetic_scheme(config);
  const std::size_t num_types = config.types.size();
  const std::size_t outside = scheme.size() - 1;
  const Zipf outside_words(config.outside_vocab, config.zipf_exponent);
  const Zipf begin_words(config.begin_vocab, config.zipf_exponent);
  const Zipf inside_words(config.inside_vocab, config.zipf_exponent);
  const Zipf shared_words(config.shared_vocab, config.zipf_exponent);

  std::vector<std::string> pool(num_types);
  for (std::size_t t = 0; t < num_types; ++t) {
    auto it = config.pools.find(config.types[t]);
    pool[t] = it == config.pools.end() ? config.types[t] : it->second;
  }

  Rng rng(stream_seed);
  std::vector<Sentence> sentences;
  sentences.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t length = config.min_length + uniform_index(rng, config.max_length - config.min_length + 1);
    std::vector<std::size_t> types;  // entity type per position, num_types for O
    std::vector<std::size_t> labels;
    while (labels.size() < length) {
      if (uniform01(rng) < config.entity_rate) {
        const std::size_t type = sample_weighted(rng, config.type_weights);
        std::size_t span = 1;
        while (span < config.max_entity_length && uniform01(rng) < config.continue_rate) ++span;
        span = std::min(span, length - labels.size());
        for (std::size_t i = 0; i < span; ++i) {
          labels.push_back(i == 0 ? type : num_types + type);
          types.push_back(type);
        }
      } else {
        labels.push_back(outside);
        types.push_back(num_types);
      }
    }

    Sentence sent;
    for (std::size_t i = 0; i < length; ++i) {
      std::string word;
      if (labels[i] == outside) {
        const bool before_entity = i + 1 < length && labels[i + 1] < num_types;
        if (before_entity && uniform01(rng) < config.cue_rate) {
          word = "cue" + config.types[types[i + 1]] + std::to_string(uniform_index(rng, config.cues_per_type));
        } else {
          word = "w" + std::to_string(outside_words.draw(rng));
        }
      } else {
        const bool begin = labels[i] < num_types;
        const std::string& type = config.types[types[i]];
        if (uniform01(rng) < config.shared_rate) {
          word = (begin ? "sb" : "si") + pool[types[i]] + std::to_string(shared_words.draw(rng));
        } else if (begin) {
          word = "b" + type + std::to_string(begin_words.draw(rng));
        } else {
          word = "i" + type + std::to_string(inside_words.draw(rng));
        }
      }
      sent.tokens.push_back(std::move(word));
      sent.tags.emplace_back(labels[i]);
    }
    sentences.push_back(std::move(sent));
  }
  return TagDataset(std::move(sentences), scheme.labels());
}

SyntheticCorpus generate_corpus(const SyntheticConfig& config) {
  return SyntheticCorpus{
      generate_sentences(config, config.gold_sentences, mix_seed(config.seed, 1)),
      generate_sentences(config, config.incidental_sentences, mix_seed(config.seed, 2)),
      generate_sentences(config, config.test_sentences, mix_seed(config.seed, 3)),
  };
}

std::map<std::string, std::string> default_coarse_groups() {
  return {{"PER", "PER"}, {"ORG", "ORG"}, {"GPE", "LOC"}, {"LOC", "LOC"}, {"FAC", "LOC"}, {"NORP", "MISC"}};
}

}  // namespace pabi
