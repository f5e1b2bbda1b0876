#pragma once

// Turning gold annotations into incidental signals, and reading signal
// parameters back off aligned data.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pabi/core.hpp"
#include "pabi/dataset.hpp"

namespace pabi {

enum class SignalFamily {
  Partial,
  Noisy,
  Mixed,
  BioConstraint,
  PartialBio,
  CrossSentence,
  AuxiliaryDetection,
  AuxiliaryCoarse,
  AuxiliaryJoint,
  CrossDomain,
};

std::string_view to_string(SignalFamily family) noexcept;
SignalFamily parse_family(std::string_view name);

/// fine label name -> coarse label name
using LabelMapping = std::map<std::string, std::string>;

struct SignalSpec {
  SignalFamily family = SignalFamily::Partial;
  std::map<std::string, double> params;
  LabelMapping mapping;  // auxiliary families only
  std::uint64_t seed = 0;

  double param(std::string_view key) const;
  double param_or(std::string_view key, double fallback) const;
};

/// Throws ConfigError when a parameter the family needs is missing or out of range.
void validate(const SignalSpec& spec);

/// Stable textual identity of a spec, e.g. "mixed|eta_n=0.3;eta_p=0.2".
/// Excludes the seed.
std::string canonical_key(const SignalSpec& spec);

/// Per token, in (sentence, token) order: unknown with probability eta_p,
/// otherwise replaced by a uniformly drawn different label with probability
/// eta_n. Every token consumes the same draws whatever the rates, so corruptions
/// with one seed are nested across rates.
TagDataset corrupt(const TagDataset& gold, double eta_p, double eta_n, std::uint64_t seed);

TagDataset map_auxiliary(const TagDataset& gold, const LabelMapping& mapping);

/// B-X -> B, I-X -> I, O -> O.
LabelMapping detection_mapping(const LabelSet& labels);

/// Entity types renamed through `type_groups` (fine type -> coarse type); a
/// coarse type of "O" folds the entity into O. Unlisted types are kept.
LabelMapping coarse_mapping(const LabelSet& labels, const std::map<std::string, std::string>& type_groups);

struct Coarsening {
  LabelSet coarse;
  std::vector<std::size_t> group_sizes;  // fine labels behind each coarse label
};

Coarsening coarsening_partition(const LabelSet& fine, const LabelMapping& mapping);

/// Relative frequency of each label among the known tags.
Distribution label_distribution(const TagDataset& data);

struct RateEstimate {
  double eta_p = 0.0;
  double eta_n = 0.0;
  bool undefined_noise = false;  // no known incidental tags
};

RateEstimate estimate_rates(const AlignedPairs& pairs);

enum class KgramSource { Tokens, Column };

struct KgramStats {
  double p = 0.0;
  std::size_t occurrences = 0;
  std::size_t unique_occurrences = 0;
  // joined k-gram key -> label indices of its unique label k-gram
  std::unordered_map<std::string, std::vector<std::size_t>> dictionary;
};

/// Key for the k-gram starting at `begin`; parts joined by U+001F.
std::string kgram_key(const std::vector<std::string>& items, std::size_t begin, std::size_t k);

/// Share of k-gram occurrences whose k-gram always carries the same label
/// k-gram and occurs at least `min_count` times. With KgramSource::Column the
/// k-grams are read from extra column `column` (e.g. part-of-speech) instead of
/// the surface tokens.
KgramStats kgram_uniqueness(const TagDataset& gold, std::size_t k, std::size_t min_count,
                            KgramSource source = KgramSource::Tokens, std::size_t column = 0);

/// Cross-sentence signal: every occurrence of a dictionary k-gram in `inputs`
/// gets the dictionary's labels, all other tokens stay unknown.
TagDataset apply_kgram_dictionary(const TagDataset& inputs, const KgramStats& stats, std::size_t k,
                                  KgramSource source = KgramSource::Tokens, std::size_t column = 0);

}  // namespace pabi
