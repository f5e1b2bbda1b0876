#pragma once

// Counting label sequences that satisfy structural constraints, and the
// informativeness of those constraints.

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pabi/core.hpp"

namespace pabi {

enum class BioKind : std::uint8_t { Begin, Inside, Outside };

/// A BIO label inventory. I-X is admissible only directly after B-X or I-X,
/// and never at the start of a sentence.
class BioScheme {
 public:
  /// Canonical order {B-X..., I-X..., O}. A single unnamed type gives {B, I, O}.
  explicit BioScheme(const std::vector<std::string>& types);
  static BioScheme with_types(std::size_t num_types);
  /// Reads kinds and types off existing label names ("B-X", "I-X", "B", "I", "O"),
  /// keeping the label order of `labels`.
  static BioScheme from_labels(const LabelSet& labels);

  const LabelSet& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_types() const noexcept { return num_types_; }
  BioKind kind(std::size_t label) const { return kinds_[label]; }
  const std::string& type(std::size_t label) const { return types_[label]; }

  bool start_allowed(std::size_t label) const { return kinds_[label] != BioKind::Inside; }
  bool transition_allowed(std::size_t prev, std::size_t next) const { return allowed_(prev, next); }
  const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& transitions() const noexcept { return allowed_; }

 private:
  BioScheme(LabelSet labels, std::vector<BioKind> kinds, std::vector<std::string> types);
  static BioScheme build(const std::vector<std::string>& types);

  LabelSet labels_;
  std::vector<BioKind> kinds_;
  std::vector<std::string> types_;
  std::size_t num_types_ = 0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed_;
};

/// Observed label index per position, std::nullopt where unknown.
using PartialMask = std::vector<std::optional<std::size_t>>;

inline constexpr double kInfeasibleLogCount = -std::numeric_limits<double>::infinity();

/// ln of the number of BIO-valid sequences of length n that agree with every
/// observed position of `mask` (empty mask = no observations). Returns
/// kInfeasibleLogCount when no sequence qualifies.
double count_bio_completions(std::size_t length, const BioScheme& scheme, std::span<const std::optional<std::size_t>> mask = {});

PabiScore pabi_bio(std::size_t length, const BioScheme& scheme);

enum class SamplingMode { WithReplacement, WithoutReplacement };

/// Sentence-sampled estimate over a corpus of partial masks under the BIO rule.
/// Sample indices are drawn up front from `seed`.
PabiScore pabi_partial_bio(const std::vector<PartialMask>& masks, const BioScheme& scheme, std::size_t sample_size,
                           std::uint64_t seed, SamplingMode mode = SamplingMode::WithReplacement);

/// sqrt(p): share p of token pairs forced to agree across sentences.
PabiScore pabi_cross_sentence(double p);

/// Uncollapsed form with the binary-entropy term, for `num_groups` (K) forced
/// groups among `num_positions` label positions.
PabiScore pabi_cross_sentence_exact(double p, std::size_t num_labels, double num_groups, double num_positions);

/// d agents mapped injectively onto d' tasks.
PabiScore pabi_assignment(std::size_t agents, std::size_t tasks);

/// Total orders over t items versus free pairwise comparisons.
PabiScore pabi_ranking(std::size_t items);

}  // namespace pabi
