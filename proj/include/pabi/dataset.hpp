#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pabi/core.hpp"

namespace pabi {

/// Tag column value for a token whose label is unknown.
inline constexpr std::string_view kUnknownTag = "_";

using Tag = std::optional<std::size_t>;

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;  // indices into the owning dataset's label set
  // Columns between the token and the tag, kept verbatim per token.
  std::vector<std::vector<std::string>> extra;

  std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

/// Immutable corpus of tagged sentences over a fixed label set.
class TagDataset {
 public:
  TagDataset(std::vector<Sentence> sentences, LabelSet labels);

  const std::vector<Sentence>& sentences() const noexcept { return sentences_; }
  const Sentence& operator[](std::size_t i) const { return sentences_[i]; }
  std::size_t size() const noexcept { return sentences_.size(); }
  const LabelSet& labels() const noexcept { return labels_; }

  std::size_t num_tokens() const;
  bool fully_labeled() const;
  /// Same label set, sentences picked by index.
  TagDataset subset(const std::vector<std::size_t>& indices) const;
  /// Same tokens, every tag unknown.
  TagDataset unlabeled() const;
  /// Stable content hash over tokens and tags.
  std::uint64_t fingerprint() const;

  bool operator==(const TagDataset& other) const {
    return labels_ == other.labels_ && sentences_ == other.sentences_;
  }

 private:
  std::vector<Sentence> sentences_;
  LabelSet labels_;
};

/// Gold and incidental labels for the same tokens.
struct AlignedPairs {
  LabelSet gold_labels;
  LabelSet incidental_labels;
  std::vector<std::pair<Tag, Tag>> pairs;
};

/// Pairs up two annotations of the same token sequence.
AlignedPairs align(const TagDataset& gold, const TagDataset& incidental);

/// Concatenation; both parts must share a label set.
TagDataset concat(const TagDataset& a, const TagDataset& b);

}  // namespace pabi
