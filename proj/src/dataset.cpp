#include "pabi/dataset.hpp"

#include <algorithm>

#include "pabi/random.hpp"

namespace pabi {

TagDataset::TagDataset(std::vector<Sentence> sentences, LabelSet labels)
    : sentences_(std::move(sentences)), labels_(std::move(labels)) {
  if (sentences_.empty()) throw Error(ErrorCode::EmptyCorpus, "a dataset needs at least one sentence");
  if (labels_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a dataset needs a label set");
  for (std::size_t s = 0; s < sentences_.size(); ++s) {
    Sentence& sent = sentences_[s];
    if (sent.tokens.size() != sent.tags.size())
      throw Error(ErrorCode::InvalidArgument, "sentence " + std::to_string(s) + " has mismatched tokens and tags");
    if (!sent.extra.empty() && sent.extra.size() != sent.tokens.size())
      throw Error(ErrorCode::InvalidArgument, "sentence " + std::to_string(s) + " has mismatched extra columns");
    for (const Tag& t : sent.tags)
      if (t && *t >= labels_.size())
        throw Error(ErrorCode::UnmappedLabel, "sentence " + std::to_string(s) + " has a tag outside the label set");
  }
}

std::size_t TagDataset::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences_) n += s.size();
  return n;
}

bool TagDataset::fully_labeled() const {
  return std::all_of(sentences_.begin(), sentences_.end(), [](const Sentence& s) {
    return std::all_of(s.tags.begin(), s.tags.end(), [](const Tag& t) { return t.has_value(); });
  });
}

TagDataset TagDataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Sentence> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(sentences_.at(i));
  return TagDataset(std::move(out), labels_);
}

TagDataset TagDataset::unlabeled() const {
  std::vector<Sentence> out = sentences_;
  for (auto& s : out) std::fill(s.tags.begin(), s.tags.end(), std::nullopt);
  return TagDataset(std::move(out), labels_);
}

std::uint64_t TagDataset::fingerprint() const {
  std::uint64_t h = fnv1a("pabi-dataset");
  for (const auto& name : labels_.names()) h = fnv1a(name, fnv1a("\x1f", h));
  for (const auto& s : sentences_) {
    h = fnv1a("\x1e", h);
    for (std::size_t i = 0; i < s.size(); ++i) {
      h = fnv1a(s.tokens[i], fnv1a("\x1f", h));
      h = fnv1a(s.tags[i] ? labels_[*s.tags[i]] : std::string(kUnknownTag), fnv1a("\t", h));
    }
  }
  return h;
}

AlignedPairs align(const TagDataset& gold, const TagDataset& incidental) {
  if (gold.size() != incidental.size())
    throw Error(ErrorCode::InvalidArgument, "aligned datasets differ in sentence count");
  AlignedPairs out{gold.labels(), incidental.labels(), {}};
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const Sentence& g = gold[s];
    const Sentence& i = incidental[s];
    if (g.tokens != i.tokens)
      throw Error(ErrorCode::InvalidArgument, "sentence " + std::to_string(s) + " differs between annotations");
    for (std::size_t t = 0; t < g.size(); ++t) out.pairs.emplace_back(g.tags[t], i.tags[t]);
  }
  if (out.pairs.empty()) throw Error(ErrorCode::EmptyInput, "no aligned tokens");
  return out;
}

TagDataset concat(const TagDataset& a, const TagDataset& b) {
  if (!(a.labels() == b.labels())) throw Error(ErrorCode::InvalidArgument, "cannot concatenate different label sets");
  std::vector<Sentence> out = a.sentences();
  out.insert(out.end(), b.sentences().begin(), b.sentences().end());
  return TagDataset(std::move(out), a.labels());
}

}  // namespace pabi
