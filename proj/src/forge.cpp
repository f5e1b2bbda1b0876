#include "pabi/forge.hpp"

#include <algorithm>
#include <cstdio>

#include "pabi/random.hpp"

namespace pabi {

namespace {

constexpr std::pair<SignalFamily, std::string_view> kFamilyNames[] = {
    {SignalFamily::Partial, "partial"},
    {SignalFamily::Noisy, "noisy"},
    {SignalFamily::Mixed, "mixed"},
    {SignalFamily::BioConstraint, "bio_constraint"},
    {SignalFamily::PartialBio, "partial_bio"},
    {SignalFamily::CrossSentence, "cross_sentence"},
    {SignalFamily::AuxiliaryDetection, "auxiliary_detection"},
    {SignalFamily::AuxiliaryCoarse, "auxiliary_coarse"},
    {SignalFamily::AuxiliaryJoint, "auxiliary_joint"},
    {SignalFamily::CrossDomain, "cross_domain"},
};

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string_view to_string(SignalFamily family) noexcept {
  for (const auto& [f, name] : kFamilyNames)
    if (f == family) return name;
  return "unknown";
}

SignalFamily parse_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames)
    if (n == name) return f;
  throw Error(ErrorCode::ConfigError, "unknown signal family '" + std::string(name) + "'");
}

double SignalSpec::param(std::string_view key) const {
  auto it = params.find(std::string(key));
  if (it == params.end())
    throw Error(ErrorCode::ConfigError,
                "signal '" + std::string(to_string(family)) + "' is missing parameter '" + std::string(key) + "'");
  return it->second;
}

double SignalSpec::param_or(std::string_view key, double fallback) const {
  auto it = params.find(std::string(key));
  return it == params.end() ? fallback : it->second;
}

void validate(const SignalSpec& spec) {
  auto rate = [&](const char* key) {
    const double x = spec.param(key);
    if (!(x >= 0.0 && x <= 1.0))
      throw Error(ErrorCode::ConfigError, std::string(to_string(spec.family)) + "." + key + " = " +
                                              format_double(x) + " is outside [0,1]");
  };
  switch (spec.family) {
    case SignalFamily::Partial:
    case SignalFamily::PartialBio:
      rate("eta_p");
      break;
    case SignalFamily::Noisy:
      rate("eta_n");
      break;
    case SignalFamily::Mixed:
      rate("eta_p");
      rate("eta_n");
      break;
    case SignalFamily::CrossSentence:
      if (spec.param("k") < 1.0 || spec.param_or("min_count", 1.0) < 1.0)
        throw Error(ErrorCode::ConfigError, "cross_sentence needs k >= 1 and min_count >= 1");
      break;
    case SignalFamily::AuxiliaryCoarse:
    case SignalFamily::AuxiliaryJoint:
      if (spec.mapping.empty())
        throw Error(ErrorCode::ConfigError, std::string(to_string(spec.family)) + " needs a label mapping");
      break;
    case SignalFamily::BioConstraint:
    case SignalFamily::AuxiliaryDetection:
    case SignalFamily::CrossDomain:
      break;
  }
}

std::string canonical_key(const SignalSpec& spec) {
  std::string key(to_string(spec.family));
  key += '|';
  bool first = true;
  for (const auto& [k, v] : spec.params) {
    if (!first) key += ';';
    first = false;
    key += k + "=" + format_double(v);
  }
  if (!spec.mapping.empty()) {
    key += "|map:";
    for (const auto& [from, to] : spec.mapping) key += from + ">" + to + ",";
  }
  return key;
}

TagDataset corrupt(const TagDataset& gold, double eta_p, double eta_n, std::uint64_t seed) {
  if (!(eta_p >= 0.0 && eta_p <= 1.0) || !(eta_n >= 0.0 && eta_n <= 1.0))
    throw Error(ErrorCode::OutOfRange, "corruption rates must lie in [0,1]");
  const std::size_t num_labels = gold.labels().size();
  Rng rng(seed);
  std::vector<Sentence> out = gold.sentences();
  for (auto& sent : out) {
    for (auto& tag : sent.tags) {
      const double u_mask = uniform01(rng);
      const double u_flip = uniform01(rng);
      const std::size_t shift = 1 + uniform_index(rng, num_labels - 1);
      if (!tag) continue;
      if (u_mask < eta_p) {
        tag.reset();
      } else if (u_flip < eta_n) {
        tag = (*tag + shift) % num_labels;
      }
    }
  }
  return TagDataset(std::move(out), gold.labels());
}

TagDataset map_auxiliary(const TagDataset& gold, const LabelMapping& mapping) {
  const Coarsening part = coarsening_partition(gold.labels(), mapping);
  std::vector<std::size_t> image(gold.labels().size());
  for (std::size_t i = 0; i < gold.labels().size(); ++i) image[i] = part.coarse.index(mapping.at(gold.labels()[i]));
  std::vector<Sentence> out = gold.sentences();
  for (auto& sent : out)
    for (auto& tag : sent.tags)
      if (tag) tag = image[*tag];
  return TagDataset(std::move(out), part.coarse);
}

LabelMapping detection_mapping(const LabelSet& labels) {
  LabelMapping m;
  for (const auto& name : labels.names()) {
    if (name.size() >= 2 && name[1] == '-' && (name[0] == 'B' || name[0] == 'I'))
      m[name] = std::string(1, name[0]);
    else
      m[name] = name;
  }
  return m;
}

LabelMapping coarse_mapping(const LabelSet& labels, const std::map<std::string, std::string>& type_groups) {
  LabelMapping m;
  for (const auto& name : labels.names()) {
    if (name.size() > 2 && name[1] == '-' && (name[0] == 'B' || name[0] == 'I')) {
      const std::string type = name.substr(2);
      auto it = type_groups.find(type);
      const std::string coarse = it == type_groups.end() ? type : it->second;
      m[name] = coarse == "O" ? "O" : name.substr(0, 2) + coarse;
    } else {
      m[name] = name;
    }
  }
  return m;
}

Coarsening coarsening_partition(const LabelSet& fine, const LabelMapping& mapping) {
  std::vector<std::string> coarse_names;
  std::vector<std::size_t> sizes;
  for (const auto& name : fine.names()) {
    auto it = mapping.find(name);
    if (it == mapping.end()) throw Error(ErrorCode::UnmappedLabel, "label '" + name + "' has no image in the mapping");
    auto pos = std::find(coarse_names.begin(), coarse_names.end(), it->second);
    if (pos == coarse_names.end()) {
      coarse_names.push_back(it->second);
      sizes.push_back(1);
    } else {
      ++sizes[static_cast<std::size_t>(pos - coarse_names.begin())];
    }
  }
  return Coarsening{LabelSet(std::move(coarse_names)), std::move(sizes)};
}

Distribution label_distribution(const TagDataset& data) {
  Distribution counts = Distribution::Zero(static_cast<Eigen::Index>(data.labels().size()));
  for (const auto& sent : data.sentences())
    for (const auto& tag : sent.tags)
      if (tag) counts(static_cast<Eigen::Index>(*tag)) += 1.0;
  const double total = counts.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyInput, "dataset has no known tags");
  return counts / total;
}

RateEstimate estimate_rates(const AlignedPairs& aligned) {
  if (aligned.pairs.empty()) throw Error(ErrorCode::EmptyInput, "no aligned tokens");
  std::size_t unknown = 0, known = 0, differ = 0;
  for (const auto& [gold, incidental] : aligned.pairs) {
    if (!incidental) {
      ++unknown;
      continue;
    }
    ++known;
    if (!gold || aligned.gold_labels[*gold] != aligned.incidental_labels[*incidental]) ++differ;
  }
  RateEstimate est;
  est.eta_p = static_cast<double>(unknown) / static_cast<double>(aligned.pairs.size());
  if (known == 0) {
    est.undefined_noise = true;
  } else {
    est.eta_n = static_cast<double>(differ) / static_cast<double>(known);
  }
  return est;
}

std::string kgram_key(const std::vector<std::string>& items, std::size_t begin, std::size_t k) {
  std::string key;
  for (std::size_t i = 0; i < k; ++i) {
    if (i) key += '\x1f';
    key += items[begin + i];
  }
  return key;
}

namespace {

const std::vector<std::string>& kgram_items(const Sentence& sent, KgramSource source, std::size_t column,
                                            std::vector<std::string>& scratch) {
  if (source == KgramSource::Tokens) return sent.tokens;
  scratch.clear();
  for (std::size_t t = 0; t < sent.size(); ++t) {
    if (sent.extra.empty() || column >= sent.extra[t].size())
      throw Error(ErrorCode::InvalidArgument, "k-gram column " + std::to_string(column) + " is missing");
    scratch.push_back(sent.extra[t][column]);
  }
  return scratch;
}

}  // namespace

KgramStats kgram_uniqueness(const TagDataset& gold, std::size_t k, std::size_t min_count, KgramSource source,
                            std::size_t column) {
  if (k == 0 || min_count == 0) throw Error(ErrorCode::OutOfRange, "k and min_count must be at least 1");

  struct Entry {
    std::size_t count = 0;
    std::vector<std::size_t> labels;
    bool unique = true;
  };
  std::unordered_map<std::string, Entry> table;
  std::size_t occurrences = 0;

  std::vector<std::string> scratch;
  for (const auto& sent : gold.sentences()) {
    const auto& items = kgram_items(sent, source, column, scratch);
    for (std::size_t b = 0; b + k <= sent.size(); ++b) {
      std::vector<std::size_t> labels;
      bool known = true;
      for (std::size_t i = b; i < b + k && known; ++i) {
        if (!sent.tags[i]) known = false;
        else labels.push_back(*sent.tags[i]);
      }
      if (!known) continue;
      ++occurrences;
      Entry& e = table[kgram_key(items, b, k)];
      if (e.count == 0) e.labels = std::move(labels);
      else if (e.unique && e.labels != labels) e.unique = false;
      ++e.count;
    }
  }

  KgramStats stats;
  stats.occurrences = occurrences;
  for (auto& [key, e] : table) {
    if (!e.unique || e.count < min_count) continue;
    stats.unique_occurrences += e.count;
    stats.dictionary.emplace(key, std::move(e.labels));
  }
  stats.p = occurrences == 0 ? 0.0 : static_cast<double>(stats.unique_occurrences) / static_cast<double>(occurrences);
  return stats;
}

TagDataset apply_kgram_dictionary(const TagDataset& inputs, const KgramStats& stats, std::size_t k,
                                  KgramSource source, std::size_t column) {
  if (k == 0) throw Error(ErrorCode::OutOfRange, "k must be at least 1");
  std::vector<Sentence> out = inputs.sentences();
  std::vector<std::string> scratch;
  for (auto& sent : out) {
    const auto& items = kgram_items(sent, source, column, scratch);
    std::vector<Tag> tags(sent.size());
    for (std::size_t b = 0; b + k <= sent.size(); ++b) {
      auto it = stats.dictionary.find(kgram_key(items, b, k));
      if (it == stats.dictionary.end()) continue;
      for (std::size_t i = 0; i < k; ++i) tags[b + i] = it->second[i];
    }
    sent.tags = std::move(tags);
  }
  return TagDataset(std::move(out), inputs.labels());
}

}  // namespace pabi
