#include "pabi/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pabi/random.hpp"

namespace pabi {

BioScheme::BioScheme(LabelSet labels, std::vector<BioKind> kinds, std::vector<std::string> types)
    : labels_(std::move(labels)), kinds_(std::move(kinds)), types_(std::move(types)) {
  const auto n = static_cast<Eigen::Index>(labels_.size());
  allowed_.setConstant(n, n, false);
  std::vector<std::string> seen;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (kinds_[i] != BioKind::Outside && std::find(seen.begin(), seen.end(), types_[i]) == seen.end())
      seen.push_back(types_[i]);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (kinds_[j] != BioKind::Inside) {
        allowed_(i, j) = true;
      } else {
        allowed_(i, j) = kinds_[i] != BioKind::Outside && types_[i] == types_[j];
      }
    }
  }
  num_types_ = seen.size();
}

BioScheme BioScheme::build(const std::vector<std::string>& types) {
  if (types.empty()) throw Error(ErrorCode::InvalidArgument, "BIO scheme needs at least one type");
  std::vector<std::string> names;
  std::vector<BioKind> kinds;
  std::vector<std::string> label_types;
  const bool unnamed = types.size() == 1 && types[0].empty();
  for (const auto& t : types) {
    names.push_back(unnamed ? "B" : "B-" + t);
    kinds.push_back(BioKind::Begin);
    label_types.push_back(t);
  }
  for (const auto& t : types) {
    names.push_back(unnamed ? "I" : "I-" + t);
    kinds.push_back(BioKind::Inside);
    label_types.push_back(t);
  }
  names.push_back("O");
  kinds.push_back(BioKind::Outside);
  label_types.emplace_back();
  return BioScheme(LabelSet(std::move(names)), std::move(kinds), std::move(label_types));
}

BioScheme::BioScheme(const std::vector<std::string>& types) : BioScheme(build(types)) {}

BioScheme BioScheme::with_types(std::size_t num_types) {
  if (num_types == 0) throw Error(ErrorCode::InvalidArgument, "BIO scheme needs at least one type");
  if (num_types == 1) {
    return BioScheme(LabelSet({"B", "I", "O"}), {BioKind::Begin, BioKind::Inside, BioKind::Outside}, {"", "", ""});
  }
  std::vector<std::string> types;
  for (std::size_t t = 0; t < num_types; ++t) types.push_back("T" + std::to_string(t));
  return BioScheme(types);
}

BioScheme BioScheme::from_labels(const LabelSet& labels) {
  std::vector<BioKind> kinds;
  std::vector<std::string> types;
  for (const auto& name : labels.names()) {
    if (name == "O") {
      kinds.push_back(BioKind::Outside);
      types.emplace_back();
    } else if (name == "B" || name == "I") {
      kinds.push_back(name == "B" ? BioKind::Begin : BioKind::Inside);
      types.emplace_back();
    } else if (name.size() > 2 && (name[0] == 'B' || name[0] == 'I') && name[1] == '-') {
      kinds.push_back(name[0] == 'B' ? BioKind::Begin : BioKind::Inside);
      types.push_back(name.substr(2));
    } else {
      throw Error(ErrorCode::InvalidArgument, "label '" + name + "' is not a BIO label");
    }
  }
  return BioScheme(labels, std::move(kinds), std::move(types));
}

double count_bio_completions(std::size_t length, const BioScheme& scheme,
                             std::span<const std::optional<std::size_t>> mask) {
  if (length == 0) throw Error(ErrorCode::OutOfRange, "sequence length must be at least 1");
  if (!mask.empty() && mask.size() != length)
    throw Error(ErrorCode::InvalidArgument, "mask length differs from sequence length");
  const auto num_labels = static_cast<Eigen::Index>(scheme.size());
  for (const auto& m : mask)
    if (m && *m >= scheme.size()) throw Error(ErrorCode::InvalidArgument, "observed label outside the scheme");

  auto admits = [&](std::size_t pos, Eigen::Index label) {
    return mask.empty() || !mask[pos] || *mask[pos] == static_cast<std::size_t>(label);
  };

  // Forward counts, rescaled each step; the scale is accumulated in log space.
  Eigen::VectorXd counts(num_labels);
  for (Eigen::Index j = 0; j < num_labels; ++j)
    counts(j) = (scheme.start_allowed(static_cast<std::size_t>(j)) && admits(0, j)) ? 1.0 : 0.0;
  double log_scale = 0.0;
  const Eigen::MatrixXd transfer = scheme.transitions().cast<double>();

  for (std::size_t pos = 1; pos < length; ++pos) {
    Eigen::VectorXd next = transfer.transpose() * counts;
    for (Eigen::Index j = 0; j < num_labels; ++j)
      if (!admits(pos, j)) next(j) = 0.0;
    const double peak = next.maxCoeff();
    if (!(peak > 0.0)) return kInfeasibleLogCount;
    log_scale += std::log(peak);
    counts = next / peak;
  }
  const double total = counts.sum();
  if (!(total > 0.0)) return kInfeasibleLogCount;
  return log_scale + std::log(total);
}

PabiScore pabi_bio(std::size_t length, const BioScheme& scheme) {
  const double reduced = count_bio_completions(length, scheme);
  return pabi_ratio(reduced, static_cast<double>(length) * std::log(static_cast<double>(scheme.size())));
}

PabiScore pabi_partial_bio(const std::vector<PartialMask>& masks, const BioScheme& scheme, std::size_t sample_size,
                           std::uint64_t seed, SamplingMode mode) {
  if (masks.empty()) throw Error(ErrorCode::EmptyInput, "no sentences to sample");
  if (sample_size == 0) throw Error(ErrorCode::OutOfRange, "sample size must be at least 1");

  std::vector<std::size_t> picks;
  Rng rng(seed);
  if (mode == SamplingMode::WithReplacement) {
    picks.reserve(sample_size);
    for (std::size_t i = 0; i < sample_size; ++i) picks.push_back(uniform_index(rng, masks.size()));
  } else {
    picks.resize(masks.size());
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    shuffle(picks, rng);
    if (sample_size < picks.size()) picks.resize(sample_size);
  }

  const double log_labels = std::log(static_cast<double>(scheme.size()));
  double reduced = 0.0;
  double full = 0.0;
  for (std::size_t idx : picks) {
    const PartialMask& mask = masks[idx];
    if (mask.empty()) continue;
    const double log_count = count_bio_completions(mask.size(), scheme, mask);
    if (log_count == kInfeasibleLogCount)
      throw Error(ErrorCode::InfeasibleMask, "sentence " + std::to_string(idx) + " admits no BIO completion");
    reduced += log_count;
    full += static_cast<double>(mask.size()) * log_labels;
  }
  // Fully observed sentences can leave tiny negative round-off.
  return pabi_ratio(std::max(reduced, 0.0), full);
}

PabiScore pabi_cross_sentence(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::OutOfRange, "p must lie in [0,1]");
  PabiScore s;
  s.value = std::sqrt(p);
  s.full_nats = 1.0;
  s.reduced_nats = 1.0 - p;
  return s;
}

PabiScore pabi_cross_sentence_exact(double p, std::size_t num_labels, double num_groups, double num_positions) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::OutOfRange, "p must lie in [0,1]");
  if (num_labels < 2) throw Error(ErrorCode::OutOfRange, "need at least two labels");
  if (!(num_groups > 0.0 && num_groups < num_positions))
    throw Error(ErrorCode::OutOfRange, "need 0 < groups < positions");
  const double log_l = std::log(static_cast<double>(num_labels));
  const double binary = -detail::xlogx(p) - detail::xlogx(1.0 - p);
  // ln(L^N - L^K) without forming either power.
  const double log_rest = num_positions * log_l + std::log1p(-std::exp((num_groups - num_positions) * log_l));
  const double reduced = binary + p * num_groups * log_l + (1.0 - p) * log_rest;
  return pabi_ratio(reduced, num_positions * log_l);
}

PabiScore pabi_assignment(std::size_t agents, std::size_t tasks) {
  if (agents < 1 || agents > tasks || tasks < 2) throw Error(ErrorCode::OutOfRange, "need 1 <= d <= d' and d' >= 2");
  double log_injective = 0.0;
  for (std::size_t k = tasks - agents + 1; k <= tasks; ++k) log_injective += std::log(static_cast<double>(k));
  return pabi_ratio(log_injective, static_cast<double>(agents) * std::log(static_cast<double>(tasks)));
}

PabiScore pabi_ranking(std::size_t items) {
  if (items < 2) throw Error(ErrorCode::OutOfRange, "ranking needs at least two items");
  double log_orders = 0.0;
  for (std::size_t k = 2; k <= items; ++k) log_orders += std::log(static_cast<double>(k));
  const double comparisons = static_cast<double>(items * (items - 1) / 2);
  return pabi_ratio(log_orders, comparisons * std::log(2.0));
}

}  // namespace pabi
