#include "pabi/core.hpp"

#include <algorithm>
#include <numeric>

namespace pabi {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::NonPositiveBaseline: return "NonPositiveBaseline";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::DegenerateMarginal: return "DegenerateMarginal";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::InfeasibleMask: return "InfeasibleMask";
    case ErrorCode::UnmappedLabel: return "UnmappedLabel";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownLabelInTraining: return "UnknownLabelInTraining";
    case ErrorCode::InfeasiblePrior: return "InfeasiblePrior";
    case ErrorCode::MissingAlignment: return "MissingAlignment";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a label set needs at least two labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate label '" + labels_[i] + "'");
  }
}

std::optional<std::size_t> LabelSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSet::index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::UnmappedLabel, "label '" + std::string(name) + "' not in label set");
}

namespace {

void require_rate(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0))
    throw Error(ErrorCode::OutOfRange, std::string(name) + " must lie in [0,1], got " + std::to_string(x));
}

void require_labels(std::size_t num_labels) {
  if (num_labels < 2) throw Error(ErrorCode::OutOfRange, "label set must have at least two labels");
}

// Rebuild reduced/full from a value so the ratio invariant holds exactly.
PabiScore from_value(double value, double full) {
  PabiScore s;
  s.value = value;
  s.full_nats = full;
  s.reduced_nats = full * (1.0 - value * value);
  return s;
}

}  // namespace

PabiScore pabi_ratio(double reduced_nats, double full_nats) {
  if (!(full_nats > 0.0)) throw Error(ErrorCode::NonPositiveBaseline, "full uncertainty must be positive");
  if (!(reduced_nats >= 0.0)) throw Error(ErrorCode::OutOfRange, "reduced uncertainty must be nonnegative");
  PabiScore s;
  s.reduced_nats = reduced_nats;
  s.full_nats = full_nats;
  if (reduced_nats > full_nats) {
    s.value = 0.0;
    s.clamped = true;
  } else {
    s.value = std::sqrt(std::max(0.0, 1.0 - reduced_nats / full_nats));
  }
  return s;
}

PabiScore pabi_partial(double eta_p) {
  require_rate(eta_p, "eta_p");
  return pabi_ratio(eta_p, 1.0);
}

double noisy_channel_entropy(double eta_n, std::size_t num_labels) {
  require_rate(eta_n, "eta_n");
  require_labels(num_labels);
  const double wrong = eta_n > 0.0 ? eta_n * std::log(static_cast<double>(num_labels - 1)) : 0.0;
  return wrong - detail::xlogx(eta_n) - detail::xlogx(1.0 - eta_n);
}

PabiScore pabi_noisy(double eta_n, std::size_t num_labels) {
  require_rate(eta_n, "eta_n");
  require_labels(num_labels);
  // ln|L| - H as a divergence from uniform, expanded around the uniform rate
  // so that it vanishes exactly there instead of by cancellation.
  const double l = static_cast<double>(num_labels);
  const double delta = eta_n - (l - 1.0) / l;
  double gap = 0.0;
  if (eta_n < 1.0) gap += (1.0 - eta_n) * std::log1p(-l * delta);
  if (eta_n > 0.0) gap += eta_n * std::log1p(l * delta / (l - 1.0));
  gap = std::max(0.0, gap);
  const double full = std::log(l);
  PabiScore s;
  s.value = std::sqrt(gap / full);
  s.full_nats = full;
  s.reduced_nats = full - gap;
  return s;
}

PabiScore pabi_mixed_partial_noisy(double eta_p, double eta_n, std::size_t num_labels) {
  require_rate(eta_p, "eta_p");
  const PabiScore noisy = pabi_noisy(eta_n, num_labels);
  // Unknown tokens keep the full ln|L|; observed ones the channel entropy.
  // The value is then exactly sqrt(1-eta_p) * noisy.value.
  const double value = std::sqrt(1.0 - eta_p) * noisy.value;
  return from_value(value, noisy.full_nats);
}

EtaEstimate eta_from_silver(double eta1, double eta2, std::size_t num_labels, double tolerance) {
  require_rate(eta1, "eta1");
  require_rate(eta2, "eta2");
  require_labels(num_labels);
  const double l = static_cast<double>(num_labels);
  const double denom = 1.0 - l * (1.0 - eta1);
  if (std::abs(denom) <= tolerance)
    throw Error(ErrorCode::SingularDenominator,
                "eta1 = " + std::to_string(eta1) + " is at the singular point (L-1)/L");
  EtaEstimate est;
  est.eta1 = eta1;
  est.eta2 = eta2;
  est.eta_raw = (l - 1.0) * (eta1 - eta2) / denom;
  est.eta = std::clamp(est.eta_raw, 0.0, (l - 1.0) / l);
  return est;
}

double silver_gold_disagreement(double eta, double eta1, std::size_t num_labels) {
  require_rate(eta, "eta");
  require_rate(eta1, "eta1");
  require_labels(num_labels);
  const double l = static_cast<double>(num_labels);
  const double agree = (1.0 - eta) * (1.0 - eta1) + eta * eta1 / (l - 1.0);
  return 1.0 - agree;
}

PabiScore pabi_cross_domain(double eta1, double eta2, std::size_t num_labels, double tolerance) {
  const EtaEstimate est = eta_from_silver(eta1, eta2, num_labels, tolerance);
  return pabi_noisy(est.eta, num_labels);
}

PabiScore pabi_size_adjusted(const PabiScore& base, double m_tilde, double m_cap) {
  if (!(m_tilde > 0.0 && m_tilde <= m_cap))
    throw Error(ErrorCode::OutOfRange, "size adjustment needs 0 < m_tilde <= m_cap");
  const double value = std::sqrt(base.value * base.value * (m_tilde / m_cap));
  return from_value(value, base.full_nats);
}

PabiScore pabi_coarsening(const std::vector<std::size_t>& group_sizes, const Distribution& group_probs,
                          std::size_t total_labels) {
  if (group_sizes.empty() || static_cast<Eigen::Index>(group_sizes.size()) != group_probs.size())
    throw Error(ErrorCode::PartitionMismatch, "group sizes and group probabilities differ in length");
  const std::size_t covered = std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
  if (covered != total_labels || std::find(group_sizes.begin(), group_sizes.end(), 0) != group_sizes.end())
    throw Error(ErrorCode::PartitionMismatch, "group sizes do not partition the label set");
  require_labels(total_labels);
  check_distribution(group_probs);
  double reduced = 0.0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g)
    reduced += group_probs(static_cast<Eigen::Index>(g)) * std::log(static_cast<double>(group_sizes[g]));
  return pabi_ratio(reduced, std::log(static_cast<double>(total_labels)));
}

}  // namespace pabi
