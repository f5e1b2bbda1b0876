#pragma once

// Informativeness measure for incidental supervision signals.
//
// A signal shrinks the uncertainty over the concept class from `full` nats
// (uniform prior, ln|H|) to `reduced` nats (entropy of the signal-informed
// prior, or ln of the reduced class). The score is sqrt(1 - reduced / full).
// Every quantity here is carried in nats; class sizes are never materialised.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pabi/error.hpp"

namespace pabi {

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& names() const noexcept { return labels_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws UnmappedLabel when `name` is not in the set.
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  bool operator==(const LabelSet& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PabiScore {
  double value = 0.0;
  double reduced_nats = 0.0;
  double full_nats = 1.0;
  bool clamped = false;
};

using Distribution = Eigen::VectorXd;

enum class Granularity { Token, Sentence };

struct EtaEstimate {
  double eta = 0.0;      // clamped to [0, (L-1)/L]
  double eta_raw = 0.0;  // before clamping
  double eta1 = 0.0;
  double eta2 = 0.0;
  Granularity granularity = Granularity::Token;
};

namespace detail {

template <typename Scalar>
constexpr Scalar sum_tolerance() {
  return std::numeric_limits<Scalar>::digits >= 53 ? Scalar(1e-9) : Scalar(1e-5);
}

template <typename Scalar>
inline Scalar xlogx(Scalar p) {
  return p > Scalar(0) ? p * std::log(p) : Scalar(0);
}

}  // namespace detail

template <typename Derived>
void check_distribution(const Eigen::MatrixBase<Derived>& d) {
  using Scalar = typename Derived::Scalar;
  if (d.size() == 0) throw Error(ErrorCode::InvalidDistribution, "empty distribution");
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Scalar p = d.derived().coeff(i);
    if (!(p >= Scalar(0) && p <= Scalar(1)))
      throw Error(ErrorCode::InvalidDistribution, "entry " + std::to_string(i) + " outside [0,1]");
  }
  if (std::abs(d.sum() - Scalar(1)) > detail::sum_tolerance<Scalar>())
    throw Error(ErrorCode::InvalidDistribution, "entries do not sum to 1");
}

/// Shannon entropy in nats, with 0 ln 0 := 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& d) {
  using Scalar = typename Derived::Scalar;
  check_distribution(d);
  Scalar h(0);
  for (Eigen::Index i = 0; i < d.size(); ++i) h -= detail::xlogx(d.derived().coeff(i));
  return h < Scalar(0) ? Scalar(0) : h;
}

/// KL(p || q) in nats. Terms with p_i = 0 contribute nothing.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  if (p.size() != q.size())
    throw Error(ErrorCode::InvalidDistribution, "KL arguments differ in length");
  check_distribution(p);
  check_distribution(q);
  Scalar kl(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p.derived().coeff(i);
    if (pi <= Scalar(0)) continue;
    const Scalar qi = q.derived().coeff(i);
    if (qi <= Scalar(0))
      throw Error(ErrorCode::SupportMismatch, "p has mass at " + std::to_string(i) + " where q is zero");
    kl += pi * std::log(pi / qi);
  }
  return kl < Scalar(0) ? Scalar(0) : kl;
}

PabiScore pabi_ratio(double reduced_nats, double full_nats);

PabiScore pabi_partial(double eta_p);

/// Per-token entropy of the symmetric noise channel:
/// eta ln(L-1) - eta ln eta - (1-eta) ln(1-eta).
double noisy_channel_entropy(double eta_n, std::size_t num_labels);

PabiScore pabi_noisy(double eta_n, std::size_t num_labels);
inline PabiScore pabi_noisy(double eta_n, const LabelSet& labels) { return pabi_noisy(eta_n, labels.size()); }

PabiScore pabi_mixed_partial_noisy(double eta_p, double eta_n, std::size_t num_labels);
inline PabiScore pabi_mixed_partial_noisy(double eta_p, double eta_n, const LabelSet& labels) {
  return pabi_mixed_partial_noisy(eta_p, eta_n, labels.size());
}

inline constexpr double kDefaultSingularTolerance = 1e-9;

/// Recovers the concept disagreement rate from the silver-vs-source (eta1)
/// and silver-vs-gold (eta2) disagreement rates.
EtaEstimate eta_from_silver(double eta1, double eta2, std::size_t num_labels,
                            double tolerance = kDefaultSingularTolerance);

/// Forward channel: the eta2 implied by (eta, eta1) when the silver system is a
/// symmetric-noise copy of the source concept.
double silver_gold_disagreement(double eta, double eta1, std::size_t num_labels);

PabiScore pabi_cross_domain(double eta1, double eta2, std::size_t num_labels,
                            double tolerance = kDefaultSingularTolerance);

PabiScore pabi_size_adjusted(const PabiScore& base, double m_tilde, double m_cap);

/// Entropy-normalised mutual information between gold (rows) and auxiliary
/// (columns) labels, estimated from joint counts.
template <typename Derived>
PabiScore pabi_auxiliary_mi(const Eigen::MatrixBase<Derived>& joint_counts) {
  using Scalar = typename Derived::Scalar;
  if ((joint_counts.array() < Scalar(0)).any())
    throw Error(ErrorCode::InvalidArgument, "joint counts must be nonnegative");
  const double total = static_cast<double>(joint_counts.sum());
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateMarginal, "joint counts are all zero");

  const Eigen::MatrixXd joint = joint_counts.template cast<double>() / total;
  const Eigen::VectorXd gold = joint.rowwise().sum();
  const Eigen::VectorXd aux = joint.colwise().sum().transpose();

  double h_gold = 0.0;
  for (Eigen::Index i = 0; i < gold.size(); ++i) h_gold -= detail::xlogx(gold(i));
  if (!(h_gold > 0.0)) throw Error(ErrorCode::DegenerateMarginal, "gold labels have zero entropy");

  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i)
    for (Eigen::Index j = 0; j < joint.cols(); ++j) {
      const double pij = joint(i, j);
      if (pij > 0.0) mi += pij * std::log(pij / (gold(i) * aux(j)));
    }
  mi = std::clamp(mi, 0.0, h_gold);
  return pabi_ratio(h_gold - mi, h_gold);
}

/// Labels partitioned into groups of the given sizes; only the group of each
/// token is observed. group_probs[g] is the share of tokens in group g.
PabiScore pabi_coarsening(const std::vector<std::size_t>& group_sizes, const Distribution& group_probs,
                          std::size_t total_labels);

}  // namespace pabi
