#pragma once

// Reference tagger: hashed-window multinomial logistic regression, constrained
// Viterbi decoding, span evaluation, confidence-weighted bootstrapping with a
// signal prior, and the silver-system disagreement pipeline.

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pabi/constraints.hpp"
#include "pabi/core.hpp"
#include "pabi/dataset.hpp"
#include "pabi/forge.hpp"

namespace pabi {

struct TaggerConfig {
  std::size_t window = 2;
  unsigned hash_bits = 18;
  std::uint64_t hash_seed = 0;
  std::size_t epochs = 20;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  std::size_t iterations = 5;
  double prior_weight = 1.0;
};

/// Throws ConfigError on nonsensical values.
void validate(const TaggerConfig& config);

using WeightMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class TaggerModel {
 public:
  TaggerModel(LabelSet labels, std::size_t window, unsigned hash_bits, std::uint64_t hash_seed);

  const LabelSet& labels() const noexcept { return labels_; }
  std::size_t window() const noexcept { return window_; }
  unsigned hash_bits() const noexcept { return hash_bits_; }
  std::size_t hash_dim() const noexcept { return std::size_t{1} << hash_bits_; }
  std::uint64_t hash_seed() const noexcept { return hash_seed_; }
  /// Window words at every offset plus a bias.
  std::size_t features_per_token() const noexcept { return 2 * window_ + 2; }

  // hash_dim() x |labels|; the window offset is part of each feature's hash
  WeightMatrix& weights() noexcept { return weights_; }
  const WeightMatrix& weights() const noexcept { return weights_; }

  /// Feature rows for every token, features_per_token() consecutive ids each.
  void featurize(const std::vector<std::string>& tokens, std::vector<std::uint32_t>& out) const;

  std::size_t epochs_trained = 0;
  double learning_rate = 0.0;
  std::uint64_t data_fingerprint = 0;

  bool operator==(const TaggerModel& other) const;

 private:
  LabelSet labels_;
  std::size_t window_;
  unsigned hash_bits_;
  std::uint64_t hash_seed_;
  WeightMatrix weights_;
};

/// Per-token labels and loss weights over a borrowed token sequence.
struct WeightedSentence {
  const std::vector<std::string>* tokens = nullptr;
  std::vector<std::size_t> labels;
  std::vector<double> weights;
};

/// Seeded SGD on weighted cross-entropy, sentence order reshuffled every epoch.
void sgd_epochs(TaggerModel& model, const std::vector<WeightedSentence>& data, std::size_t epochs,
                double learning_rate, std::uint64_t seed);

/// `instance_weights`, when given, holds one weight per token of every sentence.
TaggerModel train(const TagDataset& gold, const TaggerConfig& config,
                  const std::vector<std::vector<double>>* instance_weights = nullptr);

/// Softmax rows, one per token.
Eigen::MatrixXd predict_proba(const TaggerModel& model, const std::vector<std::string>& tokens);

inline constexpr double kProbabilityFloor = 1e-12;

/// Maximizes sum ln score + prior_weight * sum ln prior under the rule. Entries
/// are floored at kProbabilityFloor; ties go to the lower label index. Throws
/// InfeasiblePrior when a prior row carries no mass at all.
std::vector<std::size_t> viterbi_decode(const Eigen::MatrixXd& scores, const BioScheme* rule = nullptr,
                                        const Eigen::MatrixXd* prior = nullptr, double prior_weight = 1.0);

/// Local posterior of each decoded label under score * prior^prior_weight.
std::vector<double> decode_confidence(const Eigen::MatrixXd& scores, const std::vector<std::size_t>& decoded,
                                      const Eigen::MatrixXd* prior = nullptr, double prior_weight = 1.0);

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::string type;
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

/// Maximal B-X (I-X)* runs; an I without a matching open span is ignored.
std::vector<Span> extract_spans(const std::vector<std::size_t>& labels, const BioScheme& scheme);

struct EvalReport {
  double token_accuracy = 0.0;
  double sentence_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_spans = 0;
  std::size_t predicted_spans = 0;
  std::size_t correct_spans = 0;
};

EvalReport score_predictions(const TagDataset& gold, const std::vector<std::vector<std::size_t>>& predicted);

EvalReport evaluate(const TaggerModel& model, const TagDataset& gold, const BioScheme* rule = nullptr);

/// P(gold label | incidental observation), one n x |gold labels| block per sentence.
struct PriorTable {
  std::vector<Eigen::MatrixXd> rows;
  std::optional<BioScheme> rule;
};

PriorTable uniform_prior(const TagDataset& inputs, std::size_t num_labels);

PriorTable build_prior(const TagDataset& incidental, const SignalSpec& spec, const LabelSet& gold_labels,
                       const AlignedPairs* small_gold = nullptr);

/// Algorithm body from an already trained gold model.
TaggerModel cwbpp_from(TaggerModel model, const TagDataset& gold, const TagDataset& incidental,
                       const PriorTable& prior, const TaggerConfig& config);

TaggerModel cwbpp(const TagDataset& gold, const TagDataset& incidental, const PriorTable& prior,
                  const TaggerConfig& config);

TaggerModel cwbpp(const TagDataset& gold, const TagDataset& incidental, const SignalSpec& spec,
                  const TaggerConfig& config, const AlignedPairs* small_gold = nullptr);

/// Trains a silver model on the source, measures its disagreement with source
/// labels (eta1) and with target gold (eta2), and inverts the channel.
EtaEstimate estimate_etas(const TagDataset& source_train, const TagDataset& source_heldout,
                          const TagDataset& target_gold, const TaggerConfig& config,
                          Granularity granularity = Granularity::Token);

/// Disagreement rate between a model's argmax labels and a labeled dataset,
/// compared by label name.
double disagreement(const TaggerModel& model, const TagDataset& data, Granularity granularity);

void save_model(const TaggerModel& model, std::ostream& out);
TaggerModel load_model(std::istream& in);
void save_model(const TaggerModel& model, const std::string& path);
TaggerModel load_model(const std::string& path);

}  // namespace pabi
