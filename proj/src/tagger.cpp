#include "pabi/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pabi/random.hpp"

namespace pabi {

namespace {

constexpr std::string_view kModelMagic = "pabi-tagger";
constexpr int kModelVersion = 1;

template <typename Row>
void softmax_inplace(Row&& z) {
  z.array() -= z.maxCoeff();
  z = z.array().exp().matrix();
  z /= z.sum();
}

}  // namespace

void validate(const TaggerConfig& c) {
  std::vector<std::string> bad;
  if (c.window > 16) bad.push_back("tagger.window must be at most 16");
  if (c.hash_bits < 4 || c.hash_bits > 26) bad.push_back("tagger.hash_bits must lie in [4, 26]");
  if (!(c.learning_rate > 0.0)) bad.push_back("tagger.learning_rate must be positive");
  if (!(c.prior_weight >= 0.0)) bad.push_back("tagger.prior_weight must be nonnegative");
  if (bad.empty()) return;
  std::string msg;
  for (const auto& b : bad) msg += (msg.empty() ? "" : "; ") + b;
  throw Error(ErrorCode::ConfigError, msg);
}

TaggerModel::TaggerModel(LabelSet labels, std::size_t window, unsigned hash_bits, std::uint64_t hash_seed)
    : labels_(std::move(labels)), window_(window), hash_bits_(hash_bits), hash_seed_(hash_seed) {
  weights_.setZero(static_cast<Eigen::Index>(hash_dim()), static_cast<Eigen::Index>(labels_.size()));
}

void TaggerModel::featurize(const std::vector<std::string>& tokens, std::vector<std::uint32_t>& out) const {
  const std::uint64_t mask = hash_dim() - 1;
  const auto n = static_cast<std::ptrdiff_t>(tokens.size());
  const auto w = static_cast<std::ptrdiff_t>(window_);
  out.clear();
  out.reserve(tokens.size() * features_per_token());
  const std::uint64_t bias = splitmix64(hash_seed_ ^ 0x6269617300000000ULL) & mask;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t off = -w; off <= w; ++off) {
      const std::ptrdiff_t j = i + off;
      const std::string_view word = j < 0 ? std::string_view("\x02") : j >= n ? std::string_view("\x03") : tokens[j];
      std::uint64_t h = fnv1a(word, splitmix64(hash_seed_ + static_cast<std::uint64_t>(off + 64)));
      out.push_back(static_cast<std::uint32_t>(splitmix64(h) & mask));
    }
    out.push_back(static_cast<std::uint32_t>(bias));
  }
}

bool TaggerModel::operator==(const TaggerModel& o) const {
  return labels_ == o.labels_ && window_ == o.window_ && hash_bits_ == o.hash_bits_ && hash_seed_ == o.hash_seed_ &&
         epochs_trained == o.epochs_trained && learning_rate == o.learning_rate &&
         data_fingerprint == o.data_fingerprint && weights_ == o.weights_;
}

void sgd_epochs(TaggerModel& model, const std::vector<WeightedSentence>& data, std::size_t epochs,
                double learning_rate, std::uint64_t seed) {
  const std::size_t per_token = model.features_per_token();
  const auto num_labels = static_cast<Eigen::Index>(model.labels().size());
  std::vector<std::vector<std::uint32_t>> features(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto& item = data[s];
    if (item.tokens->size() != item.labels.size() || item.labels.size() != item.weights.size())
      throw Error(ErrorCode::InvalidArgument, "training sentence " + std::to_string(s) + " is inconsistent");
    model.featurize(*item.tokens, features[s]);
  }

  WeightMatrix& W = model.weights();
  std::vector<std::size_t> order(data.size());
  Eigen::RowVectorXd z(num_labels);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, epoch));
    shuffle(order, rng);
    for (std::size_t s : order) {
      const auto& item = data[s];
      const std::uint32_t* f = features[s].data();
      for (std::size_t t = 0; t < item.labels.size(); ++t, f += per_token) {
        const double weight = item.weights[t];
        if (weight <= 0.0) continue;
        z.setZero();
        for (std::size_t k = 0; k < per_token; ++k) z += W.row(f[k]);
        softmax_inplace(z);
        z(static_cast<Eigen::Index>(item.labels[t])) -= 1.0;
        z *= learning_rate * weight;
        for (std::size_t k = 0; k < per_token; ++k) W.row(f[k]) -= z;
      }
    }
  }
  model.epochs_trained += epochs;
  model.learning_rate = learning_rate;
}

TaggerModel train(const TagDataset& gold, const TaggerConfig& config,
                  const std::vector<std::vector<double>>* instance_weights) {
  validate(config);
  if (!gold.fully_labeled()) throw Error(ErrorCode::UnknownLabelInTraining, "training data has unknown tags");
  if (instance_weights && instance_weights->size() != gold.size())
    throw Error(ErrorCode::InvalidArgument, "instance weights do not match the training sentences");
  TaggerModel model(gold.labels(), config.window, config.hash_bits, config.hash_seed);
  std::vector<WeightedSentence> data;
  data.reserve(gold.size());
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const Sentence& sent = gold[s];
    WeightedSentence item{&sent.tokens, {}, {}};
    for (const Tag& t : sent.tags) item.labels.push_back(*t);
    item.weights = instance_weights ? (*instance_weights)[s] : std::vector<double>(sent.size(), 1.0);
    data.push_back(std::move(item));
  }
  sgd_epochs(model, data, config.epochs, config.learning_rate, config.seed);
  model.data_fingerprint = gold.fingerprint();
  return model;
}

Eigen::MatrixXd predict_proba(const TaggerModel& model, const std::vector<std::string>& tokens) {
  const std::size_t per_token = model.features_per_token();
  std::vector<std::uint32_t> features;
  model.featurize(tokens, features);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(model.labels().size()));
  const WeightMatrix& W = model.weights();
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto row = out.row(static_cast<Eigen::Index>(t));
    row.setZero();
    for (std::size_t k = 0; k < per_token; ++k) row += W.row(features[t * per_token + k]);
    softmax_inplace(row);
  }
  return out;
}

namespace {

Eigen::MatrixXd local_log_scores(const Eigen::MatrixXd& scores, const Eigen::MatrixXd* prior, double prior_weight) {
  Eigen::MatrixXd ls = scores.array().max(kProbabilityFloor).log().matrix();
  if (prior) {
    if (prior->rows() != scores.rows() || prior->cols() != scores.cols())
      throw Error(ErrorCode::InvalidArgument, "prior rows are not aligned with the scores");
    for (Eigen::Index t = 0; t < prior->rows(); ++t)
      if (!(prior->row(t).maxCoeff() > 0.0))
        throw Error(ErrorCode::InfeasiblePrior, "prior row " + std::to_string(t) + " has no mass");
    ls += prior_weight * prior->array().max(kProbabilityFloor).log().matrix();
  }
  return ls;
}

}  // namespace

std::vector<std::size_t> viterbi_decode(const Eigen::MatrixXd& scores, const BioScheme* rule,
                                        const Eigen::MatrixXd* prior, double prior_weight) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index L = scores.cols();
  if (n == 0) return {};
  if (rule && static_cast<Eigen::Index>(rule->size()) != L)
    throw Error(ErrorCode::InvalidArgument, "transition rule and scores differ in label count");
  const Eigen::MatrixXd ls = local_log_scores(scores, prior, prior_weight);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  Eigen::MatrixXd delta(n, L);
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> back(n, L);
  for (Eigen::Index y = 0; y < L; ++y)
    delta(0, y) = (!rule || rule->start_allowed(static_cast<std::size_t>(y))) ? ls(0, y) : kNegInf;
  for (Eigen::Index t = 1; t < n; ++t) {
    for (Eigen::Index y = 0; y < L; ++y) {
      double best = kNegInf;
      Eigen::Index arg = 0;
      for (Eigen::Index p = 0; p < L; ++p) {
        if (rule && !rule->transition_allowed(static_cast<std::size_t>(p), static_cast<std::size_t>(y))) continue;
        if (delta(t - 1, p) > best) {
          best = delta(t - 1, p);
          arg = p;
        }
      }
      delta(t, y) = best + ls(t, y);
      back(t, y) = arg;
    }
  }
  double best = kNegInf;
  Eigen::Index arg = 0;
  for (Eigen::Index y = 0; y < L; ++y) {
    if (delta(n - 1, y) > best) {
      best = delta(n - 1, y);
      arg = y;
    }
  }
  if (best == kNegInf) throw Error(ErrorCode::InfeasiblePrior, "no label sequence satisfies the rule");
  std::vector<std::size_t> path(static_cast<std::size_t>(n));
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    path[static_cast<std::size_t>(t)] = static_cast<std::size_t>(arg);
    if (t > 0) arg = back(t, arg);
  }
  return path;
}

std::vector<double> decode_confidence(const Eigen::MatrixXd& scores, const std::vector<std::size_t>& decoded,
                                      const Eigen::MatrixXd* prior, double prior_weight) {
  const Eigen::MatrixXd ls = local_log_scores(scores, prior, prior_weight);
  std::vector<double> out(decoded.size());
  for (std::size_t t = 0; t < decoded.size(); ++t) {
    Eigen::RowVectorXd row = ls.row(static_cast<Eigen::Index>(t));
    softmax_inplace(row);
    out[t] = row(static_cast<Eigen::Index>(decoded[t]));
  }
  return out;
}

std::vector<Span> extract_spans(const std::vector<std::size_t>& labels, const BioScheme& scheme) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end = end;
      spans.push_back(*open);
      open.reset();
    }
  };
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const std::size_t y = labels[t];
    switch (scheme.kind(y)) {
      case BioKind::Begin:
        close(t);
        open = Span{t, t, scheme.type(y)};
        break;
      case BioKind::Inside:
        if (!open || open->type != scheme.type(y)) close(t);
        break;
      case BioKind::Outside:
        close(t);
        break;
    }
  }
  close(labels.size());
  return spans;
}

EvalReport score_predictions(const TagDataset& gold, const std::vector<std::vector<std::size_t>>& predicted) {
  if (!gold.fully_labeled()) throw Error(ErrorCode::InvalidArgument, "evaluation data has unknown tags");
  if (predicted.size() != gold.size()) throw Error(ErrorCode::InvalidArgument, "prediction count mismatch");
  const BioScheme scheme = BioScheme::from_labels(gold.labels());
  EvalReport r;
  std::size_t tokens = 0, correct_tokens = 0, correct_sentences = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const Sentence& sent = gold[s];
    if (predicted[s].size() != sent.size()) throw Error(ErrorCode::InvalidArgument, "prediction length mismatch");
    std::vector<std::size_t> truth;
    for (const Tag& t : sent.tags) truth.push_back(*t);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) hits += truth[t] == predicted[s][t];
    tokens += truth.size();
    correct_tokens += hits;
    correct_sentences += hits == truth.size();
    const auto g = extract_spans(truth, scheme);
    const auto p = extract_spans(predicted[s], scheme);
    r.gold_spans += g.size();
    r.predicted_spans += p.size();
    for (const Span& span : p) r.correct_spans += std::find(g.begin(), g.end(), span) != g.end();
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  r.token_accuracy = ratio(correct_tokens, tokens);
  r.sentence_accuracy = ratio(correct_sentences, gold.size());
  r.precision = ratio(r.correct_spans, r.predicted_spans);
  r.recall = ratio(r.correct_spans, r.gold_spans);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

EvalReport evaluate(const TaggerModel& model, const TagDataset& gold, const BioScheme* rule) {
  if (!(model.labels() == gold.labels())) throw Error(ErrorCode::InvalidArgument, "model and data label sets differ");
  std::vector<std::vector<std::size_t>> predicted;
  predicted.reserve(gold.size());
  for (const auto& sent : gold.sentences()) predicted.push_back(viterbi_decode(predict_proba(model, sent.tokens), rule));
  return score_predictions(gold, predicted);
}

PriorTable uniform_prior(const TagDataset& inputs, std::size_t num_labels) {
  PriorTable table;
  const double u = 1.0 / static_cast<double>(num_labels);
  for (const auto& sent : inputs.sentences())
    table.rows.push_back(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(sent.size()),
                                                   static_cast<Eigen::Index>(num_labels), u));
  return table;
}

PriorTable build_prior(const TagDataset& incidental, const SignalSpec& spec, const LabelSet& gold_labels,
                       const AlignedPairs* small_gold) {
  const std::size_t L = gold_labels.size();
  const auto Li = static_cast<Eigen::Index>(L);
  const double uniform = 1.0 / static_cast<double>(L);

  // incidental label index -> prior row over gold labels
  Eigen::MatrixXd channel;
  const LabelSet& inc = incidental.labels();
  auto one_hot_channel = [&] {
    channel.setZero(static_cast<Eigen::Index>(inc.size()), Li);
    for (std::size_t i = 0; i < inc.size(); ++i) channel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(gold_labels.index(inc[i]))) = 1.0;
  };

  PriorTable table;
  switch (spec.family) {
    case SignalFamily::Partial:
    case SignalFamily::CrossSentence:
    case SignalFamily::CrossDomain:
      one_hot_channel();
      break;
    case SignalFamily::PartialBio:
      one_hot_channel();
      table.rule = BioScheme::from_labels(gold_labels);
      break;
    case SignalFamily::BioConstraint:
      channel.setConstant(static_cast<Eigen::Index>(inc.size()), Li, uniform);
      table.rule = BioScheme::from_labels(gold_labels);
      break;
    case SignalFamily::Noisy:
    case SignalFamily::Mixed: {
      const double eta = spec.param("eta_n");
      const double off = L > 1 ? eta / static_cast<double>(L - 1) : 0.0;
      one_hot_channel();
      channel = channel * (1.0 - eta) + (Eigen::MatrixXd::Ones(channel.rows(), Li) - channel) * off;
      break;
    }
    case SignalFamily::AuxiliaryDetection:
    case SignalFamily::AuxiliaryCoarse:
    case SignalFamily::AuxiliaryJoint: {
      if (!small_gold) throw Error(ErrorCode::MissingAlignment, "auxiliary prior needs aligned small gold data");
      channel.setZero(static_cast<Eigen::Index>(inc.size()), Li);
      for (const auto& [g, a] : small_gold->pairs) {
        if (!g || !a) continue;
        const auto row = inc.find(small_gold->incidental_labels[*a]);
        const auto col = gold_labels.find(small_gold->gold_labels[*g]);
        if (row && col) channel(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(*col)) += 1.0;
      }
      for (Eigen::Index r = 0; r < channel.rows(); ++r) {
        const double total = channel.row(r).sum();
        if (total > 0.0) channel.row(r) /= total;
        else channel.row(r).setConstant(uniform);
      }
      break;
    }
  }

  for (const auto& sent : incidental.sentences()) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(sent.size()), Li);
    for (std::size_t t = 0; t < sent.size(); ++t) {
      if (sent.tags[t]) rows.row(static_cast<Eigen::Index>(t)) = channel.row(static_cast<Eigen::Index>(*sent.tags[t]));
      else rows.row(static_cast<Eigen::Index>(t)).setConstant(uniform);
    }
    table.rows.push_back(std::move(rows));
  }
  return table;
}

TaggerModel cwbpp_from(TaggerModel model, const TagDataset& gold, const TagDataset& incidental,
                       const PriorTable& prior, const TaggerConfig& config) {
  validate(config);
  if (!gold.fully_labeled()) throw Error(ErrorCode::UnknownLabelInTraining, "gold data has unknown tags");
  if (prior.rows.size() != incidental.size())
    throw Error(ErrorCode::InvalidArgument, "prior table does not cover the incidental data");
  const BioScheme* rule = prior.rule ? &*prior.rule : nullptr;

  std::vector<WeightedSentence> data;
  data.reserve(gold.size() + incidental.size());
  for (const auto& sent : gold.sentences()) {
    WeightedSentence item{&sent.tokens, {}, std::vector<double>(sent.size(), 1.0)};
    for (const Tag& t : sent.tags) item.labels.push_back(*t);
    data.push_back(std::move(item));
  }
  for (const auto& sent : incidental.sentences()) data.push_back(WeightedSentence{&sent.tokens, {}, {}});

  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (std::size_t s = 0; s < incidental.size(); ++s) {
      const Eigen::MatrixXd scores = predict_proba(model, incidental[s].tokens);
      const Eigen::MatrixXd* p = &prior.rows[s];
      WeightedSentence& item = data[gold.size() + s];
      item.labels = viterbi_decode(scores, rule, p, config.prior_weight);
      item.weights = decode_confidence(scores, item.labels, p, config.prior_weight);
    }
    sgd_epochs(model, data, 1, config.learning_rate, mix_seed(mix_seed(config.seed, 0xb007), it));
  }
  return model;
}

TaggerModel cwbpp(const TagDataset& gold, const TagDataset& incidental, const PriorTable& prior,
                  const TaggerConfig& config) {
  return cwbpp_from(train(gold, config), gold, incidental, prior, config);
}

TaggerModel cwbpp(const TagDataset& gold, const TagDataset& incidental, const SignalSpec& spec,
                  const TaggerConfig& config, const AlignedPairs* small_gold) {
  return cwbpp(gold, incidental, build_prior(incidental, spec, gold.labels(), small_gold), config);
}

double disagreement(const TaggerModel& model, const TagDataset& data, Granularity granularity) {
  if (!data.fully_labeled()) throw Error(ErrorCode::InvalidArgument, "disagreement needs fully labeled data");
  std::size_t units = 0, differ = 0;
  for (const auto& sent : data.sentences()) {
    const auto decoded = viterbi_decode(predict_proba(model, sent.tokens));
    std::size_t wrong = 0;
    for (std::size_t t = 0; t < sent.size(); ++t)
      wrong += model.labels()[decoded[t]] != data.labels()[*sent.tags[t]];
    if (granularity == Granularity::Token) {
      units += sent.size();
      differ += wrong;
    } else {
      units += 1;
      differ += wrong > 0;
    }
  }
  if (units == 0) throw Error(ErrorCode::EmptyInput, "no tokens to compare");
  return static_cast<double>(differ) / static_cast<double>(units);
}

EtaEstimate estimate_etas(const TagDataset& source_train, const TagDataset& source_heldout,
                          const TagDataset& target_gold, const TaggerConfig& config, Granularity granularity) {
  const TaggerModel silver = train(source_train, config);
  const double eta1 = disagreement(silver, source_heldout, granularity);
  const double eta2 = disagreement(silver, target_gold, granularity);
  EtaEstimate est = eta_from_silver(eta1, eta2, target_gold.labels().size());
  est.granularity = granularity;
  return est;
}

void save_model(const TaggerModel& model, std::ostream& out) {
  char buf[64];
  auto hex = [&](double x) {
    std::snprintf(buf, sizeof buf, "%a", x);
    return std::string(buf);
  };
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "labels " << model.labels().size() << '\n';
  for (const auto& name : model.labels().names()) out << name << '\n';
  out << "window " << model.window() << '\n';
  out << "hash_bits " << model.hash_bits() << '\n';
  out << "hash_seed " << model.hash_seed() << '\n';
  out << "epochs " << model.epochs_trained << '\n';
  out << "learning_rate " << hex(model.learning_rate) << '\n';
  out << "fingerprint " << model.data_fingerprint << '\n';
  const WeightMatrix& W = model.weights();
  std::size_t nonzero = 0;
  for (Eigen::Index r = 0; r < W.rows(); ++r) nonzero += !W.row(r).isZero(0.0);
  out << "rows " << nonzero << '\n';
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    if (W.row(r).isZero(0.0)) continue;
    out << r;
    for (Eigen::Index c = 0; c < W.cols(); ++c) out << ' ' << hex(W(r, c));
    out << '\n';
  }
  out << "end\n";
  if (!out) throw Error(ErrorCode::IoError, "failed writing model");
}

TaggerModel load_model(std::istream& in) {
  auto fail = [](const std::string& what) { return Error(ErrorCode::ParseError, "model file: " + what); };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw fail(std::string("expected '") + key + "'");
  };
  auto read_double = [&] {
    std::string s;
    if (!(in >> s)) throw fail("truncated number");
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw fail("bad number '" + s + "'");
    return x;
  };

  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic) throw fail("not a tagger model");
  if (version != kModelVersion) throw fail("unsupported version " + std::to_string(version));
  expect("labels");
  std::size_t num_labels = 0;
  in >> num_labels;
  std::vector<std::string> names(num_labels);
  for (auto& n : names) in >> n;
  std::size_t window = 0, epochs = 0, rows = 0;
  unsigned bits = 0;
  std::uint64_t hash_seed = 0, fingerprint = 0;
  expect("window");
  in >> window;
  expect("hash_bits");
  in >> bits;
  expect("hash_seed");
  in >> hash_seed;
  expect("epochs");
  in >> epochs;
  expect("learning_rate");
  const double lr = read_double();
  expect("fingerprint");
  in >> fingerprint;
  expect("rows");
  in >> rows;
  if (!in || bits < 1 || bits > 30) throw fail("bad header");

  TaggerModel model(LabelSet(std::move(names)), window, bits, hash_seed);
  model.epochs_trained = epochs;
  model.learning_rate = lr;
  model.data_fingerprint = fingerprint;
  WeightMatrix& W = model.weights();
  for (std::size_t i = 0; i < rows; ++i) {
    Eigen::Index r = -1;
    if (!(in >> r) || r < 0 || r >= W.rows()) throw fail("bad row index");
    for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = read_double();
  }
  expect("end");
  return model;
}

void save_model(const TaggerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  save_model(model, out);
}

TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace pabi
