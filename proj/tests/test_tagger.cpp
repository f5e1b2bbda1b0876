#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "pabi/synthetic.hpp"
#include "pabi/tagger.hpp"
#include "test_util.hpp"

using namespace pabi;
using doctest::Approx;
using testutil::expect_error;
using testutil::make_dataset;

namespace {

TaggerConfig small_config() {
  TaggerConfig c;
  c.hash_bits = 14;
  c.epochs = 5;
  c.iterations = 2;
  return c;
}

SyntheticCorpus small_corpus(std::size_t gold, std::size_t incidental, std::size_t test, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.gold_sentences = gold;
  cfg.incidental_sentences = incidental;
  cfg.test_sentences = test;
  cfg.seed = seed;
  return generate_corpus(cfg);
}

// Two-state sticky chain; each state emits from its own 20 words with
// probability 0.9 and from the other state's words otherwise.
struct Hmm {
  static constexpr double kStay = 0.8;
  static constexpr double kOwn = 0.9;
  static constexpr int kWords = 20;

  static std::string word(int vocab, int i) { return (vocab ? "v" : "u") + std::to_string(i); }

  static double emission(int state, const std::string& w) {
    const int vocab = w[0] == 'v';
    return (vocab == state ? kOwn : 1.0 - kOwn) / kWords;
  }

  static TagDataset sample(int sentences, int length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const LabelSet labels({"A", "B"});
    std::vector<Sentence> out;
    for (int s = 0; s < sentences; ++s) {
      Sentence sent;
      int state = u(rng) < 0.5;
      for (int t = 0; t < length; ++t) {
        if (t > 0 && u(rng) >= kStay) state = 1 - state;
        const int vocab = u(rng) < kOwn ? state : 1 - state;
        sent.tokens.push_back(word(vocab, static_cast<int>(rng() % kWords)));
        sent.tags.push_back(static_cast<std::size_t>(state));
      }
      out.push_back(std::move(sent));
    }
    return TagDataset(std::move(out), labels);
  }

  // Token accuracy of forward-backward posterior decoding.
  static double bayes_accuracy(const TagDataset& data) {
    std::size_t hits = 0, total = 0;
    for (const auto& sent : data.sentences()) {
      const std::size_t n = sent.size();
      std::vector<std::array<double, 2>> fwd(n), bwd(n);
      for (int y = 0; y < 2; ++y) fwd[0][y] = 0.5 * emission(y, sent.tokens[0]);
      for (std::size_t t = 1; t < n; ++t) {
        for (int y = 0; y < 2; ++y)
          fwd[t][y] = (fwd[t - 1][y] * kStay + fwd[t - 1][1 - y] * (1 - kStay)) * emission(y, sent.tokens[t]);
        const double z = fwd[t][0] + fwd[t][1];
        fwd[t][0] /= z;
        fwd[t][1] /= z;
      }
      bwd[n - 1] = {1.0, 1.0};
      for (std::size_t t = n - 1; t-- > 0;) {
        for (int y = 0; y < 2; ++y) {
          bwd[t][y] = 0.0;
          for (int z = 0; z < 2; ++z)
            bwd[t][y] += (z == y ? kStay : 1 - kStay) * emission(z, sent.tokens[t + 1]) * bwd[t + 1][z];
        }
        const double z = bwd[t][0] + bwd[t][1];
        bwd[t][0] /= z;
        bwd[t][1] /= z;
      }
      for (std::size_t t = 0; t < n; ++t) {
        const int pred = fwd[t][1] * bwd[t][1] > fwd[t][0] * bwd[t][0];
        hits += static_cast<std::size_t>(pred) == *sent.tags[t];
        ++total;
      }
    }
    return static_cast<double>(hits) / total;
  }
};

double path_score(const Eigen::MatrixXd& scores, const Eigen::MatrixXd* prior, double w,
                  const std::vector<std::size_t>& path) {
  double s = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += std::log(std::max(scores(t, path[t]), kProbabilityFloor));
    if (prior) s += w * std::log(std::max((*prior)(t, path[t]), kProbabilityFloor));
  }
  return s;
}

// All paths in lexicographic order; the first strict maximum wins.
std::vector<std::size_t> brute_decode(const Eigen::MatrixXd& scores, const BioScheme* rule, const Eigen::MatrixXd* prior,
                                      double w) {
  const std::size_t n = scores.rows(), L = scores.cols();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= L;
  std::vector<std::size_t> best;
  double best_score = -INFINITY;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<std::size_t> path(n);
    std::size_t c = code;
    for (std::size_t t = n; t-- > 0;) {
      path[t] = c % L;
      c /= L;
    }
    bool ok = true;
    if (rule) {
      ok = rule->start_allowed(path[0]);
      for (std::size_t t = 1; t < n && ok; ++t) ok = rule->transition_allowed(path[t - 1], path[t]);
    }
    if (!ok) continue;
    const double s = path_score(scores, prior, w, path);
    if (s > best_score + 1e-12) {
      best_score = s;
      best = path;
    }
  }
  return best;
}

// Span F1 by matching (begin, end, type) triples read straight off the names.
std::vector<std::tuple<std::size_t, std::size_t, std::string>> name_spans(const std::vector<std::string>& tags) {
  std::vector<std::tuple<std::size_t, std::size_t, std::string>> out;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    if (tags[t][0] != 'B') continue;
    const std::string type = tags[t].substr(1);
    std::size_t e = t + 1;
    while (e < tags.size() && tags[e] == "I" + type) ++e;
    out.emplace_back(t, e, type);
  }
  return out;
}

}  // namespace

TEST_SUITE("tagger") {

TEST_CASE("config validation") {
  TaggerConfig c;
  validate(c);
  c.hash_bits = 2;
  c.learning_rate = 0.0;
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("hash_bits") != std::string::npos);
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
}

TEST_CASE("features") {
  TaggerModel m(LabelSet({"A", "B"}), 2, 18, 0);
  CHECK(m.features_per_token() == 6);
  CHECK(m.weights().rows() == (1 << 18));
  CHECK(m.weights().cols() == 2);
  std::vector<std::uint32_t> f1, f2;
  m.featurize({"x", "x", "x"}, f1);
  m.featurize({"x", "x", "x"}, f2);
  CHECK(f1.size() == 18);
  CHECK(f1 == f2);
  // same word at different offsets lands in different rows
  CHECK(f1[6 + 1] != f1[6 + 2]);
  CHECK(f1[6 + 2] != f1[6 + 3]);
  // bias feature is shared by every token
  CHECK(f1[5] == f1[11]);
  TaggerModel other(LabelSet({"A", "B"}), 2, 18, 1);
  std::vector<std::uint32_t> f3;
  other.featurize({"x", "x", "x"}, f3);
  CHECK(f3 != f1);
}

TEST_CASE("viterbi matches brute force") {
  const BioScheme rule = BioScheme::with_types(1);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd scores(3, 3), prior(3, 3);
    for (int i = 0; i < 9; ++i) {
      scores(i / 3, i % 3) = u(rng);
      prior(i / 3, i % 3) = trial % 4 == 0 && i % 4 == 0 ? 0.0 : u(rng);
    }
    const double w = trial % 3 == 0 ? 0.0 : 0.5 + u(rng);
    CHECK(viterbi_decode(scores, nullptr) == brute_decode(scores, nullptr, nullptr, 1.0));
    CHECK(viterbi_decode(scores, &rule) == brute_decode(scores, &rule, nullptr, 1.0));
    CHECK(viterbi_decode(scores, &rule, &prior, w) == brute_decode(scores, &rule, &prior, w));
  }
}

TEST_CASE("viterbi details") {
  const BioScheme rule = BioScheme::with_types(1);  // B I O
  // unconstrained argmax would start with I
  Eigen::MatrixXd s(2, 3);
  s << 0.1, 0.8, 0.1, 0.1, 0.8, 0.1;
  CHECK(viterbi_decode(s) == std::vector<std::size_t>{1, 1});
  CHECK(viterbi_decode(s, &rule) == std::vector<std::size_t>{0, 1});

  // ties go to the lower index
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3);
  CHECK(viterbi_decode(flat) == std::vector<std::size_t>{0, 0, 0});

  // a one-hot prior overrides the scores
  Eigen::MatrixXd prior = Eigen::MatrixXd::Zero(2, 3);
  prior(0, 2) = prior(1, 2) = 1.0;
  CHECK(viterbi_decode(s, &rule, &prior) == std::vector<std::size_t>{2, 2});
  // prior weight 0 ignores it
  CHECK(viterbi_decode(s, &rule, &prior, 0.0) == std::vector<std::size_t>{0, 1});

  Eigen::MatrixXd dead = Eigen::MatrixXd::Constant(2, 3, 1.0 / 3);
  dead.row(1).setZero();
  expect_error(ErrorCode::InfeasiblePrior, [&] { viterbi_decode(s, &rule, &dead); });
  const Eigen::MatrixXd wrong = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3);
  expect_error(ErrorCode::InvalidArgument, [&] { viterbi_decode(s, &rule, &wrong); });
  CHECK(viterbi_decode(Eigen::MatrixXd(0, 3)).empty());
}

TEST_CASE("decode confidence") {
  Eigen::MatrixXd s(2, 3);
  s << 0.2, 0.5, 0.3, 0.6, 0.3, 0.1;
  const auto c = decode_confidence(s, {1, 0});
  CHECK(c[0] == Approx(0.5));
  CHECK(c[1] == Approx(0.6));
  Eigen::MatrixXd prior(2, 3);
  prior << 0.0, 1.0, 0.0, 0.5, 0.5, 0.0;
  const auto cp = decode_confidence(s, {1, 0}, &prior);
  CHECK(cp[0] == Approx(1.0).epsilon(1e-9));
  CHECK(cp[1] == Approx(0.3 / (0.3 + 0.15)).epsilon(1e-9));
}

TEST_CASE("span extraction") {
  const BioScheme scheme({"PER", "LOC"});
  auto idx = [&](std::initializer_list<const char*> names) {
    std::vector<std::size_t> out;
    for (const char* n : names) out.push_back(scheme.labels().index(n));
    return out;
  };
  CHECK(extract_spans(idx({"B-PER", "I-PER", "O", "B-LOC"}), scheme) ==
        std::vector<Span>{{0, 2, "PER"}, {3, 4, "LOC"}});
  CHECK(extract_spans(idx({"B-PER", "B-PER"}), scheme) == std::vector<Span>{{0, 1, "PER"}, {1, 2, "PER"}});
  // stray and mismatched I labels are ignored
  CHECK(extract_spans(idx({"I-PER", "O", "B-PER", "I-LOC", "I-LOC"}), scheme) == std::vector<Span>{{2, 3, "PER"}});
  CHECK(extract_spans({}, scheme).empty());
}

TEST_CASE("span scoring matches a brute matcher") {
  const BioScheme scheme({"PER", "LOC"});
  const LabelSet& labels = scheme.labels();
  std::mt19937_64 rng(5);
  std::vector<Sentence> sents;
  std::vector<std::vector<std::size_t>> predicted;
  std::size_t g_total = 0, p_total = 0, hit = 0;
  for (int s = 0; s < 300; ++s) {
    const std::size_t n = 1 + rng() % 8;
    Sentence sent;
    std::vector<std::size_t> pred;
    std::vector<std::string> gn, pn;
    for (std::size_t t = 0; t < n; ++t) {
      // gold is well formed, predictions are arbitrary
      std::size_t g = rng() % labels.size();
      if (labels[g][0] == 'I' && (t == 0 || gn.back() == "O" || gn.back().substr(1) != labels[g].substr(1)))
        g = labels.index("O");
      const std::size_t p = rng() % 3 == 0 ? rng() % labels.size() : g;
      sent.tokens.push_back("w");
      sent.tags.push_back(g);
      pred.push_back(p);
      gn.push_back(labels[g]);
      pn.push_back(labels[p]);
    }
    const auto gs = name_spans(gn), ps = name_spans(pn);
    g_total += gs.size();
    p_total += ps.size();
    for (const auto& x : ps) hit += std::find(gs.begin(), gs.end(), x) != gs.end();
    sents.push_back(std::move(sent));
    predicted.push_back(std::move(pred));
  }
  const EvalReport r = score_predictions(TagDataset(sents, labels), predicted);
  CHECK(r.gold_spans == g_total);
  CHECK(r.predicted_spans == p_total);
  CHECK(r.correct_spans == hit);
  const double prec = static_cast<double>(hit) / p_total, rec = static_cast<double>(hit) / g_total;
  CHECK(r.f1 == Approx(2 * prec * rec / (prec + rec)).epsilon(1e-12));
}

TEST_CASE("perfect predictions score 1") {
  const SyntheticCorpus c = small_corpus(20, 1, 1, 3);
  std::vector<std::vector<std::size_t>> truth;
  for (const auto& s : c.gold.sentences()) {
    truth.emplace_back();
    for (const auto& t : s.tags) truth.back().push_back(*t);
  }
  const EvalReport r = score_predictions(c.gold, truth);
  CHECK(r.f1 == 1.0);
  CHECK(r.token_accuracy == 1.0);
  CHECK(r.sentence_accuracy == 1.0);
}

TEST_CASE("training") {
  const SyntheticCorpus c = small_corpus(150, 1, 300, 4);
  TaggerConfig cfg = small_config();
  cfg.epochs = 20;
  const TaggerModel a = train(c.gold, cfg);
  CHECK(a == train(c.gold, cfg));
  TaggerConfig other = cfg;
  other.seed = 1;
  CHECK_FALSE(a == train(c.gold, other));
  CHECK(a.epochs_trained == cfg.epochs);
  CHECK(a.data_fingerprint == c.gold.fingerprint());

  const BioScheme rule = BioScheme::from_labels(c.gold.labels());
  const EvalReport train_eval = evaluate(a, c.gold, &rule);
  const EvalReport test_eval = evaluate(a, c.test, &rule);
  CHECK(train_eval.f1 > 0.9);
  CHECK(test_eval.f1 > 0.2);
  CHECK(test_eval.f1 < train_eval.f1);

  // zero weights leave the model untouched
  std::vector<std::vector<double>> zeros;
  for (const auto& s : c.gold.sentences()) zeros.emplace_back(s.size(), 0.0);
  CHECK(train(c.gold, cfg, &zeros).weights().isZero(0.0));

  expect_error(ErrorCode::UnknownLabelInTraining, [&] { train(corrupt(c.gold, 0.1, 0.0, 1), cfg); });
}

TEST_CASE("probabilities are normalized") {
  const SyntheticCorpus c = small_corpus(50, 1, 5, 8);
  const TaggerModel m = train(c.gold, small_config());
  for (const auto& s : c.test.sentences()) {
    const Eigen::MatrixXd p = predict_proba(m, s.tokens);
    CHECK(p.rows() == static_cast<Eigen::Index>(s.size()));
    for (Eigen::Index r = 0; r < p.rows(); ++r) CHECK(p.row(r).sum() == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("close to the Bayes rate on a known HMM") {
  const TagDataset train_set = Hmm::sample(200, 10, 1);
  const TagDataset test_set = Hmm::sample(2000, 10, 2);
  TaggerConfig cfg;
  cfg.hash_bits = 12;
  cfg.window = 1;
  cfg.epochs = 10;
  const TaggerModel m = train(train_set, cfg);
  const double bayes = Hmm::bayes_accuracy(test_set);
  std::size_t hits = 0;
  for (const auto& sent : test_set.sentences()) {
    const auto decoded = viterbi_decode(predict_proba(m, sent.tokens));
    for (std::size_t t = 0; t < sent.size(); ++t) hits += decoded[t] == *sent.tags[t];
  }
  const double acc = static_cast<double>(hits) / test_set.num_tokens();
  MESSAGE("bayes " << bayes << " tagger " << acc);
  CHECK(bayes > 0.85);
  CHECK(std::abs(acc - bayes) < 0.03);
}

TEST_CASE("model round trip") {
  const SyntheticCorpus c = small_corpus(30, 1, 1, 9);
  const TaggerModel m = train(c.gold, small_config());
  std::stringstream buf;
  save_model(m, buf);
  const TaggerModel back = load_model(buf);
  CHECK(back == m);

  std::istringstream junk("not a model");
  expect_error(ErrorCode::ParseError, [&] { load_model(junk); });
  std::string text;
  {
    std::stringstream again;
    save_model(m, again);
    text = again.str();
  }
  std::istringstream cut(text.substr(0, text.size() / 2));
  expect_error(ErrorCode::ParseError, [&] { load_model(cut); });
  expect_error(ErrorCode::IoError, [] { load_model(std::string("/nonexistent/dir/model.txt")); });
}

TEST_CASE("priors") {
  const LabelSet two({"A", "B"});
  const TagDataset inc = make_dataset({{"x y z", "A _ B"}}, two);

  SignalSpec noisy;
  noisy.family = SignalFamily::Noisy;
  noisy.params = {{"eta_n", 0.3}};
  const PriorTable np = build_prior(inc, noisy, two);
  CHECK(np.rows[0](0, 0) == Approx(0.7));
  CHECK(np.rows[0](0, 1) == Approx(0.3));
  CHECK(np.rows[0](1, 0) == Approx(0.5));
  CHECK(np.rows[0](2, 1) == Approx(0.7));
  CHECK_FALSE(np.rule.has_value());

  SignalSpec partial;
  partial.family = SignalFamily::Partial;
  partial.params = {{"eta_p", 0.3}};
  const PriorTable pp = build_prior(inc, partial, two);
  CHECK(pp.rows[0](0, 0) == 1.0);
  CHECK(pp.rows[0](0, 1) == 0.0);
  CHECK(pp.rows[0](1, 1) == 0.5);

  const BioScheme scheme({"X"});
  const TagDataset bio_inc = make_dataset({{"a b", "B-X _"}}, scheme.labels());
  SignalSpec pb;
  pb.family = SignalFamily::PartialBio;
  pb.params = {{"eta_p", 0.5}};
  CHECK(build_prior(bio_inc, pb, scheme.labels()).rule.has_value());
  SignalSpec bc;
  bc.family = SignalFamily::BioConstraint;
  const PriorTable bp = build_prior(bio_inc, bc, scheme.labels());
  CHECK(bp.rule.has_value());
  CHECK(bp.rows[0](0, 0) == Approx(1.0 / 3));

  // auxiliary: B maps back to its fine labels in proportion to aligned counts
  const BioScheme fine({"P", "Q"});
  const LabelMapping det = detection_mapping(fine.labels());
  const TagDataset small = make_dataset({{"a b c d e", "B-P B-P B-P B-Q B-Q"}}, fine.labels());
  const AlignedPairs aligned = align(small, map_auxiliary(small, det));
  SignalSpec aux;
  aux.family = SignalFamily::AuxiliaryDetection;
  aux.mapping = det;
  const TagDataset aux_inc = map_auxiliary(make_dataset({{"q r", "B-P O"}}, fine.labels()), det);
  const PriorTable ap = build_prior(aux_inc, aux, fine.labels(), &aligned);
  const auto bp_idx = fine.labels().index("B-P"), bq_idx = fine.labels().index("B-Q");
  CHECK(ap.rows[0](0, bp_idx) == Approx(0.6));
  CHECK(ap.rows[0](0, bq_idx) == Approx(0.4));
  // O never seen in the aligned data: uniform fallback
  CHECK(ap.rows[0](1, 0) == Approx(1.0 / fine.size()));
  expect_error(ErrorCode::MissingAlignment, [&] { build_prior(aux_inc, aux, fine.labels()); });

  const PriorTable u = uniform_prior(inc, 2);
  CHECK(u.rows[0].isApproxToConstant(0.5));
}

TEST_CASE("cwbpp") {
  const SyntheticCorpus c = small_corpus(80, 800, 600, 10);
  TaggerConfig cfg = small_config();
  const BioScheme rule = BioScheme::from_labels(c.gold.labels());
  const TaggerModel base = train(c.gold, cfg);

  TaggerConfig none = cfg;
  none.iterations = 0;
  CHECK(cwbpp_from(base, c.gold, c.incidental, uniform_prior(c.incidental, c.gold.labels().size()), none) == base);

  SignalSpec clean;
  clean.family = SignalFamily::Partial;
  clean.params = {{"eta_p", 0.0}};
  const PriorTable full = build_prior(c.incidental, clean, c.gold.labels());
  const TaggerModel a = cwbpp_from(base, c.gold, c.incidental, full, cfg);
  CHECK(a == cwbpp(c.gold, c.incidental, full, cfg));

  const double f_base = evaluate(base, c.test, &rule).f1;
  const double f_clean = evaluate(a, c.test, &rule).f1;
  const double f_uniform =
      evaluate(cwbpp_from(base, c.gold, c.incidental, uniform_prior(c.incidental, c.gold.labels().size()), cfg), c.test,
               &rule)
          .f1;
  MESSAGE("gold " << f_base << " clean " << f_clean << " uniform " << f_uniform);
  CHECK(f_clean > f_base + 0.05);
  CHECK(f_clean > f_uniform + 0.05);

  const PriorTable short_prior = uniform_prior(c.gold, c.gold.labels().size());
  expect_error(ErrorCode::InvalidArgument, [&] { cwbpp_from(base, c.gold, c.incidental, short_prior, cfg); });
}

TEST_CASE("disagreement and eta estimation") {
  // 500 word types with fixed labels; the target relabels a fifth of them
  const LabelSet labels({"A", "B", "C", "D", "E"});
  std::mt19937_64 rng(77);
  std::vector<std::size_t> source_label(500), target_label(500);
  for (std::size_t w = 0; w < 500; ++w) {
    source_label[w] = rng() % 5;
    target_label[w] = w % 5 == 0 ? (source_label[w] + 1 + rng() % 4) % 5 : source_label[w];
  }
  auto draw = [&](int sentences, const std::vector<std::size_t>& lab) {
    std::vector<Sentence> out;
    for (int s = 0; s < sentences; ++s) {
      Sentence sent;
      for (int t = 0; t < 10; ++t) {
        const std::size_t w = rng() % 500;
        sent.tokens.push_back("t" + std::to_string(w));
        sent.tags.push_back(lab[w]);
      }
      out.push_back(std::move(sent));
    }
    return TagDataset(std::move(out), labels);
  };
  const TagDataset src_train = draw(2000, source_label);
  const TagDataset src_held = draw(500, source_label);
  const TagDataset target = draw(500, target_label);
  TaggerConfig cfg;
  cfg.hash_bits = 16;
  cfg.epochs = 5;
  const EtaEstimate est = estimate_etas(src_train, src_held, target, cfg);
  MESSAGE("eta1 " << est.eta1 << " eta2 " << est.eta2 << " eta " << est.eta);
  CHECK(est.eta1 < 0.05);
  CHECK(std::abs(est.eta - 0.2) < 0.05);

  const TaggerModel silver = train(src_train, cfg);
  const double tok = disagreement(silver, target, Granularity::Token);
  const double sen = disagreement(silver, target, Granularity::Sentence);
  CHECK(tok == Approx(est.eta2));
  CHECK(sen >= tok);
  expect_error(ErrorCode::InvalidArgument, [&] { disagreement(silver, corrupt(target, 0.5, 0.0, 1), Granularity::Token); });
}

}  // TEST_SUITE
