#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "pabi/forge.hpp"
#include "pabi/synthetic.hpp"
#include "test_util.hpp"

using namespace pabi;
using doctest::Approx;
using testutil::expect_error;
using testutil::make_dataset;

namespace {

TagDataset big_corpus(std::size_t sentences, std::uint64_t seed) {
  SyntheticConfig cfg;
  return generate_sentences(cfg, sentences, seed);
}

// p by brute force: every k-gram with the set of label k-grams it carries.
double brute_kgram_p(const TagDataset& data, std::size_t k, std::size_t min_count) {
  std::map<std::vector<std::string>, std::set<std::vector<std::size_t>>> labels;
  std::map<std::vector<std::string>, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : data.sentences())
    for (std::size_t b = 0; b + k <= s.size(); ++b) {
      std::vector<std::string> key(s.tokens.begin() + b, s.tokens.begin() + b + k);
      std::vector<std::size_t> lab;
      bool known = true;
      for (std::size_t i = b; i < b + k; ++i) {
        if (!s.tags[i]) known = false;
        else lab.push_back(*s.tags[i]);
      }
      if (!known) continue;
      ++total;
      ++counts[key];
      labels[key].insert(lab);
    }
  std::size_t good = 0;
  for (const auto& [key, c] : counts)
    if (c >= min_count && labels[key].size() == 1) good += c;
  return total ? static_cast<double>(good) / total : 0.0;
}

}  // namespace

TEST_SUITE("forge") {

TEST_CASE("family names round trip") {
  for (auto f : {SignalFamily::Partial, SignalFamily::Noisy, SignalFamily::Mixed, SignalFamily::BioConstraint,
                 SignalFamily::PartialBio, SignalFamily::CrossSentence, SignalFamily::AuxiliaryDetection,
                 SignalFamily::AuxiliaryCoarse, SignalFamily::AuxiliaryJoint, SignalFamily::CrossDomain})
    CHECK(parse_family(to_string(f)) == f);
  expect_error(ErrorCode::ConfigError, [] { parse_family("typo"); });
}

TEST_CASE("spec validation and keys") {
  SignalSpec s;
  s.family = SignalFamily::Mixed;
  s.params = {{"eta_p", 0.2}, {"eta_n", 0.3}};
  validate(s);
  CHECK(canonical_key(s) == "mixed|eta_n=0.29999999999999999;eta_p=0.20000000000000001");
  SignalSpec seeded = s;
  seeded.seed = 99;
  CHECK(canonical_key(seeded) == canonical_key(s));

  s.params.erase("eta_n");
  expect_error(ErrorCode::ConfigError, [&] { validate(s); });
  s.params["eta_n"] = 1.5;
  expect_error(ErrorCode::ConfigError, [&] { validate(s); });

  SignalSpec coarse;
  coarse.family = SignalFamily::AuxiliaryCoarse;
  expect_error(ErrorCode::ConfigError, [&] { validate(coarse); });
  CHECK(s.param_or("missing", 7.0) == 7.0);
}

TEST_CASE("corrupt edge rates") {
  const TagDataset gold = big_corpus(50, 4);
  CHECK(corrupt(gold, 0.0, 0.0, 1) == gold);
  const TagDataset masked = corrupt(gold, 1.0, 0.0, 1);
  for (const auto& s : masked.sentences())
    for (const auto& t : s.tags) CHECK_FALSE(t.has_value());
  const TagDataset flipped = corrupt(gold, 0.0, 1.0, 1);
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t t = 0; t < gold[i].size(); ++t) CHECK(flipped[i].tags[t] != gold[i].tags[t]);
  expect_error(ErrorCode::OutOfRange, [&] { corrupt(gold, -0.1, 0.0, 1); });
  expect_error(ErrorCode::OutOfRange, [&] { corrupt(gold, 0.0, 1.1, 1); });
}

TEST_CASE("corrupt keeps shape and is seeded") {
  const TagDataset gold = big_corpus(200, 5);
  const TagDataset a = corrupt(gold, 0.3, 0.2, 17);
  const TagDataset b = corrupt(gold, 0.3, 0.2, 17);
  CHECK(a == b);
  CHECK_FALSE(a == corrupt(gold, 0.3, 0.2, 18));
  CHECK(a.size() == gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) CHECK(a[i].tokens == gold[i].tokens);
}

TEST_CASE("corruptions with one seed are nested across rates") {
  const TagDataset gold = big_corpus(100, 6);
  const TagDataset low = corrupt(gold, 0.2, 0.1, 3);
  const TagDataset high = corrupt(gold, 0.5, 0.4, 3);
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t t = 0; t < gold[i].size(); ++t) {
      if (!low[i].tags[t]) CHECK_FALSE(high[i].tags[t].has_value());
      else if (low[i].tags[t] != gold[i].tags[t] && high[i].tags[t]) CHECK(high[i].tags[t] == low[i].tags[t]);
    }
}

TEST_CASE("corrupt and estimate round trip") {
  const TagDataset gold = big_corpus(8000, 7);
  REQUIRE(gold.num_tokens() > 100000);
  const RateEstimate flips = estimate_rates(align(gold, corrupt(gold, 0.0, 0.3, 8)));
  CHECK(flips.eta_p == 0.0);
  CHECK(std::abs(flips.eta_n - 0.3) < 0.01);
  const RateEstimate both = estimate_rates(align(gold, corrupt(gold, 0.2, 0.3, 9)));
  CHECK(std::abs(both.eta_p - 0.2) < 0.01);
  CHECK(std::abs(both.eta_n - 0.3) < 0.01);

  // flipped labels are uniform over the other labels
  const TagDataset noisy = corrupt(gold, 0.0, 1.0, 10);
  const std::size_t L = gold.labels().size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(L, L);
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t t = 0; t < gold[i].size(); ++t) counts(*gold[i].tags[t], *noisy[i].tags[t]) += 1;
  const std::size_t o = gold.labels().index("O");
  const double row = counts.row(o).sum();
  for (std::size_t j = 0; j < L; ++j)
    if (j != o) CHECK(std::abs(counts(o, j) / row - 1.0 / (L - 1)) < 0.01);
}

TEST_CASE("estimate rates edge cases") {
  const LabelSet labels({"A", "B"});
  const TagDataset gold = make_dataset({{"x y z", "A B A"}}, labels);
  const RateEstimate same = estimate_rates(align(gold, gold));
  CHECK(same.eta_p == 0.0);
  CHECK(same.eta_n == 0.0);
  const RateEstimate none = estimate_rates(align(gold, make_dataset({{"x y z", "_ _ _"}}, labels)));
  CHECK(none.eta_p == 1.0);
  CHECK(none.eta_n == 0.0);
  CHECK(none.undefined_noise);
  const RateEstimate some = estimate_rates(align(gold, make_dataset({{"x y z", "_ A A"}}, labels)));
  CHECK(some.eta_p == Approx(1.0 / 3));
  CHECK(some.eta_n == Approx(0.5));
  expect_error(ErrorCode::EmptyInput, [] { estimate_rates(AlignedPairs{}); });
}

TEST_CASE("detection and coarse mappings") {
  const BioScheme scheme({"PER", "ORG", "GPE", "LOC", "FAC", "NORP"});
  const LabelSet& fine = scheme.labels();
  const LabelMapping det = detection_mapping(fine);
  CHECK(det.at("B-GPE") == "B");
  CHECK(det.at("I-ORG") == "I");
  CHECK(det.at("O") == "O");
  const Coarsening dpart = coarsening_partition(fine, det);
  CHECK(dpart.coarse.names() == std::vector<std::string>{"B", "I", "O"});
  CHECK(dpart.group_sizes == std::vector<std::size_t>{6, 6, 1});

  const LabelMapping coarse = coarse_mapping(fine, default_coarse_groups());
  CHECK(coarse.at("B-GPE") == "B-LOC");
  CHECK(coarse.at("I-FAC") == "I-LOC");
  CHECK(coarse.at("B-NORP") == "B-MISC");
  const Coarsening cpart = coarsening_partition(fine, coarse);
  CHECK(cpart.coarse.size() == 9);
  CHECK(cpart.group_sizes[cpart.coarse.index("B-LOC")] == 3);

  const LabelMapping folded = coarse_mapping(fine, {{"NORP", "O"}});
  CHECK(folded.at("I-NORP") == "O");
  const Coarsening fpart = coarsening_partition(fine, folded);
  CHECK(fpart.group_sizes[fpart.coarse.index("O")] == 3);

  LabelMapping partial = det;
  partial.erase("O");
  expect_error(ErrorCode::UnmappedLabel, [&] { coarsening_partition(fine, partial); });
}

TEST_CASE("map auxiliary") {
  const TagDataset gold = big_corpus(60, 11);
  LabelMapping identity;
  for (const auto& n : gold.labels().names()) identity[n] = n;
  CHECK(map_auxiliary(gold, identity) == gold);

  // coarse then detection equals detection directly
  const LabelMapping coarse = coarse_mapping(gold.labels(), default_coarse_groups());
  const TagDataset via = map_auxiliary(map_auxiliary(gold, coarse), detection_mapping(map_auxiliary(gold, coarse).labels()));
  const TagDataset direct = map_auxiliary(gold, detection_mapping(gold.labels()));
  REQUIRE(via.size() == direct.size());
  for (std::size_t i = 0; i < via.size(); ++i)
    for (std::size_t t = 0; t < via[i].size(); ++t)
      CHECK(via.labels()[*via[i].tags[t]] == direct.labels()[*direct[i].tags[t]]);

  const TagDataset det = map_auxiliary(gold, detection_mapping(gold.labels()));
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t t = 0; t < gold[i].size(); ++t)
      CHECK(det.labels()[*det[i].tags[t]][0] == gold.labels()[*gold[i].tags[t]][0]);
}

TEST_CASE("label distribution") {
  const LabelSet labels({"A", "B", "C"});
  const Distribution d = label_distribution(make_dataset({{"x y z w", "A A _ C"}}, labels));
  CHECK(d(0) == Approx(2.0 / 3));
  CHECK(d(1) == 0.0);
  CHECK(d(2) == Approx(1.0 / 3));
  expect_error(ErrorCode::EmptyInput, [&] { label_distribution(make_dataset({{"x", "_"}}, labels)); });
}

TEST_CASE("kgram uniqueness basics") {
  const LabelSet labels({"X", "Y", "Z"});
  const TagDataset det = make_dataset({{"a b c", "X Y Z"}, {"a c b", "X Z Y"}}, labels);
  const KgramStats one = kgram_uniqueness(det, 1, 1);
  CHECK(one.p == 1.0);
  CHECK(one.dictionary.size() == 3);

  const TagDataset amb = make_dataset({{"a b", "X Y"}, {"a b", "X Z"}}, labels);
  const KgramStats s1 = kgram_uniqueness(amb, 1, 1);
  CHECK(s1.p == 0.5);
  CHECK(s1.dictionary.count("a") == 1);
  CHECK(s1.dictionary.count("b") == 0);
  // longer context can lower p: the bigram inherits the ambiguous label of b
  CHECK(kgram_uniqueness(amb, 2, 1).p == 0.0);

  // min_count drops rare k-grams
  const TagDataset rare = make_dataset({{"a a q", "X X Y"}}, labels);
  CHECK(kgram_uniqueness(rare, 1, 2).p == Approx(2.0 / 3));
  CHECK(kgram_uniqueness(rare, 1, 1).p == 1.0);

  // unknown tags drop the occurrence
  const TagDataset holes = make_dataset({{"a b", "X _"}}, labels);
  CHECK(kgram_uniqueness(holes, 2, 1).occurrences == 0);
  CHECK(kgram_uniqueness(holes, 2, 1).p == 0.0);
  CHECK(kgram_uniqueness(holes, 3, 1).occurrences == 0);

  expect_error(ErrorCode::OutOfRange, [&] { kgram_uniqueness(det, 0, 1); });
}

TEST_CASE("kgram uniqueness matches a brute-force count") {
  const TagDataset corpus = big_corpus(100, 12);
  for (std::size_t k = 1; k <= 5; ++k)
    for (std::size_t min_count : {1u, 2u}) CHECK(kgram_uniqueness(corpus, k, min_count).p == Approx(brute_kgram_p(corpus, k, min_count)).epsilon(1e-12));
}

TEST_CASE("kgram share bounded below by singleton share") {
  const TagDataset corpus = big_corpus(100, 13);
  for (std::size_t k = 1; k <= 6; ++k) {
    const KgramStats s = kgram_uniqueness(corpus, k, 1);
    std::map<std::string, std::size_t> counts;
    for (const auto& sent : corpus.sentences())
      for (std::size_t b = 0; b + k <= sent.size(); ++b) ++counts[kgram_key(sent.tokens, b, k)];
    std::size_t singles = 0;
    for (const auto& [key, c] : counts) singles += c == 1;
    CHECK(s.p >= static_cast<double>(singles) / s.occurrences - 1e-12);
  }
}

TEST_CASE("kgram over an extra column") {
  const LabelSet labels({"X", "Y"});
  std::vector<Sentence> sents(2);
  sents[0].tokens = {"a", "b"};
  sents[0].tags = {0u, 1u};
  sents[0].extra = {{"N"}, {"V"}};
  sents[1].tokens = {"c", "d"};
  sents[1].tags = {0u, 0u};
  sents[1].extra = {{"N"}, {"V"}};
  const TagDataset data(sents, labels);
  CHECK(kgram_uniqueness(data, 1, 1, KgramSource::Tokens).p == 1.0);
  CHECK(kgram_uniqueness(data, 1, 1, KgramSource::Column, 0).p == 0.5);
  expect_error(ErrorCode::InvalidArgument, [&] { kgram_uniqueness(data, 1, 1, KgramSource::Column, 1); });
}

TEST_CASE("apply kgram dictionary") {
  const LabelSet labels({"X", "Y", "Z"});
  const TagDataset gold = make_dataset({{"a b c", "X Y Z"}, {"a b d", "X Y X"}}, labels);
  const KgramStats s = kgram_uniqueness(gold, 2, 2);
  CHECK(s.dictionary.size() == 1);
  const TagDataset out = apply_kgram_dictionary(make_dataset({{"q a b", "_ _ _"}, {"b a", "_ _"}}, labels), s, 2);
  CHECK_FALSE(out[0].tags[0].has_value());
  CHECK(out[0].tags[1] == std::optional<std::size_t>(0));
  CHECK(out[0].tags[2] == std::optional<std::size_t>(1));
  CHECK_FALSE(out[1].tags[0].has_value());
}

}  // TEST_SUITE
