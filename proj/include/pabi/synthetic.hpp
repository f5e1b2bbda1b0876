#pragma once

// Seeded generator for the default desk-scale tagging corpus.
//
// Labels follow a BIO chain over a handful of entity types. Each label draws
// its word from a Zipf-distributed vocabulary, so most entity words are rare
// and a small gold set covers only part of them. Some entity words come from
// pools shared between related types, and an O word in front of an entity is
// often a cue word for the entity's type.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pabi/constraints.hpp"
#include "pabi/dataset.hpp"

namespace pabi {

struct SyntheticConfig {
  std::size_t gold_sentences = 500;
  std::size_t incidental_sentences = 4500;
  std::size_t test_sentences = 2000;
  std::uint64_t seed = 0;

  std::vector<std::string> types = {"PER", "ORG", "GPE", "LOC", "FAC", "NORP"};
  std::vector<double> type_weights = {0.25, 0.2, 0.25, 0.1, 0.08, 0.12};
  std::size_t min_length = 8;
  std::size_t max_length = 22;
  double entity_rate = 0.14;     // chance an entity starts at an O position
  double continue_rate = 0.4;    // chance an entity grows by one more token
  std::size_t max_entity_length = 4;
  double cue_rate = 0.5;         // chance the word before an entity is a cue
  double shared_rate = 0.25;     // chance an entity word comes from a shared pool
  double zipf_exponent = 1.05;
  std::size_t outside_vocab = 3000;
  std::size_t begin_vocab = 900;
  std::size_t inside_vocab = 500;
  std::size_t shared_vocab = 400;
  std::size_t cues_per_type = 4;
  // type -> shared pool name; types with the same pool share entity words
  std::map<std::string, std::string> pools = {{"PER", "PER"}, {"ORG", "ORG"}, {"NORP", "ORG"},
                                              {"GPE", "LOC"}, {"LOC", "LOC"}, {"FAC", "LOC"}};
};

struct SyntheticCorpus {
  TagDataset gold;
  TagDataset incidental;  // fully labeled; signals are forged from it
  TagDataset test;
};

BioScheme synthetic_scheme(const SyntheticConfig& config);

SyntheticCorpus generate_corpus(const SyntheticConfig& config);

/// One sentence stream drawn from the generator; `count` sentences.
TagDataset generate_sentences(const SyntheticConfig& config, std::size_t count, std::uint64_t stream_seed);

/// Fine type -> coarse type for the default types, CoNLL style.
std::map<std::string, std::string> default_coarse_groups();

}  // namespace pabi
