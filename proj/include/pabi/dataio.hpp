#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pabi/dataset.hpp"
#include "pabi/forge.hpp"
#include "pabi/synthetic.hpp"
#include "pabi/tagger.hpp"

namespace pabi {

/// Columns are tab separated: token, any extra columns, tag. A blank line ends
/// a sentence and "_" marks an unknown tag. Without `labels` the label set is
/// inferred: BIO tags give {B-X..., I-X..., O} with types sorted, anything else
/// the sorted distinct tags.
TagDataset read_conll(std::istream& in, const LabelSet* labels = nullptr);
TagDataset read_conll(const std::string& path, const LabelSet* labels = nullptr);

void write_conll(const TagDataset& data, std::ostream& out);
void write_conll(const TagDataset& data, const std::string& path);

LabelSet infer_labels(const std::vector<std::string>& observed);

/// Seeded shuffle of the sentences, then contiguous parts of the given sizes.
std::vector<TagDataset> split(const TagDataset& data, const std::vector<double>& fractions, std::uint64_t seed);

enum class ReportFormat { Csv, Json };

struct SweepGrid {
  std::vector<double> partial;
  std::vector<double> noisy;
  std::vector<double> mixed_partial;
  std::vector<double> mixed_noisy;
  std::vector<double> partial_bio;
  bool bio_constraint = false;
  std::vector<std::string> auxiliary;  // "detection", "coarse"
  std::vector<std::size_t> cross_sentence_k;
  std::size_t cross_sentence_min_count = 2;

  std::size_t cardinality() const;
};

struct RunConfig {
  // Empty gold path selects the synthetic corpus.
  std::string gold_path;
  std::string incidental_path;
  std::string test_path;
  std::string output_dir = "out";
  SyntheticConfig synthetic;
  SweepGrid grid;
  std::map<std::string, std::string> coarse_groups = default_coarse_groups();
  TaggerConfig tagger;
  std::uint64_t seed = 0;
  std::size_t replicates = 3;
  std::size_t sample_size = 200;
  ReportFormat format = ReportFormat::Csv;
  std::size_t workers = 1;
};

/// Parses the YAML text of a run configuration, fills defaults, and validates.
/// ConfigError lists every violated field. Relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);

/// One SignalSpec per grid cell, in grid order.
std::vector<SignalSpec> grid_specs(const RunConfig& config, const LabelSet& labels);

std::string_view to_string(ReportFormat format) noexcept;
ReportFormat parse_format(std::string_view name);

}  // namespace pabi
