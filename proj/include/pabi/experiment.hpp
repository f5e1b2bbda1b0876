#pragma once

// Corruption sweeps: forge a signal per grid cell, score it with PABI, learn
// from it with CWBPP, and correlate the two.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pabi/core.hpp"
#include "pabi/dataio.hpp"
#include "pabi/forge.hpp"
#include "pabi/tagger.hpp"

namespace pabi {

struct SweepRecord {
  SignalSpec spec;
  PabiScore pabi;
  double f1 = 0.0;  // mean over replicates
  double lower = 0.0;
  double upper = 0.0;
  double relative_improvement = 0.0;
  std::vector<double> f1_per_seed;
  std::vector<std::uint64_t> seeds;
  double wall_time = 0.0;  // seconds; never written to reports
  std::string error;       // empty for a valid cell
  bool valid() const { return error.empty(); }
};

/// (score - lower) / (upper - lower), not clamped. Throws DegenerateBounds when upper <= lower.
double relative_improvement(double score, double lower, double upper);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n = 0;
};

/// Throws DegenerateSeries for fewer than two points or a constant series.
Correlation correlations(const std::vector<double>& xs, const std::vector<double>& ys);

/// Average ranks, 1-based; ties share their mean rank.
std::vector<double> average_ranks(const std::vector<double>& xs);

struct CorrelationReport {
  std::optional<Correlation> overall;
  std::map<std::string, std::optional<Correlation>> per_family;
};

/// PABI against relative improvement over the valid records; a family or the
/// whole set without enough spread gets std::nullopt.
CorrelationReport correlate(const std::vector<SweepRecord>& records);

struct Corpus {
  TagDataset gold;
  TagDataset incidental;  // gold-quality labels; signals are forged from these
  TagDataset test;
};

Corpus load_corpus(const RunConfig& config);

struct BoundRuns {
  std::vector<double> lower;  // F1 per replicate
  std::vector<double> upper;
  double lower_mean = 0.0;
  double upper_mean = 0.0;
};

struct SweepResult {
  std::vector<SweepRecord> records;
  BoundRuns bounds;
};

/// Training seed of replicate r.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t r);
/// Corruption seed of replicate r for a spec. Cells of one family share it,
/// so corruptions at different rates are nested.
std::uint64_t corruption_seed(const SignalSpec& spec, std::size_t r);

/// The incidental signal a spec forges from gold-quality incidental data.
struct ForgedSignal {
  TagDataset data;
  PriorTable prior;
};

ForgedSignal forge_signal(const SignalSpec& spec, const Corpus& corpus, std::uint64_t seed);

/// PABI of a cell from its spec and the forged data of replicate 0.
PabiScore cell_pabi(const SignalSpec& spec, const Corpus& corpus, std::size_t sample_size);

/// Gold model trained further on gold plus fully labeled incidental data with
/// the same epoch schedule CWBPP uses.
TaggerModel train_upper(TaggerModel model, const TagDataset& gold, const TagDataset& incidental,
                        const TaggerConfig& config);

SweepResult run_sweep(const RunConfig& config);
SweepResult run_sweep(const RunConfig& config, const Corpus& corpus);

/// Writes records.<fmt>, summary.<fmt> and plot.csv into out_dir. Byte-identical for identical input.
void emit_report(const std::vector<SweepRecord>& records, const CorrelationReport& report, ReportFormat format,
                 const std::string& out_dir);

/// Reads records written by emit_report (format picked from the extension).
std::vector<SweepRecord> read_records(const std::string& path);

}  // namespace pabi
