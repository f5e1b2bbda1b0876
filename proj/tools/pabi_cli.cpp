// pabi: informativeness of incidental supervision signals.
//
//   pabi compute  --family noisy --eta-n 0.3 --labels 13
//   pabi compute  --gold g.conll --incidental i.conll
//   pabi corrupt  --in gold.conll --eta-p 0.2 --eta-n 0.1 --seed 7 --output out.conll
//   pabi eta      --eta1 0.05 --eta2 0.10 --labels 37
//   pabi eta      --source-train s.conll --source-heldout h.conll --target t.conll
//   pabi sweep    --config configs/default.yaml --out results
//   pabi report   --out results

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "pabi/constraints.hpp"
#include "pabi/core.hpp"
#include "pabi/dataio.hpp"
#include "pabi/experiment.hpp"
#include "pabi/forge.hpp"
#include "pabi/tagger.hpp"

namespace {

using json = nlohmann::ordered_json;

json score_json(const pabi::PabiScore& s) {
  return json{{"value", s.value}, {"reduced_nats", s.reduced_nats}, {"full_nats", s.full_nats}, {"clamped", s.clamped}};
}

struct ComputeArgs {
  std::string family;
  double eta_p = 0.0, eta_n = 0.0, p = 0.0;
  std::size_t labels = 0, length = 0, types = 1, agents = 0, tasks = 0, items = 0;
  std::string gold, incidental;
};

int run_compute(const ComputeArgs& a) {
  json out;
  if (!a.gold.empty() || !a.incidental.empty()) {
    if (a.gold.empty() || a.incidental.empty())
      throw pabi::Error(pabi::ErrorCode::ConfigError, "compute from data needs both --gold and --incidental");
    const pabi::TagDataset gold = pabi::read_conll(a.gold);
    const pabi::LabelSet labels = gold.labels();
    const pabi::TagDataset inc = pabi::read_conll(a.incidental, &labels);
    const pabi::RateEstimate est = pabi::estimate_rates(pabi::align(gold, inc));
    out = json{{"eta_p", est.eta_p},
               {"eta_n", est.eta_n},
               {"undefined_noise", est.undefined_noise},
               {"labels", labels.size()},
               {"pabi", score_json(pabi::pabi_mixed_partial_noisy(est.eta_p, est.eta_n, labels.size()))}};
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  const auto need_labels = [&] {
    if (a.labels < 2) throw pabi::Error(pabi::ErrorCode::ConfigError, "--labels must be at least 2");
    return a.labels;
  };
  pabi::PabiScore s;
  const std::string& f = a.family;
  if (f == "partial") s = pabi::pabi_partial(a.eta_p);
  else if (f == "noisy") s = pabi::pabi_noisy(a.eta_n, need_labels());
  else if (f == "mixed") s = pabi::pabi_mixed_partial_noisy(a.eta_p, a.eta_n, need_labels());
  else if (f == "bio") s = pabi::pabi_bio(a.length, pabi::BioScheme::with_types(a.types));
  else if (f == "cross_sentence") s = pabi::pabi_cross_sentence(a.p);
  else if (f == "assignment") s = pabi::pabi_assignment(a.agents, a.tasks);
  else if (f == "ranking") s = pabi::pabi_ranking(a.items);
  else throw pabi::Error(pabi::ErrorCode::ConfigError, "unknown --family '" + f + "'");
  std::cout << json{{"family", f}, {"pabi", score_json(s)}}.dump(2) << '\n';
  return 0;
}

struct EtaArgs {
  double eta1 = -1.0, eta2 = -1.0;
  std::size_t labels = 0;
  std::string source_train, source_heldout, target, granularity = "token";
  pabi::TaggerConfig tagger;
};

int run_eta(EtaArgs a, std::uint64_t seed) {
  pabi::EtaEstimate est;
  std::size_t num_labels = a.labels;
  if (!a.source_train.empty()) {
    if (a.source_heldout.empty() || a.target.empty())
      throw pabi::Error(pabi::ErrorCode::ConfigError, "--source-train needs --source-heldout and --target");
    if (a.granularity != "token" && a.granularity != "sentence")
      throw pabi::Error(pabi::ErrorCode::ConfigError, "--granularity must be token or sentence");
    const pabi::TagDataset train = pabi::read_conll(a.source_train);
    const pabi::LabelSet labels = train.labels();
    const pabi::TagDataset heldout = pabi::read_conll(a.source_heldout, &labels);
    const pabi::TagDataset target = pabi::read_conll(a.target, &labels);
    a.tagger.seed = seed;
    est = pabi::estimate_etas(train, heldout, target, a.tagger,
                              a.granularity == "token" ? pabi::Granularity::Token : pabi::Granularity::Sentence);
    num_labels = target.labels().size();
  } else {
    if (a.eta1 < 0.0 || a.eta2 < 0.0 || num_labels < 2)
      throw pabi::Error(pabi::ErrorCode::ConfigError, "give --eta1, --eta2 and --labels, or corpus files");
    est = pabi::eta_from_silver(a.eta1, a.eta2, num_labels);
  }
  const pabi::PabiScore s = pabi::pabi_noisy(est.eta, num_labels);
  std::cout << json{{"eta", est.eta},
                    {"eta_raw", est.eta_raw},
                    {"eta1", est.eta1},
                    {"eta2", est.eta2},
                    {"granularity", est.granularity == pabi::Granularity::Token ? "token" : "sentence"},
                    {"labels", num_labels},
                    {"pabi", score_json(s)}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PABI informativeness measure for incidental supervision signals"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  auto* compute = app.add_subcommand("compute", "PABI of one signal, from parameters or from aligned data");
  ComputeArgs ca;
  compute->add_option("--family", ca.family, "partial|noisy|mixed|bio|cross_sentence|assignment|ranking");
  compute->add_option("--eta-p", ca.eta_p, "partial rate");
  compute->add_option("--eta-n", ca.eta_n, "noise rate");
  compute->add_option("--labels", ca.labels, "label-set size");
  compute->add_option("--length", ca.length, "sentence length (bio)");
  compute->add_option("--types", ca.types, "entity types (bio)");
  compute->add_option("--p", ca.p, "constrained share (cross_sentence)");
  compute->add_option("--agents", ca.agents, "agents (assignment)");
  compute->add_option("--tasks", ca.tasks, "tasks (assignment)");
  compute->add_option("--items", ca.items, "items (ranking)");
  compute->add_option("--gold", ca.gold, "gold CoNLL file");
  compute->add_option("--incidental", ca.incidental, "incidental CoNLL file over the same tokens");

  auto* corrupt = app.add_subcommand("corrupt", "mask and flip tags of a CoNLL file");
  std::string corrupt_in, corrupt_out;
  double c_eta_p = 0.0, c_eta_n = 0.0;
  corrupt->add_option("--in", corrupt_in, "gold CoNLL file")->required();
  corrupt->add_option("--output", corrupt_out, "output CoNLL file (stdout if omitted)");
  corrupt->add_option("--eta-p", c_eta_p, "partial rate");
  corrupt->add_option("--eta-n", c_eta_n, "noise rate");

  auto* eta = app.add_subcommand("eta", "cross-domain disagreement rate and its PABI");
  EtaArgs ea;
  eta->add_option("--eta1", ea.eta1, "silver vs source disagreement");
  eta->add_option("--eta2", ea.eta2, "silver vs target gold disagreement");
  eta->add_option("--labels", ea.labels, "target label-set size");
  eta->add_option("--source-train", ea.source_train, "source-domain training CoNLL");
  eta->add_option("--source-heldout", ea.source_heldout, "source-domain held-out CoNLL");
  eta->add_option("--target", ea.target, "target-domain gold CoNLL");
  eta->add_option("--granularity", ea.granularity, "token|sentence");
  eta->add_option("--epochs", ea.tagger.epochs, "tagger epochs on the source");

  auto* sweep = app.add_subcommand("sweep", "run the corruption sweep and write reports");
  auto* report = app.add_subcommand("report", "recompute correlations from stored records");

  for (auto* sub : {compute, corrupt, eta, sweep, report}) sub->add_option("--seed", seed, "seed");
  for (auto* sub : {sweep, report}) {
    sub->add_option("--config", config_path, "YAML run configuration");
    sub->add_option("--format", format, "csv|json");
    sub->add_option("--out", out_dir, "report directory");
  }
  sweep->add_option("--workers", workers, "parallel cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*compute) return run_compute(ca);
    if (*eta) return run_eta(ea, seed);

    if (*corrupt) {
      const pabi::TagDataset gold = pabi::read_conll(corrupt_in);
      const pabi::TagDataset out = pabi::corrupt(gold, c_eta_p, c_eta_n, seed);
      if (corrupt_out.empty()) pabi::write_conll(out, std::cout);
      else pabi::write_conll(out, corrupt_out);
      return 0;
    }

    pabi::RunConfig config;
    if (!config_path.empty()) config = pabi::load_config(config_path);
    else if (*sweep) throw pabi::Error(pabi::ErrorCode::ConfigError, "sweep needs --config");
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!format.empty()) config.format = pabi::parse_format(format);
    if (sweep->count("--seed")) {
      config.seed = seed;
      config.tagger.seed = seed;
    }

    if (*sweep) {
      if (workers) config.workers = workers;
      const pabi::SweepResult result = pabi::run_sweep(config);
      const pabi::CorrelationReport corr = pabi::correlate(result.records);
      pabi::emit_report(result.records, corr, config.format, config.output_dir);
      std::size_t failed = 0;
      for (const auto& r : result.records) failed += !r.valid();
      std::cerr << "cells " << result.records.size() << ", failed " << failed << ", lower "
                << result.bounds.lower_mean << ", upper " << result.bounds.upper_mean;
      if (corr.overall) std::cerr << ", pearson " << corr.overall->pearson << ", spearman " << corr.overall->spearman;
      std::cerr << '\n';
      return 0;
    }

    if (*report) {
      const std::filesystem::path dir(config.output_dir);
      const std::filesystem::path csv = dir / "records.csv", js = dir / "records.json";
      const std::filesystem::path src = std::filesystem::exists(csv) && (format != "json" || !std::filesystem::exists(js))
                                            ? csv
                                            : js;
      const auto records = pabi::read_records(src.string());
      if (format.empty()) config.format = src.extension() == ".json" ? pabi::ReportFormat::Json : pabi::ReportFormat::Csv;
      const pabi::CorrelationReport corr = pabi::correlate(records);
      pabi::emit_report(records, corr, config.format, config.output_dir);
      std::cerr << "records " << records.size();
      if (corr.overall) std::cerr << ", pearson " << corr.overall->pearson << ", spearman " << corr.overall->spearman;
      std::cerr << '\n';
      return 0;
    }
  } catch (const pabi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == pabi::ErrorCode::ConfigError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
