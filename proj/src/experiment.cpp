#include "pabi/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "pabi/random.hpp"

namespace pabi {

double relative_improvement(double score, double lower, double upper) {
  if (!(upper > lower))
    throw Error(ErrorCode::DegenerateBounds, "upper bound " + std::to_string(upper) + " does not exceed lower bound " +
                                                 std::to_string(lower));
  return (score - lower) / (upper - lower);
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mean = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), n), y(ys.data(), n);
  const Eigen::VectorXd dx = x.array() - x.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double sxx = dx.squaredNorm(), syy = dy.squaredNorm();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::DegenerateSeries, "a series is constant");
  return std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

Correlation correlations(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::DegenerateSeries, "series differ in length");
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateSeries, "need at least two points");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw Error(ErrorCode::DegenerateSeries, "non-finite value");
  return Correlation{pearson(xs, ys), pearson(average_ranks(xs), average_ranks(ys)), xs.size()};
}

CorrelationReport correlate(const std::vector<SweepRecord>& records) {
  auto attempt = [](const std::vector<double>& x, const std::vector<double>& y) -> std::optional<Correlation> {
    try {
      return correlations(x, y);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  CorrelationReport report;
  std::vector<double> xs, ys;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> families;
  for (const auto& r : records) {
    if (!r.valid()) continue;
    xs.push_back(r.pabi.value);
    ys.push_back(r.relative_improvement);
    auto& [fx, fy] = families[std::string(to_string(r.spec.family))];
    fx.push_back(r.pabi.value);
    fy.push_back(r.relative_improvement);
  }
  report.overall = attempt(xs, ys);
  for (const auto& [name, series] : families) report.per_family[name] = attempt(series.first, series.second);
  return report;
}

Corpus load_corpus(const RunConfig& config) {
  if (config.gold_path.empty()) {
    SyntheticCorpus c = generate_corpus(config.synthetic);
    return Corpus{std::move(c.gold), std::move(c.incidental), std::move(c.test)};
  }
  TagDataset gold = read_conll(config.gold_path);
  const LabelSet labels = gold.labels();
  TagDataset incidental = read_conll(config.incidental_path, &labels);
  TagDataset test = read_conll(config.test_path, &labels);
  return Corpus{std::move(gold), std::move(incidental), std::move(test)};
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t r) { return mix_seed(master, 0x7261000 + r); }

std::uint64_t corruption_seed(const SignalSpec& spec, std::size_t r) { return mix_seed(spec.seed, r); }

namespace {

AlignedPairs auxiliary_alignment(const SignalSpec& spec, const TagDataset& gold) {
  return align(gold, map_auxiliary(gold, spec.mapping));
}

std::size_t kgram_k(const SignalSpec& spec) { return static_cast<std::size_t>(std::llround(spec.param("k"))); }
std::size_t kgram_min(const SignalSpec& spec) {
  return static_cast<std::size_t>(std::llround(spec.param_or("min_count", 1.0)));
}

TagDataset forge_data(const SignalSpec& spec, const Corpus& corpus, std::uint64_t seed) {
  const TagDataset& inc = corpus.incidental;
  switch (spec.family) {
    case SignalFamily::Partial:
    case SignalFamily::PartialBio:
      return corrupt(inc, spec.param("eta_p"), 0.0, seed);
    case SignalFamily::Noisy:
      return corrupt(inc, 0.0, spec.param("eta_n"), seed);
    case SignalFamily::Mixed:
      return corrupt(inc, spec.param("eta_p"), spec.param("eta_n"), seed);
    case SignalFamily::BioConstraint:
      return inc.unlabeled();
    case SignalFamily::AuxiliaryDetection:
    case SignalFamily::AuxiliaryCoarse:
    case SignalFamily::AuxiliaryJoint:
      return map_auxiliary(inc, spec.mapping);
    case SignalFamily::CrossSentence: {
      const KgramStats stats = kgram_uniqueness(inc, kgram_k(spec), kgram_min(spec));
      return apply_kgram_dictionary(inc.unlabeled(), stats, kgram_k(spec));
    }
    case SignalFamily::CrossDomain:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "cross_domain cells need a source corpus; use the eta command");
}

}  // namespace

ForgedSignal forge_signal(const SignalSpec& spec, const Corpus& corpus, std::uint64_t seed) {
  validate(spec);
  TagDataset data = forge_data(spec, corpus, seed);
  std::optional<AlignedPairs> small_gold;
  if (spec.family == SignalFamily::AuxiliaryDetection || spec.family == SignalFamily::AuxiliaryCoarse ||
      spec.family == SignalFamily::AuxiliaryJoint)
    small_gold = auxiliary_alignment(spec, corpus.gold);
  PriorTable prior = build_prior(data, spec, corpus.gold.labels(), small_gold ? &*small_gold : nullptr);
  return ForgedSignal{std::move(data), std::move(prior)};
}

PabiScore cell_pabi(const SignalSpec& spec, const Corpus& corpus, std::size_t sample_size) {
  validate(spec);
  const std::size_t L = corpus.gold.labels().size();
  switch (spec.family) {
    case SignalFamily::Partial:
      return pabi_partial(spec.param("eta_p"));
    case SignalFamily::Noisy:
      return pabi_noisy(spec.param("eta_n"), L);
    case SignalFamily::Mixed:
      return pabi_mixed_partial_noisy(spec.param("eta_p"), spec.param("eta_n"), L);
    case SignalFamily::PartialBio:
    case SignalFamily::BioConstraint: {
      const TagDataset data = forge_data(spec, corpus, corruption_seed(spec, 0));
      std::vector<PartialMask> masks;
      for (const auto& sent : data.sentences()) masks.push_back(sent.tags);
      return pabi_partial_bio(masks, BioScheme::from_labels(data.labels()), sample_size, spec.seed);
    }
    case SignalFamily::AuxiliaryDetection:
    case SignalFamily::AuxiliaryCoarse: {
      const Coarsening part = coarsening_partition(corpus.gold.labels(), spec.mapping);
      const Distribution probs = label_distribution(map_auxiliary(corpus.incidental, spec.mapping));
      return pabi_coarsening(part.group_sizes, probs, L);
    }
    case SignalFamily::AuxiliaryJoint: {
      const AlignedPairs pairs = auxiliary_alignment(spec, corpus.gold);
      Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.gold_labels.size()),
                                                    static_cast<Eigen::Index>(pairs.incidental_labels.size()));
      for (const auto& [g, a] : pairs.pairs)
        if (g && a) joint(static_cast<Eigen::Index>(*g), static_cast<Eigen::Index>(*a)) += 1.0;
      return pabi_auxiliary_mi(joint);
    }
    case SignalFamily::CrossSentence:
      return pabi_cross_sentence(kgram_uniqueness(corpus.incidental, kgram_k(spec), kgram_min(spec)).p);
    case SignalFamily::CrossDomain:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "cross_domain cells need a source corpus; use the eta command");
}

namespace {

std::uint64_t iteration_seed(const TaggerConfig& config, std::size_t it) {
  return mix_seed(mix_seed(config.seed, 0xb007), it);
}

}  // namespace

TaggerModel train_upper(TaggerModel model, const TagDataset& gold, const TagDataset& incidental,
                        const TaggerConfig& config) {
  if (!incidental.fully_labeled()) throw Error(ErrorCode::UnknownLabelInTraining, "upper bound needs full labels");
  std::vector<WeightedSentence> data;
  for (const TagDataset* part : {&gold, &incidental}) {
    for (const auto& sent : part->sentences()) {
      WeightedSentence item{&sent.tokens, {}, std::vector<double>(sent.size(), 1.0)};
      for (const Tag& t : sent.tags) item.labels.push_back(*t);
      data.push_back(std::move(item));
    }
  }
  for (std::size_t it = 0; it < config.iterations; ++it) sgd_epochs(model, data, 1, config.learning_rate, iteration_seed(config, it));
  return model;
}

namespace {

void run_tasks(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  for (auto& t : pool) t.join();
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code())) + ": " + e.what();
  return e.what();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

SweepResult run_sweep(const RunConfig& config) { return run_sweep(config, load_corpus(config)); }

SweepResult run_sweep(const RunConfig& config, const Corpus& corpus) {
  if (!corpus.gold.fully_labeled() || !corpus.incidental.fully_labeled() || !corpus.test.fully_labeled())
    throw Error(ErrorCode::InvalidArgument, "sweep corpora must be fully labeled");
  const std::size_t R = config.replicates;
  const BioScheme rule = BioScheme::from_labels(corpus.gold.labels());

  std::vector<TaggerConfig> tagger(R, config.tagger);
  for (std::size_t r = 0; r < R; ++r) tagger[r].seed = replicate_seed(config.seed, r);

  // Line 1 of the algorithm is shared by every cell of a replicate.
  std::vector<std::optional<TaggerModel>> base(R);
  SweepResult result;
  result.bounds.lower.assign(R, 0.0);
  result.bounds.upper.assign(R, 0.0);
  std::vector<std::string> bound_errors(R);
  run_tasks(R, config.workers, [&](std::size_t r) {
    try {
      TaggerModel gold_model = train(corpus.gold, tagger[r]);
      const TaggerModel lower = cwbpp_from(gold_model, corpus.gold, corpus.incidental.unlabeled(),
                                           uniform_prior(corpus.incidental, corpus.gold.labels().size()), tagger[r]);
      result.bounds.lower[r] = evaluate(lower, corpus.test, &rule).f1;
      const TaggerModel upper = train_upper(gold_model, corpus.gold, corpus.incidental, tagger[r]);
      result.bounds.upper[r] = evaluate(upper, corpus.test, &rule).f1;
      base[r].emplace(std::move(gold_model));
    } catch (const std::exception& e) {
      bound_errors[r] = describe(e);
    }
  });
  for (const auto& e : bound_errors)
    if (!e.empty()) throw Error(ErrorCode::InvalidArgument, "bound run failed: " + e);
  result.bounds.lower_mean = mean(result.bounds.lower);
  result.bounds.upper_mean = mean(result.bounds.upper);

  const std::vector<SignalSpec> specs = grid_specs(config, corpus.gold.labels());
  const std::size_t cells = specs.size();
  std::vector<std::vector<double>> f1(cells, std::vector<double>(R, 0.0));
  std::vector<std::vector<double>> times(cells, std::vector<double>(R, 0.0));
  std::vector<std::string> errors(cells * R);
  std::vector<PabiScore> scores(cells);
  std::vector<std::string> pabi_errors(cells);

  run_tasks(cells * R, config.workers, [&](std::size_t task) {
    const std::size_t c = task / R, r = task % R;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (r == 0) {
        try {
          scores[c] = cell_pabi(specs[c], corpus, config.sample_size);
        } catch (const std::exception& e) {
          pabi_errors[c] = describe(e);
        }
      }
      const ForgedSignal signal = forge_signal(specs[c], corpus, corruption_seed(specs[c], r));
      const TaggerModel model = cwbpp_from(*base[r], corpus.gold, signal.data, signal.prior, tagger[r]);
      f1[c][r] = evaluate(model, corpus.test, &rule).f1;
    } catch (const std::exception& e) {
      errors[task] = describe(e);
    }
    times[c][r] = seconds_since(t0);
  });

  for (std::size_t c = 0; c < cells; ++c) {
    SweepRecord rec;
    rec.spec = specs[c];
    rec.pabi = scores[c];
    rec.f1_per_seed = f1[c];
    for (std::size_t r = 0; r < R; ++r) rec.seeds.push_back(tagger[r].seed);
    rec.lower = result.bounds.lower_mean;
    rec.upper = result.bounds.upper_mean;
    rec.wall_time = std::accumulate(times[c].begin(), times[c].end(), 0.0);
    rec.f1 = mean(rec.f1_per_seed);
    for (std::size_t r = 0; r < R && rec.error.empty(); ++r) rec.error = errors[c * R + r];
    if (rec.error.empty()) rec.error = pabi_errors[c];
    if (rec.error.empty()) {
      try {
        rec.relative_improvement = relative_improvement(rec.f1, rec.lower, rec.upper);
      } catch (const std::exception& e) {
        rec.error = describe(e);
      }
    }
    if (!rec.error.empty()) rec.relative_improvement = std::nan("");
    result.records.push_back(std::move(rec));
  }
  return result;
}

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::nan("");
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorCode::ParseError, "bad number '" + s + "'");
  return x;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + f(v[i]);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

std::string params_text(const SignalSpec& spec) {
  std::string out;
  for (const auto& [k, v] : spec.params) out += (out.empty() ? "" : ";") + k + "=" + fmt(v);
  return out;
}

std::string mapping_text(const SignalSpec& spec) {
  std::string out;
  for (const auto& [from, to] : spec.mapping) out += (out.empty() ? "" : ";") + from + ">" + to;
  return out;
}

void parse_params(SignalSpec& spec, const std::string& text) {
  for (const auto& kv : split_on(text, ';')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "bad parameter '" + kv + "'");
    spec.params[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1));
  }
}

void parse_mapping(SignalSpec& spec, const std::string& text) {
  for (const auto& kv : split_on(text, ';')) {
    const auto gt = kv.find('>');
    if (gt == std::string::npos) throw Error(ErrorCode::ParseError, "bad mapping entry '" + kv + "'");
    spec.mapping[kv.substr(0, gt)] = kv.substr(gt + 1);
  }
}

const char* kRecordColumns[] = {"family", "params", "mapping", "spec_seed", "pabi", "reduced_nats",
                                "full_nats", "clamped", "f1", "lower", "upper", "relative_improvement",
                                "f1_per_seed", "seeds", "error"};

ojson number_or_null(double x) { return std::isnan(x) ? ojson(nullptr) : ojson(x); }

ojson correlation_json(const std::optional<Correlation>& c) {
  if (!c) return ojson{{"pearson", nullptr}, {"spearman", nullptr}, {"n", nullptr}};
  return ojson{{"pearson", c->pearson}, {"spearman", c->spearman}, {"n", c->n}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

}  // namespace

void emit_report(const std::vector<SweepRecord>& records, const CorrelationReport& report, ReportFormat format,
                 const std::string& out_dir) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);

  if (format == ReportFormat::Csv) {
    std::ostringstream rec;
    for (std::size_t i = 0; i < std::size(kRecordColumns); ++i) rec << (i ? "," : "") << kRecordColumns[i];
    rec << '\n';
    for (const auto& r : records) {
      rec << to_string(r.spec.family) << ',' << csv_field(params_text(r.spec)) << ',' << csv_field(mapping_text(r.spec))
          << ',' << r.spec.seed << ',' << fmt(r.pabi.value) << ',' << fmt(r.pabi.reduced_nats) << ','
          << fmt(r.pabi.full_nats) << ',' << (r.pabi.clamped ? 1 : 0) << ',' << fmt(r.f1) << ',' << fmt(r.lower)
          << ',' << fmt(r.upper) << ',' << fmt(r.relative_improvement) << ','
          << join(r.f1_per_seed, [](double x) { return fmt(x); }) << ','
          << join(r.seeds, [](std::uint64_t s) { return std::to_string(s); }) << ',' << csv_field(r.error) << '\n';
    }
    write_file(dir / "records.csv", rec.str());

    std::ostringstream sum;
    sum << "scope,pearson,spearman,n\n";
    auto row = [&](const std::string& scope, const std::optional<Correlation>& c) {
      sum << scope << ',' << (c ? fmt(c->pearson) : "") << ',' << (c ? fmt(c->spearman) : "") << ','
          << (c ? std::to_string(c->n) : "") << '\n';
    };
    row("overall", report.overall);
    for (const auto& [family, c] : report.per_family) row(family, c);
    write_file(dir / "summary.csv", sum.str());
  } else {
    ojson rec = ojson::array();
    for (const auto& r : records) {
      ojson params = ojson::object();
      for (const auto& [k, v] : r.spec.params) params[k] = v;
      ojson mapping = ojson::object();
      for (const auto& [from, to] : r.spec.mapping) mapping[from] = to;
      ojson per_seed = ojson::array();
      for (double x : r.f1_per_seed) per_seed.push_back(x);
      rec.push_back(ojson{{"family", to_string(r.spec.family)},
                          {"params", params},
                          {"mapping", mapping},
                          {"spec_seed", r.spec.seed},
                          {"pabi", {{"value", r.pabi.value},
                                    {"reduced_nats", r.pabi.reduced_nats},
                                    {"full_nats", r.pabi.full_nats},
                                    {"clamped", r.pabi.clamped}}},
                          {"f1", r.f1},
                          {"lower", r.lower},
                          {"upper", r.upper},
                          {"relative_improvement", number_or_null(r.relative_improvement)},
                          {"f1_per_seed", per_seed},
                          {"seeds", r.seeds},
                          {"error", r.error.empty() ? ojson(nullptr) : ojson(r.error)}});
    }
    write_file(dir / "records.json", rec.dump(2) + "\n");

    ojson sum{{"overall", correlation_json(report.overall)}, {"per_family", ojson::object()}};
    for (const auto& [family, c] : report.per_family) sum["per_family"][family] = correlation_json(c);
    write_file(dir / "summary.json", sum.dump(2) + "\n");
  }

  std::ostringstream plot;
  plot << "pabi,relative_improvement,family\n";
  for (const auto& r : records)
    if (r.valid()) plot << fmt(r.pabi.value) << ',' << fmt(r.relative_improvement) << ',' << to_string(r.spec.family) << '\n';
  write_file(dir / "plot.csv", plot.str());
}

std::vector<SweepRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<SweepRecord> records;

  if (std::filesystem::path(path).extension() == ".json") {
    ojson doc;
    try {
      doc = ojson::parse(in);
    } catch (const ojson::exception& e) {
      throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    try {
      for (const auto& j : doc) {
        SweepRecord r;
        r.spec.family = parse_family(j.at("family").get<std::string>());
        for (const auto& [k, v] : j.at("params").items()) r.spec.params[k] = v.get<double>();
        for (const auto& [k, v] : j.at("mapping").items()) r.spec.mapping[k] = v.get<std::string>();
        r.spec.seed = j.at("spec_seed").get<std::uint64_t>();
        const auto& p = j.at("pabi");
        r.pabi = PabiScore{p.at("value").get<double>(), p.at("reduced_nats").get<double>(),
                           p.at("full_nats").get<double>(), p.at("clamped").get<bool>()};
        r.f1 = j.at("f1").get<double>();
        r.lower = j.at("lower").get<double>();
        r.upper = j.at("upper").get<double>();
        const auto& ri = j.at("relative_improvement");
        r.relative_improvement = ri.is_null() ? std::nan("") : ri.get<double>();
        r.f1_per_seed = j.at("f1_per_seed").get<std::vector<double>>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        const auto& err = j.at("error");
        r.error = err.is_null() ? "" : err.get<std::string>();
        records.push_back(std::move(r));
      }
    } catch (const ojson::exception& e) {
      throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    return records;
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) continue;
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != std::size(kRecordColumns))
      throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(line_no) + " has " +
                                             std::to_string(f.size()) + " fields");
    SweepRecord r;
    r.spec.family = parse_family(f[0]);
    parse_params(r.spec, f[1]);
    parse_mapping(r.spec, f[2]);
    r.spec.seed = std::stoull(f[3]);
    r.pabi = PabiScore{parse_double(f[4]), parse_double(f[5]), parse_double(f[6]), f[7] == "1"};
    r.f1 = parse_double(f[8]);
    r.lower = parse_double(f[9]);
    r.upper = parse_double(f[10]);
    r.relative_improvement = parse_double(f[11]);
    for (const auto& x : split_on(f[12], ';')) r.f1_per_seed.push_back(parse_double(x));
    for (const auto& x : split_on(f[13], ';')) r.seeds.push_back(std::stoull(x));
    r.error = f[14];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace pabi
