#include "pabi/dataio.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "pabi/random.hpp"

namespace pabi {

LabelSet infer_labels(const std::vector<std::string>& observed) {
  std::set<std::string> distinct(observed.begin(), observed.end());
  std::set<std::string> types;
  bool bio = true, unnamed = false;
  for (const auto& name : distinct) {
    if (name == "O") continue;
    if (name == "B" || name == "I") unnamed = true;
    else if (name.size() > 2 && (name[0] == 'B' || name[0] == 'I') && name[1] == '-') types.insert(name.substr(2));
    else bio = false;
  }
  if (bio && !(unnamed && !types.empty())) {
    if (types.empty()) return LabelSet({"B", "I", "O"});
    std::vector<std::string> names;
    for (const auto& t : types) names.push_back("B-" + t);
    for (const auto& t : types) names.push_back("I-" + t);
    names.push_back("O");
    return LabelSet(std::move(names));
  }
  if (distinct.size() < 2) throw Error(ErrorCode::ParseError, "corpus uses fewer than two labels");
  return LabelSet(std::vector<std::string>(distinct.begin(), distinct.end()));
}

TagDataset read_conll(std::istream& in, const LabelSet* labels) {
  struct RawSentence {
    Sentence sent;
    std::vector<std::string> tags;
    bool has_extra = false;
  };
  std::vector<RawSentence> raw;
  RawSentence cur;
  std::vector<std::string> observed;
  auto flush = [&] {
    if (cur.sent.tokens.empty()) return;
    if (!cur.has_extra) cur.sent.extra.clear();
    raw.push_back(std::move(cur));
    cur = RawSentence{};
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() < 2) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected token<TAB>tag");
    if (cols.front().empty() || cols.back().empty())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty token or tag");
    cur.sent.tokens.push_back(cols.front());
    cur.sent.extra.emplace_back(cols.begin() + 1, cols.end() - 1);
    if (cols.size() > 2) cur.has_extra = true;
    cur.tags.push_back(cols.back());
    if (cols.back() != kUnknownTag) observed.push_back(cols.back());
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failure");
  flush();
  if (raw.empty()) throw Error(ErrorCode::EmptyCorpus, "no sentences in corpus");

  const LabelSet label_set = labels ? *labels : infer_labels(observed);
  std::vector<Sentence> sentences;
  sentences.reserve(raw.size());
  for (auto& r : raw) {
    for (const auto& tag : r.tags) {
      if (tag == kUnknownTag) {
        r.sent.tags.emplace_back();
      } else {
        auto idx = label_set.find(tag);
        if (!idx) throw Error(ErrorCode::UnmappedLabel, "tag '" + tag + "' is not in the label set");
        r.sent.tags.emplace_back(*idx);
      }
    }
    sentences.push_back(std::move(r.sent));
  }
  return TagDataset(std::move(sentences), label_set);
}

TagDataset read_conll(const std::string& path, const LabelSet* labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return read_conll(in, labels);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_conll(const TagDataset& data, std::ostream& out) {
  for (const auto& sent : data.sentences()) {
    for (std::size_t t = 0; t < sent.size(); ++t) {
      out << sent.tokens[t];
      if (!sent.extra.empty())
        for (const auto& col : sent.extra[t]) out << '\t' << col;
      out << '\t' << (sent.tags[t] ? data.labels()[*sent.tags[t]] : std::string(kUnknownTag)) << '\n';
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failure");
}

void write_conll(const TagDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  write_conll(data, out);
}

std::vector<TagDataset> split(const TagDataset& data, const std::vector<double>& fractions, std::uint64_t seed) {
  if (fractions.empty()) throw Error(ErrorCode::OutOfRange, "split needs at least one fraction");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::OutOfRange, "split fractions must lie in [0,1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::OutOfRange, "split fractions must sum to 1");
  if (data.size() < fractions.size()) throw Error(ErrorCode::OutOfRange, "fewer sentences than parts");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);

  std::vector<TagDataset> parts;
  double cumulative = 0.0;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    cumulative += fractions[i];
    const std::size_t end = i + 1 == fractions.size()
                                ? data.size()
                                : static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(data.size())));
    if (end <= begin) throw Error(ErrorCode::OutOfRange, "split part " + std::to_string(i) + " would be empty");
    parts.push_back(data.subset(std::vector<std::size_t>(order.begin() + begin, order.begin() + end)));
    begin = end;
  }
  return parts;
}

std::size_t SweepGrid::cardinality() const {
  return partial.size() + noisy.size() + mixed_partial.size() * mixed_noisy.size() + partial_bio.size() +
         (bio_constraint ? 1 : 0) + auxiliary.size() + cross_sentence_k.size();
}

std::string_view to_string(ReportFormat format) noexcept { return format == ReportFormat::Json ? "json" : "csv"; }

ReportFormat parse_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorCode::ConfigError, "report format must be csv or json, got '" + std::string(name) + "'");
}

namespace {

// Collects every problem instead of stopping at the first.
class ConfigReader {
 public:
  std::vector<std::string> errors;

  template <typename T>
  void get(const YAML::Node& parent, const std::string& key, const std::string& path, T& out) {
    const YAML::Node node = parent[key];
    if (!node) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      errors.push_back(path + ": cannot read value");
    }
  }

  void known(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> keys) {
    if (!node) return;
    if (!node.IsMap()) {
      errors.push_back(path + ": expected a mapping");
      return;
    }
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end())
        errors.push_back((path.empty() ? k : path + "." + k) + ": unknown field");
    }
  }

  void rates(const std::vector<double>& v, const std::string& path) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] >= 0.0 && v[i] <= 1.0))
        errors.push_back(path + "[" + std::to_string(i) + "] = " + format(v[i]) + " is outside [0,1]");
  }

  static std::string format(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
};

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw Error(ErrorCode::ConfigError, "config must be a mapping");

  RunConfig c;
  ConfigReader r;
  r.known(root, "", {"paths", "corpus", "grid", "tagger", "seeds", "sample_size", "report", "workers"});

  const YAML::Node paths = root["paths"];
  r.known(paths, "paths", {"gold", "incidental", "test", "output"});
  if (paths) {
    r.get(paths, "gold", "paths.gold", c.gold_path);
    r.get(paths, "incidental", "paths.incidental", c.incidental_path);
    r.get(paths, "test", "paths.test", c.test_path);
    r.get(paths, "output", "paths.output", c.output_dir);
  }
  const bool any_path = !c.gold_path.empty() || !c.incidental_path.empty() || !c.test_path.empty();
  if (any_path) {
    if (c.gold_path.empty()) r.errors.push_back("paths.gold: required when corpus files are given");
    if (c.incidental_path.empty()) r.errors.push_back("paths.incidental: required when corpus files are given");
    if (c.test_path.empty()) r.errors.push_back("paths.test: required when corpus files are given");
  }
  c.gold_path = resolve(c.gold_path, base_dir);
  c.incidental_path = resolve(c.incidental_path, base_dir);
  c.test_path = resolve(c.test_path, base_dir);
  c.output_dir = resolve(c.output_dir, base_dir);

  const YAML::Node corpus = root["corpus"];
  r.known(corpus, "corpus", {"seed", "gold_sentences", "incidental_sentences", "test_sentences"});
  if (corpus) {
    r.get(corpus, "seed", "corpus.seed", c.synthetic.seed);
    r.get(corpus, "gold_sentences", "corpus.gold_sentences", c.synthetic.gold_sentences);
    r.get(corpus, "incidental_sentences", "corpus.incidental_sentences", c.synthetic.incidental_sentences);
    r.get(corpus, "test_sentences", "corpus.test_sentences", c.synthetic.test_sentences);
    if (c.synthetic.gold_sentences == 0 || c.synthetic.incidental_sentences == 0 || c.synthetic.test_sentences == 0)
      r.errors.push_back("corpus: sentence counts must be positive");
  }

  const YAML::Node grid = root["grid"];
  r.known(grid, "grid", {"partial", "noisy", "mixed", "partial_bio", "bio_constraint", "auxiliary", "cross_sentence",
                         "coarse_groups"});
  if (!grid) {
    r.errors.push_back("grid: required");
  } else {
    r.get(grid, "partial", "grid.partial", c.grid.partial);
    r.get(grid, "noisy", "grid.noisy", c.grid.noisy);
    r.get(grid, "partial_bio", "grid.partial_bio", c.grid.partial_bio);
    r.get(grid, "bio_constraint", "grid.bio_constraint", c.grid.bio_constraint);
    r.get(grid, "auxiliary", "grid.auxiliary", c.grid.auxiliary);
    r.get(grid, "coarse_groups", "grid.coarse_groups", c.coarse_groups);
    const YAML::Node mixed = grid["mixed"];
    r.known(mixed, "grid.mixed", {"partial", "noisy"});
    if (mixed) {
      r.get(mixed, "partial", "grid.mixed.partial", c.grid.mixed_partial);
      r.get(mixed, "noisy", "grid.mixed.noisy", c.grid.mixed_noisy);
      if (c.grid.mixed_partial.empty() != c.grid.mixed_noisy.empty())
        r.errors.push_back("grid.mixed: needs both partial and noisy lists");
    }
    const YAML::Node cross = grid["cross_sentence"];
    r.known(cross, "grid.cross_sentence", {"k", "min_count"});
    if (cross) {
      r.get(cross, "k", "grid.cross_sentence.k", c.grid.cross_sentence_k);
      r.get(cross, "min_count", "grid.cross_sentence.min_count", c.grid.cross_sentence_min_count);
      for (std::size_t k : c.grid.cross_sentence_k)
        if (k == 0) r.errors.push_back("grid.cross_sentence.k: values must be at least 1");
      if (c.grid.cross_sentence_min_count == 0) r.errors.push_back("grid.cross_sentence.min_count: must be at least 1");
    }
    r.rates(c.grid.partial, "grid.partial");
    r.rates(c.grid.noisy, "grid.noisy");
    r.rates(c.grid.mixed_partial, "grid.mixed.partial");
    r.rates(c.grid.mixed_noisy, "grid.mixed.noisy");
    r.rates(c.grid.partial_bio, "grid.partial_bio");
    for (std::size_t i = 0; i < c.grid.auxiliary.size(); ++i)
      if (c.grid.auxiliary[i] != "detection" && c.grid.auxiliary[i] != "coarse")
        r.errors.push_back("grid.auxiliary[" + std::to_string(i) + "] = '" + c.grid.auxiliary[i] +
                           "' must be detection or coarse");
    if (c.grid.cardinality() == 0) r.errors.push_back("grid: no cells");
  }

  const YAML::Node tagger = root["tagger"];
  r.known(tagger, "tagger", {"window", "hash_bits", "hash_seed", "epochs", "learning_rate", "iterations", "prior_weight"});
  if (tagger) {
    r.get(tagger, "window", "tagger.window", c.tagger.window);
    r.get(tagger, "hash_bits", "tagger.hash_bits", c.tagger.hash_bits);
    r.get(tagger, "hash_seed", "tagger.hash_seed", c.tagger.hash_seed);
    r.get(tagger, "epochs", "tagger.epochs", c.tagger.epochs);
    r.get(tagger, "learning_rate", "tagger.learning_rate", c.tagger.learning_rate);
    r.get(tagger, "iterations", "tagger.iterations", c.tagger.iterations);
    r.get(tagger, "prior_weight", "tagger.prior_weight", c.tagger.prior_weight);
    try {
      validate(c.tagger);
    } catch (const Error& e) {
      r.errors.push_back(e.what());
    }
  }

  const YAML::Node seeds = root["seeds"];
  r.known(seeds, "seeds", {"master", "replicates"});
  if (seeds) {
    r.get(seeds, "master", "seeds.master", c.seed);
    r.get(seeds, "replicates", "seeds.replicates", c.replicates);
    if (c.replicates == 0) r.errors.push_back("seeds.replicates: must be at least 1");
  }
  c.tagger.seed = c.seed;

  r.get(root, "sample_size", "sample_size", c.sample_size);
  if (c.sample_size == 0) r.errors.push_back("sample_size: must be at least 1");

  const YAML::Node report = root["report"];
  r.known(report, "report", {"format"});
  if (report) {
    std::string format = "csv";
    r.get(report, "format", "report.format", format);
    try {
      c.format = parse_format(format);
    } catch (const Error&) {
      r.errors.push_back("report.format: must be csv or json");
    }
  }
  r.get(root, "workers", "workers", c.workers);
  if (c.workers == 0) r.errors.push_back("workers: must be at least 1");

  if (!r.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : r.errors) msg += "\n  " + e;
    throw Error(ErrorCode::ConfigError, msg);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::filesystem::path(path).parent_path().string());
}

std::vector<SignalSpec> grid_specs(const RunConfig& config, const LabelSet& labels) {
  std::vector<SignalSpec> specs;
  auto add = [&](SignalFamily family, std::map<std::string, double> params, LabelMapping mapping = {}) {
    SignalSpec s;
    s.family = family;
    s.params = std::move(params);
    s.mapping = std::move(mapping);
    specs.push_back(std::move(s));
  };
  const SweepGrid& g = config.grid;
  for (double r : g.partial) add(SignalFamily::Partial, {{"eta_p", r}});
  for (double r : g.noisy) add(SignalFamily::Noisy, {{"eta_n", r}});
  for (double p : g.mixed_partial)
    for (double n : g.mixed_noisy) add(SignalFamily::Mixed, {{"eta_p", p}, {"eta_n", n}});
  for (double r : g.partial_bio) add(SignalFamily::PartialBio, {{"eta_p", r}});
  if (g.bio_constraint) add(SignalFamily::BioConstraint, {});
  for (const auto& a : g.auxiliary) {
    if (a == "detection") add(SignalFamily::AuxiliaryDetection, {}, detection_mapping(labels));
    else add(SignalFamily::AuxiliaryCoarse, {}, coarse_mapping(labels, config.coarse_groups));
  }
  for (std::size_t k : g.cross_sentence_k)
    add(SignalFamily::CrossSentence,
        {{"k", static_cast<double>(k)}, {"min_count", static_cast<double>(g.cross_sentence_min_count)}});
  for (auto& s : specs) s.seed = mix_seed(config.seed, fnv1a(to_string(s.family)));
  return specs;
}

}  // namespace pabi
