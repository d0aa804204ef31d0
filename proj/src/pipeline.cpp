#include "paramforge/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "paramforge/error.hpp"
#include "paramforge/hashing.hpp"

namespace paramforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCacheSalt = "paramforge-stage-v1";

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

ingest::Source parse_format(const std::string& s) {
  if (s == "academic" || s == "wos") return ingest::Source::AcademicExport;
  if (s == "post" || s == "posts") return ingest::Source::PostExport;
  throw ConfigError("unknown input format \"" + s + "\" (expected academic or post)");
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string section_key(const std::string& upstream, const json& section) {
  return sha256_hex(std::string(kCacheSalt) + "\n" + upstream + "\n" + section.dump());
}

// Runs `fn`, prefixing any failure with the stage name and preserving its
// exit-code category.
template <class Fn>
auto in_stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw InvariantError(std::string("stage ") + name + ": " + e.what());
  }
}

// A cache slot: a directory holding one stage's files plus a completion
// marker. Writes go to a temporary sibling that is renamed on commit.
class StageSlot {
 public:
  StageSlot(const fs::path& root, const std::string& stage, const std::string& key)
      : dir_(root / (stage + "-" + key.substr(0, 24))), tmp_(dir_.string() + ".tmp") {}

  bool complete() const { return fs::exists(dir_ / ".complete"); }
  const fs::path& dir() const { return dir_; }
  fs::path begin() {
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
    return tmp_;
  }
  void commit() {
    write_text(tmp_ / ".complete", "");
    fs::remove_all(dir_);
    fs::rename(tmp_, dir_);
  }

 private:
  fs::path dir_;
  fs::path tmp_;
};

class ManifestBuilder {
 public:
  explicit ManifestBuilder(fs::path out_dir) : out_dir_(std::move(out_dir)) {}

  // Copies `files` (relative to `from`) into the output directory under
  // `prefix` and records them.
  void publish(const fs::path& from, const std::vector<std::string>& files,
               const std::string& prefix = "") {
    for (const auto& f : files) {
      const fs::path dest = out_dir_ / prefix / f;
      fs::create_directories(dest.parent_path());
      fs::copy_file(from / f, dest, fs::copy_options::overwrite_existing);
      record(dest);
    }
  }
  void record(const fs::path& file) {
    ManifestEntry e;
    e.path = fs::relative(file, out_dir_).generic_string();
    e.sha256 = sha256_file(file);
    e.bytes = fs::file_size(file);
    entries_.push_back(std::move(e));
  }
  const std::vector<ManifestEntry>& entries() const { return entries_; }

  fs::path write(const std::optional<std::string>& failed_stage) const {
    json artifacts = json::array();
    for (const auto& e : entries_) {
      artifacts.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    }
    json m = {{"format", 1}, {"artifacts", std::move(artifacts)}};
    if (failed_stage) m["failed_stage"] = *failed_stage;
    const fs::path path = out_dir_ / "manifest.json";
    write_text(path, m.dump(2) + "\n");
    return path;
  }

 private:
  fs::path out_dir_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace

std::vector<ingest::RawRecord> load_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ingest::RawRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(ingest::record_from_json(json::parse(line)));
  }
  return out;
}

void save_records(const std::vector<ingest::RawRecord>& records, const fs::path& path) {
  std::ostringstream jsonl;
  for (const auto& r : records) jsonl << ingest::to_json(r).dump() << '\n';
  write_text(path, jsonl.str());
}

ingest::IngestBatch ingest_inputs(const RunConfig& cfg) {
  std::vector<ingest::RawRecord> records;
  ingest::IngestStats stats;
  std::set<std::string> prefixes;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const auto& in = cfg.inputs[i];
    std::string prefix = in.path.stem().string();
    if (!prefixes.insert(prefix).second) prefix += "#" + std::to_string(i);
    const auto text = ingest::read_file(in.path);
    if (text.empty()) throw EmptyFile(in.path.string() + ": empty file");
    auto batch = in.format == ingest::Source::AcademicExport
                     ? ingest::parse_academic_csv(text, cfg.academic_columns, prefix)
                     : ingest::parse_post_csv(text, cfg.post_columns, prefix);
    stats += batch.stats;
    std::move(batch.records.begin(), batch.records.end(), std::back_inserter(records));
  }
  auto dedup = ingest::deduplicate(std::move(records));
  stats.duplicates_removed = dedup.stats.duplicates_removed;
  stats.rows_kept = dedup.stats.rows_kept;
  if (!stats.balanced()) throw InvariantError("ingest statistics do not balance");
  return {std::move(dedup.records), stats};
}

nlohmann::json to_json(const ingest::IngestStats& stats) {
  return {{"rows_read", stats.rows_read},
          {"rows_kept", stats.rows_kept},
          {"duplicates_removed", stats.duplicates_removed},
          {"empty_dropped", stats.empty_dropped}};
}

// ---------------------------------------------------------------------------
// RunConfig

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (v < 0 || item.find_first_not_of(" ", pos) != std::string::npos) throw 0;
      out.push_back(static_cast<std::size_t>(v));
    } catch (...) {
      throw ConfigError("bad k list entry \"" + item + "\"");
    }
  }
  return out;
}

std::vector<std::size_t> k_range(std::size_t k_min, std::size_t k_max, std::size_t k_step) {
  if (k_step < 1 || k_min > k_max) throw ConfigError("k range needs k_min <= k_max, k_step >= 1");
  std::vector<std::size_t> out;
  for (std::size_t k = k_min; k <= k_max; k += k_step) out.push_back(k);
  return out;
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  try {
    for (const auto& in : j.at("inputs")) {
      cfg.inputs.push_back({resolve(base_dir, in.at("path").get<std::string>()),
                            parse_format(in.value("format", std::string("academic")))});
    }
    if (j.contains("columns")) {
      const auto& c = j["columns"];
      read_opt(c, "title", cfg.academic_columns.title);
      read_opt(c, "abstract", cfg.academic_columns.abstract);
      read_opt(c, "keywords", cfg.academic_columns.keywords);
      read_opt(c, "year", cfg.academic_columns.year);
      read_opt(c, "query", cfg.post_columns.query);
      read_opt(c, "post", cfg.post_columns.post);
    }
    if (j.contains("preprocess")) {
      const auto& p = j["preprocess"];
      read_opt(p, "min_token_len", cfg.preprocess.min_token_len);
      read_opt(p, "max_token_len", cfg.preprocess.max_token_len);
      read_opt(p, "min_doc_freq", cfg.preprocess.min_doc_freq);
      read_opt(p, "keep_numeric", cfg.preprocess.keep_numeric);
      if (p.contains("stopwords") && !p["stopwords"].is_null()) {
        cfg.preprocess.stopword_path = resolve(base_dir, p["stopwords"].get<std::string>());
      }
      if (p.contains("lemma_dict") && !p["lemma_dict"].is_null()) {
        cfg.preprocess.lemma_dict_path = resolve(base_dir, p["lemma_dict"].get<std::string>());
      }
    }
    if (j.contains("lda")) {
      const auto& l = j["lda"];
      read_opt(l, "k", cfg.lda.k);
      if (l.contains("alpha") && !l["alpha"].is_null()) {
        cfg.lda.alpha = l["alpha"].get<double>();
        cfg.alpha_auto = false;
      }
      read_opt(l, "beta", cfg.lda.beta);
      read_opt(l, "sweeps", cfg.lda.sweeps);
      read_opt(l, "burn_in", cfg.lda.burn_in);
      read_opt(l, "seed", cfg.lda.seed);
      read_opt(l, "average_after_burn_in", cfg.lda.average_after_burn_in);
      read_opt(l, "full_model", cfg.full_model);
    }
    if (j.contains("sweep") && !j["sweep"].is_null()) {
      const auto& s = j["sweep"];
      SweepSpec spec;
      if (s.contains("k_list")) {
        spec.k_values = s["k_list"].is_string() ? parse_k_list(s["k_list"].get<std::string>())
                                                : s["k_list"].get<std::vector<std::size_t>>();
      } else {
        spec.k_values = k_range(s.at("k_min").get<std::size_t>(), s.at("k_max").get<std::size_t>(),
                                s.value("k_step", std::size_t{1}));
      }
      read_opt(s, "seeds", spec.seeds);
      if (s.contains("measure")) spec.measure = coherence::parse_measure(s["measure"].get<std::string>());
      cfg.sweep = std::move(spec);
    }
    if (j.contains("coherence")) {
      const auto& c = j["coherence"];
      read_opt(c, "n_top", cfg.coherence.n_top);
      read_opt(c, "window_uci", cfg.coherence.window_uci);
      read_opt(c, "window_cv", cfg.coherence.window_cv);
      read_opt(c, "epsilon", cfg.coherence.epsilon);
      read_opt(c, "gamma", cfg.coherence.gamma);
    }
    if (j.contains("report")) {
      const auto& r = j["report"];
      read_opt(r, "lambda", cfg.report.lambda);
      read_opt(r, "term_top_n", cfg.report.term_top_n);
      read_opt(r, "wordcloud_top_n", cfg.report.wordcloud_top_n);
      read_opt(r, "taxonomy_top_n", cfg.report.taxonomy_top_n);
      read_opt(r, "length_bin_width", cfg.report.length_bin_width);
    }
    if (j.contains("labels") && !j["labels"].is_null()) {
      cfg.labels = resolve(base_dir, j["labels"].get<std::string>());
    }
    if (j.contains("output_dir")) {
      cfg.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    }
    read_opt(j, "jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid run configuration: ") + e.what());
  }
  cfg.coherence.jobs = cfg.jobs;
  if (cfg.alpha_auto) cfg.lda.alpha = 50.0 / static_cast<double>(std::max<std::size_t>(1, cfg.lda.k));
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  const auto text = ingest::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  json inputs_json = json::array();
  for (const auto& in : inputs) {
    inputs_json.push_back({{"path", in.path.string()}, {"format", ingest::to_string(in.format)}});
  }
  json j;
  j["inputs"] = std::move(inputs_json);
  j["columns"] = {{"title", academic_columns.title},
                  {"abstract", academic_columns.abstract},
                  {"keywords", academic_columns.keywords},
                  {"year", academic_columns.year},
                  {"query", post_columns.query},
                  {"post", post_columns.post}};
  j["preprocess"] = {
      {"min_token_len", preprocess.min_token_len},
      {"max_token_len", preprocess.max_token_len},
      {"min_doc_freq", preprocess.min_doc_freq},
      {"keep_numeric", preprocess.keep_numeric},
      {"stopwords", preprocess.stopword_path ? json(preprocess.stopword_path->string()) : json()},
      {"lemma_dict",
       preprocess.lemma_dict_path ? json(preprocess.lemma_dict_path->string()) : json()}};
  j["lda"] = lda::to_json(lda);
  if (alpha_auto) j["lda"]["alpha"] = nullptr;
  j["lda"]["full_model"] = full_model;
  if (sweep) {
    j["sweep"] = {{"k_list", sweep->k_values},
                  {"seeds", sweep->seeds},
                  {"measure", coherence::to_string(sweep->measure)}};
  } else {
    j["sweep"] = nullptr;
  }
  j["coherence"] = {{"n_top", coherence.n_top},
                    {"window_uci", coherence.window_uci},
                    {"window_cv", coherence.window_cv},
                    {"epsilon", coherence.epsilon},
                    {"gamma", coherence.gamma}};
  j["report"] = {{"lambda", report.lambda},
                 {"term_top_n", report.term_top_n},
                 {"wordcloud_top_n", report.wordcloud_top_n},
                 {"taxonomy_top_n", report.taxonomy_top_n},
                 {"length_bin_width", report.length_bin_width}};
  j["labels"] = labels ? json(labels->string()) : json();
  j["output_dir"] = output_dir.string();
  j["jobs"] = jobs;
  return j;
}

lda::LdaConfig RunConfig::lda_config() const {
  lda::LdaConfig cfg = lda;
  if (alpha_auto) cfg.alpha = 50.0 / static_cast<double>(cfg.k);
  return cfg;
}

select::SweepConfig RunConfig::sweep_config() const {
  select::SweepConfig sc;
  if (sweep) {
    sc.k_values = sweep->k_values;
    sc.seeds_per_k = sweep->seeds;
    sc.selection_measure = sweep->measure;
  }
  sc.base = lda;
  sc.alpha_scales_with_k = alpha_auto;
  sc.coherence = coherence;
  sc.jobs = jobs;
  return sc;
}

void RunConfig::validate() const {
  if (inputs.empty()) throw ConfigError("no input files configured");
  for (const auto& in : inputs) {
    if (!fs::is_regular_file(in.path)) throw ConfigError("input file not found: " + in.path.string());
  }
  auto require_file = [](const std::optional<fs::path>& p, const char* what) {
    if (p && !fs::is_regular_file(*p)) {
      throw ConfigError(std::string(what) + " file not found: " + p->string());
    }
  };
  require_file(preprocess.stopword_path, "stopword");
  require_file(preprocess.lemma_dict_path, "lemma dictionary");
  require_file(labels, "labels");
  preprocess.validate();
  coherence.validate();
  if (!(report.lambda >= 0.0 && report.lambda <= 1.0)) throw ConfigError("lambda must be in [0, 1]");
  if (report.length_bin_width < 1) throw ConfigError("length_bin_width must be >= 1");
  if (sweep) {
    sweep_config().validate();
  } else {
    lda_config().validate();
  }
  if (labels) {
    const auto parsed = analysis::TaxonomyLabels::load(*labels);
    if (!sweep) parsed.validate(lda.k);
  }
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec || !fs::is_directory(output_dir)) {
    throw ConfigError("cannot create output directory " + output_dir.string());
  }
}

fs::path cache_root(const RunConfig& cfg) {
  if (const char* env = std::getenv("PARAMFORGE_CACHE_DIR"); env && *env) return fs::path(env);
  return cfg.output_dir / ".cache";
}

// ---------------------------------------------------------------------------
// Orchestration

RunOutcome run_pipeline(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  const fs::path root = cache_root(cfg);
  fs::create_directories(root);
  fs::remove(out / "manifest.json");

  const json full = cfg.to_json();
  auto file_hash = [](const std::optional<fs::path>& p) {
    return p ? json(sha256_file(*p)) : json();
  };

  // Keys chain: each stage folds in its upstream key and its own section.
  json ingest_section = {{"columns", full["columns"]}, {"inputs", json::array()}};
  for (const auto& in : cfg.inputs) {
    ingest_section["inputs"].push_back(
        {{"format", ingest::to_string(in.format)}, {"sha256", sha256_file(in.path)},
         {"stem", in.path.stem().string()}});
  }
  json preprocess_section = full["preprocess"];
  preprocess_section["stopwords"] = file_hash(cfg.preprocess.stopword_path);
  preprocess_section["lemma_dict"] = file_hash(cfg.preprocess.lemma_dict_path);
  json model_section = {{"lda", lda::to_json(cfg.lda_config())},
                        {"alpha_auto", cfg.alpha_auto},
                        {"full_model", cfg.full_model},
                        {"sweep", full["sweep"]},
                        {"coherence", cfg.sweep ? full["coherence"] : json()}};
  const std::string ingest_key = section_key("", ingest_section);
  const std::string preprocess_key = section_key(ingest_key, preprocess_section);
  const std::string model_key = section_key(preprocess_key, model_section);
  const std::string coherence_key = section_key(model_key, full["coherence"]);

  ManifestBuilder manifest(out);
  RunOutcome outcome;
  std::string stage = "ingest";
  auto mark_cached = [&](const char* name) {
    outcome.cached_stages.push_back(name);
    log << "[" << name << "] reusing cached output\n";
  };

  try {
    StageSlot ingest_slot(root, "ingest", ingest_key);
    in_stage("ingest", [&] {
      if (ingest_slot.complete()) return mark_cached("ingest");
      const fs::path tmp = ingest_slot.begin();
      const auto batch = ingest_inputs(cfg);
      const auto& stats = batch.stats;
      save_records(batch.records, tmp / "records.jsonl");
      write_text(tmp / "ingest_stats.json", to_json(stats).dump(2) + "\n");
      log << "[ingest] rows_read=" << stats.rows_read << " kept=" << stats.rows_kept
          << " duplicates=" << stats.duplicates_removed << " empty=" << stats.empty_dropped
          << "\n";
      ingest_slot.commit();
    });
    manifest.publish(ingest_slot.dir(), {"records.jsonl", "ingest_stats.json"}, "ingest");

    stage = "preprocess";
    StageSlot pre_slot(root, "preprocess", preprocess_key);
    const preprocess::Corpus corpus = in_stage("preprocess", [&] {
      if (pre_slot.complete()) {
        mark_cached("preprocess");
      } else {
        const fs::path tmp = pre_slot.begin();
        const auto records = load_records(ingest_slot.dir() / "records.jsonl");
        const auto built = preprocess::build_corpus(records, cfg.preprocess, cfg.jobs);
        preprocess::save_corpus(built, tmp);
        log << "[preprocess] documents=" << built.documents.size()
            << " non_empty=" << built.nonempty_documents()
            << " vocabulary=" << built.vocabulary.size() << " tokens=" << built.total_tokens
            << "\n";
        pre_slot.commit();
      }
      return preprocess::load_corpus(pre_slot.dir());
    });
    manifest.publish(pre_slot.dir(), {"vocabulary.txt", "documents.jsonl"}, "corpus");

    stage = cfg.sweep ? "sweep" : "train";
    StageSlot model_slot(root, "model", model_key);
    std::vector<std::string> model_files = {"model.json"};
    if (cfg.sweep) {
      model_files.push_back("sweep.json");
      model_files.push_back("sweep_curve.csv");
    }
    if (cfg.lda.average_after_burn_in) model_files.push_back("distributions.json");
    const lda::TrainResult trained = in_stage(stage.c_str(), [&] {
      if (model_slot.complete()) {
        mark_cached(stage.c_str());
      } else {
        const fs::path tmp = model_slot.begin();
        lda::TrainResult fresh = [&] {
          if (!cfg.sweep) return lda::train(corpus, cfg.lda_config());
          const auto sc = cfg.sweep_config();
          select::ModelCache cache;
          const auto result = select::run_sweep(corpus, sc, &cache);
          write_text(tmp / "sweep.json", select::to_json(result).dump(2) + "\n");
          write_text(tmp / "sweep_curve.csv", select::curve_csv(result));
          log << "[sweep] best_k=" << result.best_k << " seed=" << result.best_seed << "\n";
          return select::select_model(result, corpus, sc, &cache);
        }();
        write_text(tmp / "model.json",
                   lda::model_to_json(fresh.model, "corpus/vocabulary.txt", cfg.full_model)
                           .dump() +
                       "\n");
        if (cfg.lda.average_after_burn_in) {
          write_text(tmp / "distributions.json",
                     json({{"phi", fresh.dists.phi}, {"theta", fresh.dists.theta}}).dump() + "\n");
        }
        log << "[" << stage << "] k=" << fresh.model.num_topics()
            << " log_likelihood=" << lda::log_likelihood(fresh.model) << "\n";
        model_slot.commit();
      }
      auto model = lda::model_from_json(
          json::parse(ingest::read_file(model_slot.dir() / "model.json")));
      model.check_consistency(corpus);
      auto dists = lda::distributions(model);
      if (cfg.lda.average_after_burn_in) {
        const auto d = json::parse(ingest::read_file(model_slot.dir() / "distributions.json"));
        dists.phi = d.at("phi").get<std::vector<double>>();
        dists.theta = d.at("theta").get<std::vector<double>>();
      }
      return lda::TrainResult{std::move(model), std::move(dists)};
    });
    manifest.publish(model_slot.dir(), model_files);

    stage = "coherence";
    StageSlot coherence_slot(root, "coherence", coherence_key);
    in_stage("coherence", [&] {
      if (coherence_slot.complete()) return mark_cached("coherence");
      const fs::path tmp = coherence_slot.begin();
      json reports = json::array();
      for (const auto& r : coherence::score_all(corpus, trained.dists, cfg.coherence)) {
        log << "[coherence] " << coherence::to_string(r.measure) << "=" << r.aggregate << "\n";
        reports.push_back(coherence::to_json(r));
      }
      write_text(tmp / "coherence.json", reports.dump(2) + "\n");
      coherence_slot.commit();
    });
    manifest.publish(coherence_slot.dir(), {"coherence.json"});

    stage = "report";
    const auto written = in_stage("report", [&] {
      std::optional<analysis::TaxonomyLabels> labels;
      if (cfg.labels) labels = analysis::TaxonomyLabels::load(*cfg.labels);
      return analysis::write_report(out, corpus, trained.model, trained.dists, labels,
                                    cfg.report);
    });
    for (const auto& f : written) manifest.record(f);
    log << "[report] wrote " << written.size() << " files to " << out.string() << "\n";
  } catch (const Error&) {
    manifest.write(stage);
    throw;
  }

  outcome.manifest_path = manifest.write(std::nullopt);
  outcome.artifacts = manifest.entries();
  return outcome;
}

std::vector<std::string> verify_manifest(const fs::path& manifest_path) {
  const auto m = json::parse(ingest::read_file(manifest_path));
  const fs::path base = manifest_path.parent_path();
  std::vector<std::string> bad;
  for (const auto& a : m.at("artifacts")) {
    const auto rel = a.at("path").get<std::string>();
    const fs::path file = base / rel;
    if (!fs::is_regular_file(file) || sha256_file(file) != a.at("sha256").get<std::string>()) {
      bad.push_back(rel);
    }
  }
  return bad;
}

}  // namespace paramforge::pipeline
