// paramforge command-line driver. Subcommands mirror the pipeline stages;
// `run` executes all of them from one JSON configuration.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "paramforge/error.hpp"
#include "paramforge/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace paramforge;

namespace {

// Collects "flag was given -> change the config" actions so every
// subcommand can start from a base config (defaults or --config file) and
// layer its flags on top.
class Overrides {
 public:
  template <class T>
  void add(CLI::App* app, const std::string& name, const std::string& help,
           std::function<void(pipeline::RunConfig&, const T&)> set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    actions_.push_back([opt, value, set](pipeline::RunConfig& cfg) {
      if (opt->count() > 0) set(cfg, *value);
    });
  }
  void flag(CLI::App* app, const std::string& name, const std::string& help,
            std::function<void(pipeline::RunConfig&)> set) {
    CLI::Option* opt = app->add_flag(name, help);
    actions_.push_back([opt, set](pipeline::RunConfig& cfg) {
      if (opt->count() > 0) set(cfg);
    });
  }
  void then(std::function<void(pipeline::RunConfig&)> fn) { actions_.push_back(std::move(fn)); }

  void apply(pipeline::RunConfig& cfg) const {
    for (const auto& a : actions_) a(cfg);
  }

 private:
  std::vector<std::function<void(pipeline::RunConfig&)>> actions_;
};

using Cfg = pipeline::RunConfig;

void input_flags(CLI::App* app, Overrides& o) {
  o.add<std::vector<std::string>>(app, "--academic", "academic export CSV (repeatable)",
                                  [](Cfg& c, const auto& v) {
                                    for (const auto& p : v)
                                      c.inputs.push_back({p, ingest::Source::AcademicExport});
                                  });
  o.add<std::vector<std::string>>(app, "--posts", "post export CSV (repeatable)",
                                  [](Cfg& c, const auto& v) {
                                    for (const auto& p : v)
                                      c.inputs.push_back({p, ingest::Source::PostExport});
                                  });
  o.add<std::string>(app, "--title-col", "title column",
                     [](Cfg& c, const auto& v) { c.academic_columns.title = v; });
  o.add<std::string>(app, "--abstract-col", "abstract column",
                     [](Cfg& c, const auto& v) { c.academic_columns.abstract = v; });
  o.add<std::string>(app, "--keywords-col", "author keywords column",
                     [](Cfg& c, const auto& v) { c.academic_columns.keywords = v; });
  o.add<std::string>(app, "--year-col", "publication year column",
                     [](Cfg& c, const auto& v) { c.academic_columns.year = v; });
  o.add<std::string>(app, "--query-col", "post query column",
                     [](Cfg& c, const auto& v) { c.post_columns.query = v; });
  o.add<std::string>(app, "--post-col", "post text column",
                     [](Cfg& c, const auto& v) { c.post_columns.post = v; });
}

void preprocess_flags(CLI::App* app, Overrides& o) {
  o.add<std::string>(app, "--stopwords", "stopword file (default: built-in English list)",
                     [](Cfg& c, const auto& v) { c.preprocess.stopword_path = v; });
  o.add<std::string>(app, "--lemma-dict", "lemma dictionary (surface<TAB>lemma)",
                     [](Cfg& c, const auto& v) { c.preprocess.lemma_dict_path = v; });
  o.add<std::size_t>(app, "--min-len", "minimum token length",
                     [](Cfg& c, const auto& v) { c.preprocess.min_token_len = v; });
  o.add<std::size_t>(app, "--max-len", "maximum token length",
                     [](Cfg& c, const auto& v) { c.preprocess.max_token_len = v; });
  o.add<std::size_t>(app, "--min-df", "minimum document frequency",
                     [](Cfg& c, const auto& v) { c.preprocess.min_doc_freq = v; });
  o.flag(app, "--keep-numeric", "keep all-digit tokens",
         [](Cfg& c) { c.preprocess.keep_numeric = true; });
}

void lda_flags(CLI::App* app, Overrides& o) {
  o.add<std::size_t>(app, "-k,--topics", "number of topics",
                     [](Cfg& c, const auto& v) { c.lda.k = v; });
  o.add<double>(app, "--alpha", "document-topic prior (default 50/k)", [](Cfg& c, const auto& v) {
    c.lda.alpha = v;
    c.alpha_auto = false;
  });
  o.add<double>(app, "--beta", "topic-word prior", [](Cfg& c, const auto& v) { c.lda.beta = v; });
  o.add<std::size_t>(app, "--sweeps", "Gibbs sweeps",
                     [](Cfg& c, const auto& v) { c.lda.sweeps = v; });
  o.add<std::size_t>(app, "--burn-in", "burn-in sweeps",
                     [](Cfg& c, const auto& v) { c.lda.burn_in = v; });
  o.add<std::uint64_t>(app, "--seed", "random seed", [](Cfg& c, const auto& v) { c.lda.seed = v; });
  o.flag(app, "--average", "average phi/theta over post-burn-in sweeps",
         [](Cfg& c) { c.lda.average_after_burn_in = true; });
  o.flag(app, "--full-model", "always store topic assignments in the model file",
         [](Cfg& c) { c.full_model = true; });
}

void sweep_flags(CLI::App* app, Overrides& o, bool always_sweep) {
  struct Range {
    std::size_t min = 0, max = 0, step = 1;
    bool min_set = false, max_set = false;
  };
  auto range = std::make_shared<Range>();
  auto ensure = [](Cfg& c) {
    if (!c.sweep) c.sweep = pipeline::SweepSpec{};
  };
  o.add<std::size_t>(app, "--k-min", "smallest k", [range](Cfg&, const auto& v) {
    range->min = v;
    range->min_set = true;
  });
  o.add<std::size_t>(app, "--k-max", "largest k", [range](Cfg&, const auto& v) {
    range->max = v;
    range->max_set = true;
  });
  o.add<std::size_t>(app, "--k-step", "k increment",
                     [range](Cfg&, const auto& v) { range->step = v; });
  o.then([range, ensure](Cfg& c) {
    if (range->min_set != range->max_set) {
      throw ConfigError("--k-min and --k-max must be given together");
    }
    if (range->min_set) {
      ensure(c);
      c.sweep->k_values = pipeline::k_range(range->min, range->max, range->step);
    }
  });
  o.add<std::string>(app, "--k-list", "comma-separated k values", [ensure](Cfg& c, const auto& v) {
    ensure(c);
    c.sweep->k_values = pipeline::parse_k_list(v);
  });
  o.add<std::size_t>(app, "--seeds", "seeds per k", [ensure](Cfg& c, const auto& v) {
    ensure(c);
    c.sweep->seeds = v;
  });
  o.add<std::string>(app, "--measure", "selection measure (c_v, c_uci, c_umass, c_npmi)",
                     [ensure](Cfg& c, const auto& v) {
                       ensure(c);
                       c.sweep->measure = coherence::parse_measure(v);
                     });
  if (!always_sweep) {
    o.flag(app, "--no-sweep", "train a single k even if the config has a sweep",
           [](Cfg& c) { c.sweep.reset(); });
  }
}

void coherence_flags(CLI::App* app, Overrides& o) {
  o.add<std::size_t>(app, "--top-n", "top words per topic",
                     [](Cfg& c, const auto& v) { c.coherence.n_top = v; });
  o.add<std::size_t>(app, "--window-uci", "sliding window for c_uci/c_npmi",
                     [](Cfg& c, const auto& v) { c.coherence.window_uci = v; });
  o.add<std::size_t>(app, "--window-cv", "sliding window for c_v",
                     [](Cfg& c, const auto& v) { c.coherence.window_cv = v; });
  o.add<double>(app, "--epsilon", "smoothing constant",
                [](Cfg& c, const auto& v) { c.coherence.epsilon = v; });
  o.add<double>(app, "--gamma", "c_v context vector exponent",
                [](Cfg& c, const auto& v) { c.coherence.gamma = v; });
}

void report_flags(CLI::App* app, Overrides& o) {
  o.add<std::string>(app, "--labels", "taxonomy labels JSON",
                     [](Cfg& c, const auto& v) { c.labels = v; });
  o.add<double>(app, "--lambda", "term relevance weight",
                [](Cfg& c, const auto& v) { c.report.lambda = v; });
  o.add<std::size_t>(app, "--term-top-n", "terms per topic in term_scores.json",
                     [](Cfg& c, const auto& v) { c.report.term_top_n = v; });
  o.add<std::size_t>(app, "--wordcloud-top-n", "words per word cloud",
                     [](Cfg& c, const auto& v) { c.report.wordcloud_top_n = v; });
  o.add<std::size_t>(app, "--taxonomy-top-n", "keywords per taxonomy row",
                     [](Cfg& c, const auto& v) { c.report.taxonomy_top_n = v; });
  o.add<std::size_t>(app, "--length-bin-width", "document length histogram bin width",
                     [](Cfg& c, const auto& v) { c.report.length_bin_width = v; });
}

void jobs_flag(CLI::App* app, Overrides& o) {
  o.add<unsigned>(app, "-j,--jobs", "worker threads", [](Cfg& c, const auto& v) {
    c.jobs = v;
    c.coherence.jobs = v;
  });
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

struct ModelInputs {
  preprocess::Corpus corpus;
  lda::LdaModel model;
  lda::TopicDistributions dists;
};

ModelInputs load_model(const std::string& corpus_dir, const std::string& model_path) {
  auto corpus = preprocess::load_corpus(corpus_dir);
  json j;
  try {
    j = json::parse(ingest::read_file(model_path));
  } catch (const json::parse_error& e) {
    throw DataError(model_path + ": " + e.what());
  }
  auto model = lda::model_from_json(j);
  if (model.vocab_size() != corpus.vocabulary.size() ||
      model.num_docs() != corpus.documents.size()) {
    throw DataError("model " + model_path + " does not match corpus " + corpus_dir);
  }
  model.check_consistency(corpus);
  auto dists = lda::distributions(model);
  return {std::move(corpus), std::move(model), std::move(dists)};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Data:
      return 3;
    case ErrorKind::Invariant:
      return 4;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paramforge: topic-model parameter discovery over text corpora"};
  app.require_subcommand(1);
  Overrides o;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "read CSV exports, dump deduplicated records");
  std::string ingest_out;
  input_flags(ingest_cmd, o);
  ingest_cmd->add_option("-o,--out", ingest_out, "records JSON Lines (default stdout)");

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "tokenize records into a corpus");
  std::string records_path, pre_out;
  pre_cmd->add_option("--records", records_path, "records JSON Lines")->required();
  pre_cmd->add_option("-o,--out", pre_out, "corpus directory")->required();
  preprocess_flags(pre_cmd, o);
  jobs_flag(pre_cmd, o);

  // train
  auto* train_cmd = app.add_subcommand("train", "fit one LDA model by collapsed Gibbs sampling");
  std::string corpus_dir, train_out;
  train_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train_cmd->add_option("-o,--out", train_out, "model file")->required();
  lda_flags(train_cmd, o);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "train over a k grid and pick k by coherence");
  std::string sweep_corpus, sweep_out;
  sweep_cmd->add_option("--corpus", sweep_corpus, "corpus directory")->required();
  sweep_cmd->add_option("-o,--out", sweep_out, "output directory")->required();
  lda_flags(sweep_cmd, o);
  sweep_flags(sweep_cmd, o, true);
  coherence_flags(sweep_cmd, o);
  jobs_flag(sweep_cmd, o);

  // coherence
  auto* coh_cmd = app.add_subcommand("coherence", "score a model's topics");
  std::string coh_corpus, coh_model, coh_measure = "all", coh_out;
  coh_cmd->add_option("--corpus", coh_corpus, "corpus directory")->required();
  coh_cmd->add_option("--model", coh_model, "model file")->required();
  coh_cmd->add_option("--measure", coh_measure, "c_v, c_uci, c_umass, c_npmi or all");
  coh_cmd->add_option("-o,--out", coh_out, "report JSON (default stdout)");
  coherence_flags(coh_cmd, o);
  jobs_flag(coh_cmd, o);

  // report
  auto* rep_cmd = app.add_subcommand("report", "write the visualization bundle");
  std::string rep_corpus, rep_model, rep_out;
  rep_cmd->add_option("--corpus", rep_corpus, "corpus directory")->required();
  rep_cmd->add_option("--model", rep_model, "model file")->required();
  rep_cmd->add_option("-o,--out", rep_out, "output directory")->required();
  report_flags(rep_cmd, o);

  // run
  auto* run_cmd = app.add_subcommand("run", "full pipeline from a JSON configuration");
  std::string config_path, run_out;
  bool print_config = false;
  run_cmd->add_option("-c,--config", config_path, "run configuration JSON");
  run_cmd->add_option("-o,--output-dir", run_out, "output directory");
  run_cmd->add_flag("--print-config", print_config, "print the effective configuration and exit");
  input_flags(run_cmd, o);
  preprocess_flags(run_cmd, o);
  lda_flags(run_cmd, o);
  sweep_flags(run_cmd, o, false);
  coherence_flags(run_cmd, o);
  report_flags(run_cmd, o);
  jobs_flag(run_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Cfg cfg;
    if (*run_cmd && !config_path.empty()) {
      cfg = Cfg::load(config_path);
      // Inputs given on the command line replace the configured ones.
      if (run_cmd->count("--academic") + run_cmd->count("--posts") > 0) cfg.inputs.clear();
    }
    o.apply(cfg);
    if (cfg.alpha_auto) cfg.lda.alpha = 50.0 / static_cast<double>(std::max<std::size_t>(1, cfg.lda.k));

    if (*ingest_cmd) {
      if (cfg.inputs.empty()) throw ConfigError("give at least one --academic or --posts file");
      for (const auto& in : cfg.inputs) {
        if (!fs::is_regular_file(in.path)) throw ConfigError("input file not found: " + in.path.string());
      }
      const auto batch = pipeline::ingest_inputs(cfg);
      if (ingest_out.empty() || ingest_out == "-") {
        for (const auto& r : batch.records) std::cout << ingest::to_json(r).dump() << '\n';
      } else {
        pipeline::save_records(batch.records, ingest_out);
      }
      std::cerr << pipeline::to_json(batch.stats).dump() << '\n';
    } else if (*pre_cmd) {
      cfg.preprocess.validate();
      const auto records = pipeline::load_records(records_path);
      const auto corpus = preprocess::build_corpus(records, cfg.preprocess, cfg.jobs);
      preprocess::save_corpus(corpus, pre_out);
      std::cerr << "documents=" << corpus.documents.size()
                << " vocabulary=" << corpus.vocabulary.size()
                << " tokens=" << corpus.total_tokens << '\n';
    } else if (*train_cmd) {
      const auto lda_cfg = cfg.lda_config();
      lda_cfg.validate();
      const auto corpus = preprocess::load_corpus(corpus_dir);
      const auto result = lda::train(corpus, lda_cfg);
      const auto vocab_ref = (fs::path(corpus_dir) / "vocabulary.txt").generic_string();
      write_file(train_out, lda::model_to_json(result.model, vocab_ref, cfg.full_model).dump() + "\n");
      std::cerr << "k=" << lda_cfg.k << " log_likelihood=" << lda::log_likelihood(result.model)
                << '\n';
    } else if (*sweep_cmd) {
      if (!cfg.sweep || cfg.sweep->k_values.empty()) {
        throw ConfigError("give --k-list or --k-min/--k-max");
      }
      const auto sc = cfg.sweep_config();
      sc.validate();
      const auto corpus = preprocess::load_corpus(sweep_corpus);
      select::ModelCache cache;
      const auto result = select::run_sweep(corpus, sc, &cache);
      const auto best = select::select_model(result, corpus, sc, &cache);
      const fs::path out(sweep_out);
      write_file(out / "sweep.json", select::to_json(result).dump(2) + "\n");
      write_file(out / "sweep_curve.csv", select::curve_csv(result));
      const auto vocab_ref = (fs::path(sweep_corpus) / "vocabulary.txt").generic_string();
      write_file(out / "model.json", lda::model_to_json(best.model, vocab_ref, cfg.full_model).dump() + "\n");
      std::cerr << "best_k=" << result.best_k << " seed=" << result.best_seed << '\n';
    } else if (*coh_cmd) {
      cfg.coherence.validate();
      const auto in = load_model(coh_corpus, coh_model);
      json out;
      if (coh_measure == "all") {
        out = json::array();
        for (const auto& r : coherence::score_all(in.corpus, in.dists, cfg.coherence)) {
          out.push_back(coherence::to_json(r));
        }
      } else {
        out = coherence::to_json(coherence::score_model(
            in.corpus, in.dists, coherence::parse_measure(coh_measure), cfg.coherence));
      }
      emit(coh_out, out.dump(2) + "\n");
    } else if (*rep_cmd) {
      const auto in = load_model(rep_corpus, rep_model);
      std::optional<analysis::TaxonomyLabels> labels;
      if (cfg.labels) {
        if (!fs::is_regular_file(*cfg.labels)) {
          throw ConfigError("labels file not found: " + cfg.labels->string());
        }
        labels = analysis::TaxonomyLabels::load(*cfg.labels);
      }
      for (const auto& p : analysis::write_report(rep_out, in.corpus, in.model, in.dists, labels,
                                                  cfg.report)) {
        std::cerr << p.string() << '\n';
      }
    } else if (*run_cmd) {
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (print_config) {
        std::cout << cfg.to_json().dump(2) << '\n';
        return 0;
      }
      const auto outcome = pipeline::run_pipeline(cfg, std::cerr);
      std::cout << outcome.manifest_path.string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
