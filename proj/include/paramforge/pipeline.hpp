#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paramforge/analysis_viz.hpp"
#include "paramforge/coherence.hpp"
#include "paramforge/corpus_ingest.hpp"
#include "paramforge/lda_gibbs.hpp"
#include "paramforge/model_select.hpp"
#include "paramforge/preprocess.hpp"

namespace paramforge::pipeline {

struct InputSpec {
  std::filesystem::path path;
  ingest::Source format = ingest::Source::AcademicExport;
};

struct SweepSpec {
  std::vector<std::size_t> k_values;
  std::size_t seeds = 1;
  coherence::Measure measure = coherence::Measure::CV;
};

struct RunConfig {
  std::vector<InputSpec> inputs;
  ingest::AcademicColumns academic_columns;
  ingest::PostColumns post_columns;
  preprocess::PreprocessConfig preprocess;
  lda::LdaConfig lda;
  // alpha = 50/k unless set explicitly.
  bool alpha_auto = true;
  bool full_model = false;
  std::optional<SweepSpec> sweep;
  coherence::Settings coherence;
  analysis::ReportSettings report;
  std::filesystem::path output_dir = "paramforge_out";
  std::optional<std::filesystem::path> labels;
  unsigned jobs = 1;

  // Relative paths are resolved against `base_dir`. Throws ConfigError on
  // unknown values or malformed structure.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Checks every referenced file and value before any compute.
  void validate() const;

  lda::LdaConfig lda_config() const;
  select::SweepConfig sweep_config() const;
};

// Accepts "2,3,5" lists.
std::vector<std::size_t> parse_k_list(const std::string& text);
std::vector<std::size_t> k_range(std::size_t k_min, std::size_t k_max, std::size_t k_step);

// Reads every configured input, concatenates in order and deduplicates.
// Record ids are "<file stem>:<row>".
ingest::IngestBatch ingest_inputs(const RunConfig& cfg);
nlohmann::json to_json(const ingest::IngestStats& stats);

// JSON Lines, one record per line.
std::vector<ingest::RawRecord> load_records(const std::filesystem::path& path);
void save_records(const std::vector<ingest::RawRecord>& records,
                  const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunOutcome {
  std::filesystem::path manifest_path;
  std::vector<ManifestEntry> artifacts;
  std::vector<std::string> cached_stages;
};

// Cache location: $PARAMFORGE_CACHE_DIR, else <output_dir>/.cache.
std::filesystem::path cache_root(const RunConfig& cfg);

// ingest -> preprocess -> (sweep | train) -> coherence -> report. Stage
// outputs are cached under keys derived from the config sections feeding
// them; manifest.json lists every artifact of completed stages with its
// SHA-256. A failing stage is rethrown with its name prefixed.
RunOutcome run_pipeline(const RunConfig& cfg, std::ostream& log);

// Re-hashes every listed artifact; returns the paths that do not match.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace paramforge::pipeline
