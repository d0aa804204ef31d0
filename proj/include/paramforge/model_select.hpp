#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "paramforge/coherence.hpp"
#include "paramforge/lda_gibbs.hpp"

namespace paramforge::select {

using coherence::Measure;
using preprocess::Corpus;

struct SweepConfig {
  std::vector<std::size_t> k_values;
  std::size_t seeds_per_k = 1;
  // Template for every cell; k and seed are overwritten per cell (seed of
  // replicate s is base.seed + s).
  lda::LdaConfig base;
  // alpha = 50/k per cell instead of base.alpha.
  bool alpha_scales_with_k = true;
  Measure selection_measure = Measure::CV;
  coherence::Settings coherence;
  unsigned jobs = 1;

  void validate() const;
  lda::LdaConfig cell_config(std::size_t k, std::size_t replicate) const;
};

struct SweepCell {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  // Aggregate score per measure, indexed like coherence::kAllMeasures.
  std::array<double, 4> scores{};
  std::size_t overlap_count = 0;

  double score(Measure m) const;
};

struct CurvePoint {
  std::size_t k = 0;
  double mean_score = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> rows;
  Measure selection_measure = Measure::CV;
  std::size_t best_k = 0;
  std::uint64_t best_seed = 0;
  std::map<Measure, std::vector<CurvePoint>> curve;
};

// Mean over successful seeds per (measure, k); k without a successful cell
// is left out.
std::map<Measure, std::vector<CurvePoint>> build_curves(const std::vector<SweepCell>& rows);

// Highest mean selection score; equal means go to the smaller k. The seed
// is the best-scoring successful replicate at that k (lowest seed on ties).
std::pair<std::size_t, std::uint64_t> choose_best(const std::vector<SweepCell>& rows,
                                                  Measure selection);

// Thread-safe store of trained cells keyed by (k, seed).
class ModelCache {
 public:
  void put(std::size_t k, std::uint64_t seed, std::shared_ptr<const lda::TrainResult> model);
  std::shared_ptr<const lda::TrainResult> get(std::size_t k, std::uint64_t seed) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::shared_ptr<const lda::TrainResult>>
      models_;
};

// Trains and scores every (k, seed) cell. Failed cells are recorded; throws
// DataError only if every cell fails.
SweepResult run_sweep(const Corpus& corpus, const SweepConfig& cfg, ModelCache* cache = nullptr);

// The model at (best_k, best_seed): from the cache when present, otherwise
// retrained deterministically from the same cell configuration.
lda::TrainResult select_model(const SweepResult& result, const Corpus& corpus,
                              const SweepConfig& cfg, const ModelCache* cache = nullptr);

nlohmann::json to_json(const SweepResult& result);
// Columns measure,k,mean_score.
std::string curve_csv(const SweepResult& result);

}  // namespace paramforge::select
