#include "paramforge/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "paramforge/analysis_viz.hpp"
#include "paramforge/error.hpp"
#include "paramforge/parallel.hpp"

namespace paramforge::select {

namespace {

std::size_t measure_index(Measure m) {
  for (std::size_t i = 0; i < coherence::kAllMeasures.size(); ++i) {
    if (coherence::kAllMeasures[i] == m) return i;
  }
  throw InvariantError("unknown measure");
}

}  // namespace

void SweepConfig::validate() const {
  if (k_values.empty()) throw InvalidConfig("k_values is empty");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] < 2) throw InvalidConfig("every candidate k must be >= 2");
    if (i > 0 && k_values[i] <= k_values[i - 1]) {
      throw InvalidConfig("k_values must be strictly increasing");
    }
  }
  if (seeds_per_k < 1) throw InvalidConfig("seeds_per_k must be >= 1");
  coherence.validate();
  cell_config(k_values.front(), 0).validate();
}

lda::LdaConfig SweepConfig::cell_config(std::size_t k, std::size_t replicate) const {
  lda::LdaConfig cfg = base;
  cfg.k = k;
  cfg.seed = base.seed + replicate;
  if (alpha_scales_with_k) cfg.alpha = 50.0 / static_cast<double>(k);
  return cfg;
}

double SweepCell::score(Measure m) const { return scores[measure_index(m)]; }

std::map<Measure, std::vector<CurvePoint>> build_curves(const std::vector<SweepCell>& rows) {
  std::map<Measure, std::vector<CurvePoint>> curves;
  std::map<std::size_t, std::vector<const SweepCell*>> by_k;
  for (const auto& r : rows) {
    if (r.ok) by_k[r.k].push_back(&r);
  }
  for (Measure m : coherence::kAllMeasures) {
    auto& curve = curves[m];
    for (const auto& [k, cells] : by_k) {
      double sum = 0.0;
      for (const auto* c : cells) sum += c->score(m);
      curve.push_back({k, sum / static_cast<double>(cells.size())});
    }
  }
  return curves;
}

std::pair<std::size_t, std::uint64_t> choose_best(const std::vector<SweepCell>& rows,
                                                  Measure selection) {
  const auto curves = build_curves(rows);
  const auto& curve = curves.at(selection);
  if (curve.empty()) throw DataError("no successful sweep cell to select from");

  const CurvePoint* best = &curve.front();
  for (const auto& p : curve) {
    if (p.mean_score > best->mean_score) best = &p;  // ascending k: ties keep smaller k
  }
  const SweepCell* cell = nullptr;
  for (const auto& r : rows) {
    if (!r.ok || r.k != best->k) continue;
    if (!cell || r.score(selection) > cell->score(selection) ||
        (r.score(selection) == cell->score(selection) && r.seed < cell->seed)) {
      cell = &r;
    }
  }
  return {best->k, cell->seed};
}

void ModelCache::put(std::size_t k, std::uint64_t seed,
                     std::shared_ptr<const lda::TrainResult> model) {
  std::lock_guard lock(mu_);
  models_[{k, seed}] = std::move(model);
}

std::shared_ptr<const lda::TrainResult> ModelCache::get(std::size_t k,
                                                        std::uint64_t seed) const {
  std::lock_guard lock(mu_);
  auto it = models_.find({k, seed});
  return it == models_.end() ? nullptr : it->second;
}

std::size_t ModelCache::size() const {
  std::lock_guard lock(mu_);
  return models_.size();
}

SweepResult run_sweep(const Corpus& corpus, const SweepConfig& cfg, ModelCache* cache) {
  cfg.validate();
  SweepResult result;
  result.selection_measure = cfg.selection_measure;
  for (std::size_t k : cfg.k_values) {
    for (std::size_t s = 0; s < cfg.seeds_per_k; ++s) {
      SweepCell cell;
      cell.k = k;
      cell.seed = cfg.base.seed + s;
      result.rows.push_back(cell);
    }
  }

  coherence::Settings cell_coherence = cfg.coherence;
  cell_coherence.jobs = 1;
  parallel_for_dynamic(result.rows.size(), cfg.jobs, [&](std::size_t i) {
    auto& cell = result.rows[i];
    try {
      const auto lda_cfg = cfg.cell_config(cell.k, i % cfg.seeds_per_k);
      auto trained = std::make_shared<lda::TrainResult>(lda::train(corpus, lda_cfg));
      const auto reports = coherence::score_all(corpus, trained->dists, cell_coherence);
      for (std::size_t m = 0; m < reports.size(); ++m) cell.scores[m] = reports[m].aggregate;
      cell.overlap_count =
          analysis::build_intertopic_map(trained->dists, trained->model).overlap_count;
      cell.ok = true;
      if (cache) cache->put(cell.k, cell.seed, std::move(trained));
    } catch (const Error& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  if (std::none_of(result.rows.begin(), result.rows.end(),
                   [](const SweepCell& c) { return c.ok; })) {
    throw DataError("every sweep cell failed; first error: " + result.rows.front().error);
  }
  result.curve = build_curves(result.rows);
  std::tie(result.best_k, result.best_seed) = choose_best(result.rows, cfg.selection_measure);
  return result;
}

lda::TrainResult select_model(const SweepResult& result, const Corpus& corpus,
                              const SweepConfig& cfg, const ModelCache* cache) {
  if (cache) {
    if (auto hit = cache->get(result.best_k, result.best_seed)) return *hit;
  }
  const std::size_t replicate = result.best_seed - cfg.base.seed;
  return lda::train(corpus, cfg.cell_config(result.best_k, replicate));
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    nlohmann::json row = {{"k", r.k}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      nlohmann::json scores;
      for (Measure m : coherence::kAllMeasures) {
        scores[std::string(coherence::to_string(m))] = r.score(m);
      }
      row["scores"] = std::move(scores);
      row["overlap_count"] = r.overlap_count;
    } else {
      row["error"] = r.error;
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json curve;
  for (const auto& [m, points] : result.curve) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) pts.push_back({{"k", p.k}, {"mean_score", p.mean_score}});
    curve[std::string(coherence::to_string(m))] = std::move(pts);
  }
  return {{"selection_measure", coherence::to_string(result.selection_measure)},
          {"best_k", result.best_k},
          {"best_seed", result.best_seed},
          {"rows", std::move(rows)},
          {"curve", std::move(curve)}};
}

std::string curve_csv(const SweepResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "measure,k,mean_score\n";
  for (Measure m : coherence::kAllMeasures) {
    auto it = result.curve.find(m);
    if (it == result.curve.end()) continue;
    for (const auto& p : it->second) {
      out << coherence::to_string(m) << ',' << p.k << ',' << p.mean_score << '\n';
    }
  }
  return out.str();
}

}  // namespace paramforge::select
