#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "paramforge/lda_gibbs.hpp"
#include "paramforge/preprocess.hpp"

namespace paramforge::analysis {

using preprocess::Corpus;
using preprocess::TermId;

// Jensen-Shannon divergence with base-2 logs; 0 log 0 = 0. Result in [0, 1].
double jensen_shannon(std::span<const double> p, std::span<const double> q);

// Classical MDS to two dimensions. Eigenvalues below zero (or below 1e-12 of
// the largest) contribute a zero column. Each column is sign-normalized so
// its largest-magnitude entry is positive.
Eigen::MatrixX2d project_mds(const Eigen::MatrixXd& distance);

struct IntertopicMap {
  Eigen::MatrixX2d coords;
  std::vector<double> proportions;
  Eigen::MatrixXd distance;
  // Display aids: radius_t = c * sqrt(proportion_t) with the largest radius
  // at 0.1 of the coordinate span; overlap_count counts pairs of circles
  // whose centers are closer than the sum of their radii.
  std::vector<double> radii;
  std::size_t overlap_count = 0;
};

IntertopicMap build_intertopic_map(const lda::TopicDistributions& dists,
                                   const lda::LdaModel& model);
// Same, from explicit phi rows and topic proportions.
IntertopicMap build_intertopic_map(const lda::TopicDistributions& dists,
                                   std::vector<double> proportions);

struct ScoredTerm {
  TermId term = 0;
  double score = 0.0;
};

struct TermScoreTable {
  double lambda = 1.0;
  std::vector<std::vector<ScoredTerm>> topics;
};

// Corpus unigram frequencies p_w = count(w) / total_tokens.
std::vector<double> term_frequencies(const Corpus& corpus);

// relevance = lambda ln phi + (1 - lambda) ln(phi / p_w); ranked descending,
// ties by ascending term id.
TermScoreTable term_scores(const lda::TopicDistributions& dists,
                           std::span<const double> term_freq, double lambda = 1.0,
                           std::size_t top_n = 10);
TermScoreTable term_scores(const lda::TopicDistributions& dists, const Corpus& corpus,
                           double lambda = 1.0, std::size_t top_n = 10);

// Documents per dominant topic (argmax theta, lowest index on ties); only
// documents with tokens are counted.
std::vector<std::size_t> topic_histogram(const lda::TopicDistributions& dists);

struct LengthBin {
  std::size_t bin = 0;
  std::size_t count = 0;
};
// Histogram of raw document lengths in right-open bins [i*w, (i+1)*w);
// only non-empty bins are returned, in ascending order.
std::vector<LengthBin> length_histogram(const Corpus& corpus, std::size_t bin_width = 125);

struct WeightedTerm {
  TermId term = 0;
  double weight = 0.0;
};
// Top-n words by phi per topic with weights scaled so the first is 1.
std::vector<std::vector<WeightedTerm>> wordcloud_weights(const lda::TopicDistributions& dists,
                                                         std::size_t top_n = 50);

// ---------------------------------------------------------------------------
// Taxonomy

enum class LabelAction { Keep, Merge, Discard };

struct LabelEntry {
  std::vector<std::size_t> clusters;
  std::string parameter;
  std::string macro;
  LabelAction action = LabelAction::Keep;
};

struct TaxonomyLabels {
  std::vector<LabelEntry> entries;

  // JSON array of {clusters, parameter, macro, action}.
  static TaxonomyLabels from_json(const nlohmann::json& j);
  static TaxonomyLabels load(const std::filesystem::path& path);
  // One Keep entry per topic, used when no labels file is given.
  static TaxonomyLabels unlabeled(std::size_t k);

  // Throws IncompleteLabeling unless every topic in [0, k) is covered
  // exactly once; ConfigError for malformed entries.
  void validate(std::size_t k) const;
};

struct Parameter {
  std::string name;
  std::vector<std::size_t> clusters;
  std::vector<TermId> keywords;
  double token_share_percent = 0.0;
  bool merged = false;
};

struct MacroParameter {
  std::string name;
  std::vector<Parameter> parameters;
};

struct DiscardedClusters {
  std::vector<std::size_t> clusters;
  double token_share_percent = 0.0;
};

struct Taxonomy {
  std::vector<MacroParameter> macro_parameters;
  std::vector<DiscardedClusters> discarded;
};

Taxonomy build_taxonomy(const TaxonomyLabels& labels, const lda::TopicDistributions& dists,
                        std::span<const double> proportions, std::size_t top_n = 20);
Taxonomy build_taxonomy(const TaxonomyLabels& labels, const lda::TopicDistributions& dists,
                        const lda::LdaModel& model, std::size_t top_n = 20);

// ---------------------------------------------------------------------------
// JSON views (terms resolved through the vocabulary)

nlohmann::json to_json(const IntertopicMap& map);
nlohmann::json to_json(const TermScoreTable& table, const preprocess::Vocabulary& vocab);
nlohmann::json wordclouds_to_json(const std::vector<std::vector<WeightedTerm>>& clouds,
                                  const preprocess::Vocabulary& vocab);
nlohmann::json to_json(const Taxonomy& taxonomy, const preprocess::Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Report bundle

struct ReportSettings {
  double lambda = 1.0;
  std::size_t term_top_n = 10;
  std::size_t wordcloud_top_n = 50;
  std::size_t taxonomy_top_n = 20;
  std::size_t length_bin_width = 125;
};

// Writes intertopic_map.json, term_scores.json, topic_histogram.csv,
// length_histogram.csv, wordclouds.json, taxonomy.json and report.html into
// `out_dir`; returns the written paths in that order.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& out_dir,
                                                const Corpus& corpus,
                                                const lda::LdaModel& model,
                                                const lda::TopicDistributions& dists,
                                                const std::optional<TaxonomyLabels>& labels,
                                                const ReportSettings& settings = {});

}  // namespace paramforge::analysis
