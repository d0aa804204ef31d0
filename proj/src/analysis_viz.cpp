#include "paramforge/analysis_viz.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "paramforge/corpus_ingest.hpp"
#include "paramforge/error.hpp"

namespace paramforge::analysis {

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DataError(std::string(name) + " has a negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError(std::string(name) + " does not sum to 1");
  }
}

// Sorts ids by descending key, ascending id on ties, and keeps the first n.
std::vector<TermId> top_by(const std::vector<double>& key, std::size_t n) {
  std::vector<TermId> ids(key.size());
  std::iota(ids.begin(), ids.end(), TermId{0});
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](TermId a, TermId b) {
                      return key[a] != key[b] ? key[a] > key[b] : a < b;
                    });
  ids.resize(n);
  return ids;
}

std::vector<double> phi_row(const lda::TopicDistributions& dists, std::size_t t) {
  const auto begin = dists.phi.begin() + static_cast<std::ptrdiff_t>(t * dists.vocab_size);
  return {begin, begin + static_cast<std::ptrdiff_t>(dists.vocab_size)};
}

}  // namespace

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("JSD inputs have lengths " + std::to_string(p.size()) + " and " +
                            std::to_string(q.size()));
  }
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

Eigen::MatrixX2d project_mds(const Eigen::MatrixXd& distance) {
  const Eigen::Index k = distance.rows();
  if (distance.cols() != k) throw DimensionMismatch("distance matrix is not square");
  const double scale = std::max(1.0, distance.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(distance(i, i)) > 1e-12 * scale) {
      throw NonSymmetric("distance matrix has a non-zero diagonal");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      if (distance(i, j) < 0.0) throw NonSymmetric("distance matrix has a negative entry");
      if (std::abs(distance(i, j) - distance(j, i)) > 1e-12 * scale) {
        throw NonSymmetric("distance matrix is not symmetric");
      }
    }
  }

  Eigen::MatrixX2d coords = Eigen::MatrixX2d::Zero(k, 2);
  if (k < 2) return coords;

  const Eigen::MatrixXd sq = distance.cwiseProduct(distance);
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / k);
  Eigen::MatrixXd gram = -0.5 * centering * sq * centering;
  gram = 0.5 * (gram + gram.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw InvariantError("MDS eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double largest = std::max(0.0, values(k - 1));
  for (int c = 0; c < 2 && c < k; ++c) {
    const Eigen::Index idx = k - 1 - c;
    const double lambda = values(idx);
    if (lambda <= 0.0 || lambda <= 1e-12 * largest) continue;
    Eigen::VectorXd col = eig.eigenvectors().col(idx) * std::sqrt(lambda);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    coords.col(c) = col;
  }
  return coords;
}

IntertopicMap build_intertopic_map(const lda::TopicDistributions& dists,
                                   std::vector<double> proportions) {
  const std::size_t K = dists.k;
  if (proportions.size() != K) throw DimensionMismatch("proportions length != k");
  IntertopicMap map;
  map.distance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K),
                                       static_cast<Eigen::Index>(K));
  std::vector<std::vector<double>> rows;
  rows.reserve(K);
  for (std::size_t t = 0; t < K; ++t) rows.push_back(phi_row(dists, t));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      const double d = jensen_shannon(rows[i], rows[j]);
      map.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      map.distance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
    }
  }
  map.coords = project_mds(map.distance);
  map.proportions = std::move(proportions);

  double span = 0.0;
  if (K > 0) {
    for (int c = 0; c < 2; ++c) {
      span = std::max(span, map.coords.col(c).maxCoeff() - map.coords.col(c).minCoeff());
    }
  }
  const double max_prop =
      K ? *std::max_element(map.proportions.begin(), map.proportions.end()) : 0.0;
  const double c = max_prop > 0.0 ? 0.1 * span / std::sqrt(max_prop) : 0.0;
  map.radii.resize(K);
  for (std::size_t t = 0; t < K; ++t) map.radii[t] = c * std::sqrt(map.proportions[t]);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      const double d = (map.coords.row(static_cast<Eigen::Index>(i)) -
                        map.coords.row(static_cast<Eigen::Index>(j)))
                           .norm();
      if (d < map.radii[i] + map.radii[j]) ++map.overlap_count;
    }
  }
  return map;
}

IntertopicMap build_intertopic_map(const lda::TopicDistributions& dists,
                                   const lda::LdaModel& model) {
  if (model.num_topics() != dists.k) throw DimensionMismatch("model and dists disagree on k");
  return build_intertopic_map(dists, distributions(model).topic_proportions);
}

std::vector<double> term_frequencies(const Corpus& corpus) {
  std::vector<double> freq(corpus.vocabulary.size(), 0.0);
  for (const auto& d : corpus.documents) {
    for (TermId t : d.tokens) freq[t] += 1.0;
  }
  const double total = static_cast<double>(corpus.total_tokens);
  if (total > 0.0) {
    for (double& f : freq) f /= total;
  }
  return freq;
}

TermScoreTable term_scores(const lda::TopicDistributions& dists,
                           std::span<const double> term_freq, double lambda,
                           std::size_t top_n) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidConfig("lambda must be in [0, 1]");
  if (term_freq.size() != dists.vocab_size) {
    throw DimensionMismatch("term frequencies do not match vocabulary size");
  }
  if (top_n > dists.vocab_size) throw InvalidConfig("top_n exceeds vocabulary size");

  TermScoreTable table;
  table.lambda = lambda;
  std::vector<double> score(dists.vocab_size);
  for (std::size_t t = 0; t < dists.k; ++t) {
    const auto phi = phi_row(dists, t);
    for (std::size_t w = 0; w < dists.vocab_size; ++w) {
      const double log_phi = std::log(phi[w]);
      score[w] = lambda == 1.0
                     ? log_phi
                     : lambda * log_phi + (1.0 - lambda) * (log_phi - std::log(term_freq[w]));
    }
    // At lambda = 1 the ranking key is phi itself so the order is exactly
    // the descending-phi order.
    const auto ids = top_by(lambda == 1.0 ? phi : score, top_n);
    std::vector<ScoredTerm> ranked;
    ranked.reserve(ids.size());
    for (TermId id : ids) ranked.push_back({id, score[id]});
    table.topics.push_back(std::move(ranked));
  }
  return table;
}

TermScoreTable term_scores(const lda::TopicDistributions& dists, const Corpus& corpus,
                           double lambda, std::size_t top_n) {
  return term_scores(dists, term_frequencies(corpus), lambda, top_n);
}

std::vector<std::size_t> topic_histogram(const lda::TopicDistributions& dists) {
  std::vector<std::size_t> counts(dists.k, 0);
  for (std::size_t d = 0; d < dists.num_docs; ++d) {
    if (dists.doc_tokens[d] == 0) continue;
    std::size_t best = 0;
    for (std::size_t t = 1; t < dists.k; ++t) {
      if (dists.theta_at(d, t) > dists.theta_at(d, best)) best = t;
    }
    ++counts[best];
  }
  return counts;
}

std::vector<LengthBin> length_histogram(const Corpus& corpus, std::size_t bin_width) {
  if (bin_width < 1) throw InvalidConfig("bin width must be >= 1");
  std::map<std::size_t, std::size_t> bins;
  for (const auto& d : corpus.documents) ++bins[d.raw_len / bin_width];
  std::vector<LengthBin> out;
  for (auto [bin, count] : bins) out.push_back({bin, count});
  return out;
}

std::vector<std::vector<WeightedTerm>> wordcloud_weights(const lda::TopicDistributions& dists,
                                                         std::size_t top_n) {
  std::vector<std::vector<WeightedTerm>> out;
  for (std::size_t t = 0; t < dists.k; ++t) {
    const auto phi = phi_row(dists, t);
    const auto ids = top_by(phi, top_n);
    std::vector<WeightedTerm> cloud;
    const double top = ids.empty() ? 1.0 : phi[ids.front()];
    for (TermId id : ids) cloud.push_back({id, phi[id] / top});
    if (!cloud.empty()) cloud.front().weight = 1.0;
    out.push_back(std::move(cloud));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Taxonomy

namespace {

LabelAction parse_action(const std::string& s) {
  std::string key;
  for (char c : s) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "keep") return LabelAction::Keep;
  if (key == "merge") return LabelAction::Merge;
  if (key == "discard") return LabelAction::Discard;
  throw ConfigError("unknown taxonomy action \"" + s + "\"");
}

}  // namespace

TaxonomyLabels TaxonomyLabels::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("taxonomy labels must be a JSON array");
  TaxonomyLabels labels;
  try {
    for (const auto& e : j) {
      LabelEntry entry;
      entry.clusters = e.at("clusters").get<std::vector<std::size_t>>();
      entry.parameter = e.value("parameter", std::string{});
      entry.macro = e.value("macro", std::string{});
      entry.action = parse_action(e.value("action", std::string("keep")));
      labels.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed taxonomy labels: ") + ex.what());
  }
  return labels;
}

TaxonomyLabels TaxonomyLabels::load(const std::filesystem::path& path) {
  const auto text = ingest::read_file(path);
  try {
    return from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

TaxonomyLabels TaxonomyLabels::unlabeled(std::size_t k) {
  TaxonomyLabels labels;
  for (std::size_t t = 0; t < k; ++t) {
    labels.entries.push_back({{t}, "topic " + std::to_string(t), "unassigned",
                              LabelAction::Keep});
  }
  return labels;
}

void TaxonomyLabels::validate(std::size_t k) const {
  std::vector<int> seen(k, 0);
  for (const auto& e : entries) {
    if (e.clusters.empty()) throw ConfigError("taxonomy entry with no clusters");
    if (e.action == LabelAction::Merge && e.clusters.size() < 2) {
      throw ConfigError("merge entry \"" + e.parameter + "\" needs at least 2 clusters");
    }
    if (e.action == LabelAction::Keep && e.clusters.size() != 1) {
      throw ConfigError("keep entry \"" + e.parameter + "\" must name exactly one cluster");
    }
    if (e.action != LabelAction::Discard && (e.parameter.empty() || e.macro.empty())) {
      throw ConfigError("taxonomy entry needs parameter and macro names");
    }
    for (auto c : e.clusters) {
      if (c >= k) {
        throw IncompleteLabeling("taxonomy names topic " + std::to_string(c) +
                                 " but the model has " + std::to_string(k));
      }
      ++seen[c];
    }
  }
  for (std::size_t t = 0; t < k; ++t) {
    if (seen[t] != 1) {
      throw IncompleteLabeling("topic " + std::to_string(t) + " is labeled " +
                               std::to_string(seen[t]) + " times; expected exactly once");
    }
  }
}

Taxonomy build_taxonomy(const TaxonomyLabels& labels, const lda::TopicDistributions& dists,
                        std::span<const double> proportions, std::size_t top_n) {
  labels.validate(dists.k);
  if (proportions.size() != dists.k) throw DimensionMismatch("proportions length != k");

  Taxonomy tax;
  std::map<std::string, std::size_t> macro_index;
  for (const auto& e : labels.entries) {
    double share = 0.0;
    for (auto c : e.clusters) share += proportions[c] * 100.0;
    if (e.action == LabelAction::Discard) {
      tax.discarded.push_back({e.clusters, share});
      continue;
    }
    std::vector<double> summed(dists.vocab_size, 0.0);
    for (auto c : e.clusters) {
      for (std::size_t w = 0; w < dists.vocab_size; ++w) summed[w] += dists.phi_at(c, w);
    }
    Parameter p;
    p.name = e.parameter;
    p.clusters = e.clusters;
    p.keywords = top_by(summed, top_n);
    p.token_share_percent = share;
    p.merged = e.action == LabelAction::Merge;

    auto [it, inserted] = macro_index.emplace(e.macro, tax.macro_parameters.size());
    if (inserted) tax.macro_parameters.push_back({e.macro, {}});
    tax.macro_parameters[it->second].parameters.push_back(std::move(p));
  }
  return tax;
}

Taxonomy build_taxonomy(const TaxonomyLabels& labels, const lda::TopicDistributions& dists,
                        const lda::LdaModel& model, std::size_t top_n) {
  return build_taxonomy(labels, dists, distributions(model).topic_proportions, top_n);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const IntertopicMap& map) {
  const auto K = static_cast<std::size_t>(map.coords.rows());
  nlohmann::json topics = nlohmann::json::array();
  nlohmann::json distance = nlohmann::json::array();
  for (std::size_t t = 0; t < K; ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    topics.push_back({{"topic", t},
                      {"x", map.coords(i, 0)},
                      {"y", map.coords(i, 1)},
                      {"proportion", map.proportions[t]},
                      {"radius", map.radii[t]}});
    std::vector<double> row(K);
    for (std::size_t j = 0; j < K; ++j) row[j] = map.distance(i, static_cast<Eigen::Index>(j));
    distance.push_back(std::move(row));
  }
  return {{"topics", std::move(topics)},
          {"distance", std::move(distance)},
          {"overlap_count", map.overlap_count},
          {"metadata",
           {{"distance_metric", "jensen_shannon_base2"},
            {"projection", "classical_mds"},
            {"proportion_definition", "topic token mass n_k / total_tokens"},
            {"radius_rule",
             "tool-defined display aid: radius = c*sqrt(proportion), largest radius = 0.1 of "
             "coordinate span"},
            {"overlap_count_rule",
             "tool-defined display aid: circle pairs with center distance < sum of radii"}}}};
}

nlohmann::json to_json(const TermScoreTable& table, const preprocess::Vocabulary& vocab) {
  nlohmann::json topics = nlohmann::json::array();
  for (std::size_t t = 0; t < table.topics.size(); ++t) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& s : table.topics[t]) {
      terms.push_back({{"term", vocab.term(s.term)}, {"id", s.term}, {"score", s.score}});
    }
    topics.push_back({{"topic", t}, {"terms", std::move(terms)}});
  }
  return {{"lambda", table.lambda}, {"topics", std::move(topics)}};
}

nlohmann::json wordclouds_to_json(const std::vector<std::vector<WeightedTerm>>& clouds,
                                  const preprocess::Vocabulary& vocab) {
  nlohmann::json topics = nlohmann::json::array();
  for (std::size_t t = 0; t < clouds.size(); ++t) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& w : clouds[t]) {
      words.push_back({{"term", vocab.term(w.term)}, {"weight", w.weight}});
    }
    topics.push_back({{"topic", t}, {"words", std::move(words)}});
  }
  return {{"topics", std::move(topics)}};
}

nlohmann::json to_json(const Taxonomy& taxonomy, const preprocess::Vocabulary& vocab) {
  nlohmann::json macros = nlohmann::json::array();
  for (const auto& m : taxonomy.macro_parameters) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : m.parameters) {
      std::vector<std::string> words;
      for (TermId id : p.keywords) words.push_back(vocab.term(id));
      params.push_back({{"name", p.name},
                        {"clusters", p.clusters},
                        {"merged", p.merged},
                        {"keywords", std::move(words)},
                        {"token_share_percent", p.token_share_percent}});
    }
    macros.push_back({{"name", m.name}, {"parameters", std::move(params)}});
  }
  nlohmann::json discarded = nlohmann::json::array();
  for (const auto& d : taxonomy.discarded) {
    discarded.push_back({{"clusters", d.clusters}, {"token_share_percent", d.token_share_percent}});
  }
  return {{"macro_parameters", std::move(macros)},
          {"discarded", std::move(discarded)},
          {"metadata",
           {{"share_definition",
             "token mass n_k / total_tokens * 100; merged parameters sum member topics"}}}};
}

}  // namespace paramforge::analysis
