#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "paramforge/analysis_viz.hpp"
#include "paramforge/error.hpp"

using namespace paramforge;
using namespace paramforge::analysis;
namespace fs = std::filesystem;

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n, bool sparse) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0;
  for (auto& v : p) {
    v = (sparse && rng() % 3 == 0) ? 0.0 : e(rng);
    s += v;
  }
  if (s == 0) {
    p[0] = 1;
    s = 1;
  }
  for (auto& v : p) v /= s;
  return p;
}

double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double kp = 0, kq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2;
    if (p[i] > 0) kp += p[i] * std::log2(p[i] / m);
    if (q[i] > 0) kq += q[i] * std::log2(q[i] / m);
  }
  return (kp + kq) / 2;
}

lda::TopicDistributions phi_only(std::vector<std::vector<double>> rows) {
  lda::TopicDistributions out;
  out.k = rows.size();
  out.vocab_size = rows.at(0).size();
  for (const auto& r : rows) out.phi.insert(out.phi.end(), r.begin(), r.end());
  out.topic_proportions.assign(out.k, 1.0 / static_cast<double>(out.k));
  return out;
}

// A mock with V = 30 where topic t favors words 3t.. in a fixed pattern.
lda::TopicDistributions mock(std::size_t k, std::size_t v = 30) {
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < k; ++t) {
    std::vector<double> r(v);
    double s = 0;
    for (std::size_t w = 0; w < v; ++w) s += r[w] = 1.0 / (1.0 + static_cast<double>((w + v - 3 * t) % v));
    for (auto& x : r) x /= s;
    rows.push_back(r);
  }
  return phi_only(rows);
}

Eigen::MatrixXd pairwise(const Eigen::MatrixX2d& x) {
  Eigen::MatrixXd d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  return d;
}

}  // namespace

TEST_CASE("jsd examples") {
  const std::vector<double> p = {0.5, 0.5}, one = {1, 0}, other = {0, 1};
  CHECK(jensen_shannon(p, p) == 0.0);
  CHECK(jensen_shannon(one, other) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(jensen_shannon(p, one) == doctest::Approx(jsd_oracle(p, one)).epsilon(1e-14));
  CHECK(jensen_shannon(p, one) == doctest::Approx(0.3113).epsilon(1e-4));
  CHECK_THROWS_AS(jensen_shannon(p, std::vector<double>{1, 0, 0}), DimensionMismatch);
}

TEST_CASE("jsd properties on random simplex pairs") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng() % 20;
    const auto p = random_simplex(rng, n, i % 2 == 0);
    const auto q = random_simplex(rng, n, i % 3 == 0);
    const double pq = jensen_shannon(p, q);
    CHECK(pq == jensen_shannon(q, p));
    CHECK(pq >= 0.0);
    CHECK(pq <= 1.0);
    CHECK(std::abs(pq - jsd_oracle(p, q)) < 1e-12);
    CHECK(jensen_shannon(p, p) == 0.0);
  }
}

TEST_CASE("mds: two points at distance d") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 0.8, 0.8, 0;
  const auto x = project_mds(d);
  CHECK(std::abs(x(0, 0)) == doctest::Approx(0.4));
  CHECK(x(0, 0) == doctest::Approx(-x(1, 0)));
  CHECK(std::max(x(0, 0), x(1, 0)) == doctest::Approx(0.4));
  CHECK(x(0, 1) == 0.0);
  CHECK(x(1, 1) == 0.0);
}

TEST_CASE("mds: identical topics collapse to the origin") {
  const auto x = project_mds(Eigen::MatrixXd::Zero(4, 4));
  CHECK(x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mds: planted 2D configurations are recovered") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index k = 3 + static_cast<Eigen::Index>(rng() % 10);
    Eigen::MatrixX2d pts(k, 2);
    for (Eigen::Index i = 0; i < k; ++i) pts.row(i) << g(rng), g(rng);
    const Eigen::MatrixXd d = pairwise(pts);
    const auto x = project_mds(d);
    CHECK((pairwise(x) - d).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(x.col(0).mean()) < 1e-9);
    CHECK(std::abs(x.col(1).mean()) < 1e-9);
    // Gram reconstruction.
    const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / k);
    const Eigen::MatrixXd b = -0.5 * j * d.cwiseAbs2() * j;
    CHECK((b - x * x.transpose()).cwiseAbs().maxCoeff() < 1e-6);
    // Sign rule.
    for (int c = 0; c < 2; ++c) {
      Eigen::Index at = 0;
      x.col(c).cwiseAbs().maxCoeff(&at);
      CHECK(x(at, c) > 0);
    }
  }
}

TEST_CASE("mds: input checks") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 2, 0;
  CHECK_THROWS_AS(project_mds(d), NonSymmetric);
  CHECK_THROWS_AS(project_mds(Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("intertopic map: orthogonal topics") {
  const auto dists = phi_only({{1, 0}, {0, 1}});
  const auto map = build_intertopic_map(dists, std::vector<double>{0.5, 0.5});
  CHECK(map.distance(0, 1) == doctest::Approx(1.0));
  CHECK(map.distance(0, 0) == 0.0);
  CHECK(map.coords(0, 0) == doctest::Approx(-map.coords(1, 0)));
  CHECK(std::abs(map.coords(0, 0)) == doctest::Approx(0.5));
}

TEST_CASE("intertopic map: invariants on a trained model") {
  const auto syn = oracle::generate_lda(5, 4, 20, 60, 30, 0.2, 0.05);
  lda::LdaConfig cfg;
  cfg.k = 4;
  cfg.alpha = 0.2;
  cfg.beta = 0.05;
  cfg.sweeps = 30;
  cfg.burn_in = 10;
  const auto r = lda::train(syn.corpus, cfg);
  const auto map = build_intertopic_map(r.dists, r.model);
  double total = 0;
  for (double p : map.proportions) total += p;
  CHECK(std::abs(total - 1) < 1e-12);
  CHECK((map.distance - map.distance.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(map.distance.minCoeff() >= 0.0);
  CHECK(map.distance.maxCoeff() <= 1.0);
  CHECK(std::abs(map.coords.col(0).mean()) < 1e-9);
  CHECK(std::abs(map.coords.col(1).mean()) < 1e-9);
  const double max_r = *std::max_element(map.radii.begin(), map.radii.end());
  const double span = std::max(map.coords.col(0).maxCoeff() - map.coords.col(0).minCoeff(),
                               map.coords.col(1).maxCoeff() - map.coords.col(1).minCoeff());
  CHECK(max_r == doctest::Approx(0.1 * span));
}

TEST_CASE("intertopic map: circle sizes follow topic shares") {
  // Shares 11.5% and 2.1% for two of the clusters, rest spread evenly.
  std::vector<double> props(15, (1.0 - 0.115 - 0.021) / 13);
  props[0] = 0.115;
  props[14] = 0.021;
  const auto map = build_intertopic_map(mock(15), props);
  CHECK(map.radii[0] > map.radii[14]);
  CHECK(map.radii[0] * map.radii[0] / (map.radii[14] * map.radii[14]) ==
        doctest::Approx(0.115 / 0.021));
}

TEST_CASE("intertopic map: overlap count against a direct pair scan") {
  const auto dists = mock(6);
  const auto map = build_intertopic_map(dists, std::vector<double>{0.3, 0.25, 0.2, 0.1, 0.1, 0.05});
  std::size_t overlaps = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      if ((map.coords.row(i) - map.coords.row(j)).norm() < map.radii[i] + map.radii[j]) ++overlaps;
  CHECK(map.overlap_count == overlaps);
}

TEST_CASE("term scores: lambda 1 ranks by phi") {
  const auto dists = phi_only({{0.2, 0.5, 0.3}});
  const std::vector<double> freq = {0.6, 0.3, 0.1};
  const auto t = term_scores(dists, freq, 1.0, 3);
  REQUIRE(t.topics[0].size() == 3);
  CHECK(t.topics[0][0].term == 1);
  CHECK(t.topics[0][1].term == 2);
  CHECK(t.topics[0][2].term == 0);
  CHECK(t.topics[0][0].score == doctest::Approx(std::log(0.5)));
}

TEST_CASE("term scores: lambda 0 ranks by lift") {
  const auto dists = phi_only({{0.4, 0.6}});
  const auto t = term_scores(dists, std::vector<double>{0.1, 0.9}, 0.0, 2);
  CHECK(t.topics[0][0].term == 0);
  CHECK(t.topics[0][0].score == doctest::Approx(std::log(4.0)));
  CHECK(t.topics[0][1].score == doctest::Approx(std::log(0.6 / 0.9)));
}

TEST_CASE("term scores: ties by ascending id, scores non-increasing") {
  const auto dists = phi_only({{0.25, 0.25, 0.25, 0.25}});
  const auto t = term_scores(dists, std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0.5, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(t.topics[0][i].term == i);
  std::mt19937_64 rng(3);
  const auto d2 = phi_only({random_simplex(rng, 12, false), random_simplex(rng, 12, false)});
  const auto t2 = term_scores(d2, random_simplex(rng, 12, false), 0.3, 12);
  for (const auto& row : t2.topics)
    for (std::size_t i = 1; i < row.size(); ++i) CHECK(row[i - 1].score >= row[i].score);
}

TEST_CASE("term frequencies from the corpus") {
  const auto c = oracle::make_corpus({{0, 0, 1}, {1, 2, 0}}, 4);
  const auto f = term_frequencies(c);
  CHECK(f == std::vector<double>{0.5, 2.0 / 6, 1.0 / 6, 0.0});
}

TEST_CASE("topic histogram") {
  lda::TopicDistributions d;
  d.k = 3;
  d.num_docs = 4;
  d.theta = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.1, 0.8, 0.1, 0.2, 0.3, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  d.doc_tokens = {5, 4, 3, 0};
  const auto h = topic_histogram(d);
  CHECK(h == std::vector<std::size_t>{1, 1, 1});
}

TEST_CASE("length histogram") {
  auto c = oracle::make_corpus({{}, {}, {}}, 1);
  c.documents[0].raw_len = 10;
  c.documents[1].raw_len = 130;
  c.documents[2].raw_len = 130;
  const auto h = length_histogram(c, 125);
  REQUIRE(h.size() == 2);
  CHECK(h[0].bin == 0);
  CHECK(h[0].count == 1);
  CHECK(h[1].bin == 1);
  CHECK(h[1].count == 2);
  CHECK(length_histogram(oracle::make_corpus({}, 1)).empty());
}

TEST_CASE("word cloud weights") {
  const auto clouds = wordcloud_weights(mock(3), 50);
  for (const auto& cloud : clouds) {
    CHECK(cloud.size() == 30);
    CHECK(cloud[0].weight == 1.0);
    for (std::size_t i = 1; i < cloud.size(); ++i) CHECK(cloud[i - 1].weight >= cloud[i].weight);
  }
  const auto single = wordcloud_weights(phi_only({{1.0}}), 50);
  CHECK(single[0].size() == 1);
  CHECK(single[0][0].weight == 1.0);
}

TEST_CASE("labels: parsing and coverage") {
  const auto labels = TaxonomyLabels::from_json(nlohmann::json::parse(R"([
    {"clusters": [0], "parameter": "P0", "macro": "M", "action": "keep"},
    {"clusters": [1, 2], "parameter": "P12", "macro": "M", "action": "merge"},
    {"clusters": [3], "parameter": "", "macro": "", "action": "discard"}
  ])"));
  CHECK_NOTHROW(labels.validate(4));
  CHECK_THROWS_AS(labels.validate(5), IncompleteLabeling);
  auto doubled = labels;
  doubled.entries.push_back({{0}, "again", "M", LabelAction::Keep});
  CHECK_THROWS_AS(doubled.validate(4), IncompleteLabeling);
  auto thin = labels;
  thin.entries[1].clusters = {1};
  CHECK_THROWS(thin.validate(4));
  CHECK_THROWS_AS(TaxonomyLabels::from_json(nlohmann::json::parse(
                      R"([{"clusters":[0],"parameter":"p","macro":"m","action":"rename"}])")),
                  ConfigError);
  CHECK_NOTHROW(TaxonomyLabels::unlabeled(7).validate(7));
}

TEST_CASE("taxonomy: merge shares add, discard drops, keyword list length") {
  // Fifteen clusters; clusters 5 and 6 (1-based) both hold 8.5% and are
  // merged, cluster 1 holds 11.5%, cluster 15 2.1% and one cluster is dropped.
  std::vector<double> props(15, 0.0);
  props[0] = 0.115;
  props[4] = 0.085;
  props[5] = 0.085;
  props[14] = 0.021;
  const double rest = (1.0 - 0.115 - 0.085 - 0.085 - 0.021) / 11;
  for (std::size_t i = 0; i < 15; ++i)
    if (props[i] == 0.0) props[i] = rest;

  TaxonomyLabels labels;
  labels.entries.push_back({{0}, "Family Structure", "Family", LabelAction::Keep});
  labels.entries.push_back({{4, 5}, "Immigrant Families & Intergenerational Life", "Culture",
                            LabelAction::Merge});
  labels.entries.push_back({{14}, "", "", LabelAction::Discard});
  for (std::size_t i = 1; i < 14; ++i) {
    if (i == 4 || i == 5) continue;
    labels.entries.push_back({{i}, "P" + std::to_string(i + 1), "Other", LabelAction::Keep});
  }
  const auto dists = mock(15);
  const auto tax = build_taxonomy(labels, dists, props, 20);

  const Parameter* merged = nullptr;
  const Parameter* first = nullptr;
  double kept_share = 0;
  for (const auto& m : tax.macro_parameters) {
    for (const auto& p : m.parameters) {
      kept_share += p.token_share_percent;
      if (p.merged) merged = &p;
      if (p.clusters == std::vector<std::size_t>{0}) first = &p;
      CHECK(p.keywords.size() == 20);
    }
  }
  REQUIRE(merged != nullptr);
  REQUIRE(first != nullptr);
  CHECK(merged->token_share_percent == doctest::Approx(17.0).epsilon(1e-12));
  CHECK(first->token_share_percent == doctest::Approx(11.5));
  REQUIRE(tax.discarded.size() == 1);
  CHECK(tax.discarded[0].clusters == std::vector<std::size_t>{14});
  CHECK(std::abs(kept_share + tax.discarded[0].token_share_percent - 100.0) < 1e-9);
  for (const auto& m : tax.macro_parameters)
    for (const auto& p : m.parameters)
      for (auto c : p.clusters) CHECK(c != 14);

  // Merged keywords are ranked by summed phi.
  std::vector<std::pair<double, TermId>> summed;
  for (TermId w = 0; w < 30; ++w) summed.push_back({-(dists.phi_at(4, w) + dists.phi_at(5, w)), w});
  std::sort(summed.begin(), summed.end());
  for (std::size_t i = 0; i < 20; ++i) CHECK(merged->keywords[i] == summed[i].second);
}

TEST_CASE("report bundle writes seven files") {
  const auto syn = oracle::generate_lda(6, 3, 25, 40, 30, 0.3, 0.05);
  lda::LdaConfig cfg;
  cfg.k = 3;
  cfg.alpha = 0.3;
  cfg.beta = 0.05;
  cfg.sweeps = 10;
  cfg.burn_in = 5;
  const auto r = lda::train(syn.corpus, cfg);
  const auto dir = fs::temp_directory_path() / "pf_report_test";
  fs::remove_all(dir);
  const auto files = write_report(dir, syn.corpus, r.model, r.dists, std::nullopt);
  const std::vector<std::string> names = {"intertopic_map.json", "term_scores.json",
                                          "topic_histogram.csv", "length_histogram.csv",
                                          "wordclouds.json",     "taxonomy.json",
                                          "report.html"};
  REQUIRE(files.size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(files[i].filename() == names[i]);
    CHECK(fs::file_size(files[i]) > 0);
  }
  std::ifstream hist(dir / "topic_histogram.csv");
  std::string header;
  std::getline(hist, header);
  CHECK(header == "topic,documents");
  fs::remove_all(dir);
}
