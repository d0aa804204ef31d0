#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "paramforge/coherence.hpp"
#include "paramforge/error.hpp"

using namespace paramforge;
using namespace paramforge::coherence;
using oracle::make_corpus;

namespace {

constexpr double kEps = 1e-12;
constexpr TermId a = 0, b = 1, c = 2, d = 3;

TopWords top(std::vector<TermId> w, std::size_t topic = 0) { return {topic, std::move(w)}; }

lda::TopicDistributions phi_only(std::vector<std::vector<double>> rows) {
  lda::TopicDistributions out;
  out.k = rows.size();
  out.vocab_size = rows.at(0).size();
  for (const auto& r : rows) out.phi.insert(out.phi.end(), r.begin(), r.end());
  return out;
}

Corpus three_docs() { return make_corpus({{a, b}, {a}, {b, c}}, 3); }

}  // namespace

TEST_CASE("measure names") {
  for (Measure m : kAllMeasures) CHECK(parse_measure(to_string(m)) == m);
  CHECK(parse_measure("CV") == Measure::CV);
  CHECK(parse_measure("umass") == Measure::CUMASS);
  CHECK_THROWS_AS(parse_measure("c_p"), ConfigError);
}

TEST_CASE("settings validation") {
  Settings s;
  CHECK_NOTHROW(s.validate());
  s.gamma = 1.5;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = {};
  s.n_top = 1;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = {};
  s.window_uci = 0;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
}

TEST_CASE("top words: descending phi, ties by ascending id") {
  const auto dists = phi_only({{0.2, 0.3, 0.3, 0.2}});
  CHECK(top_words(dists, 0, 4).words == std::vector<TermId>{1, 2, 0, 3});
  CHECK_THROWS_AS(top_words(dists, 0, 5), InvalidConfig);
}

TEST_CASE("counting: window rule") {
  const auto st = count_cooccurrences(make_corpus({{a, b, a}}, 2), {a, b}, Estimator::window(2));
  CHECK(st.unit_count() == 2);
  CHECK(st.occur(a) == 2);
  CHECK(st.occur(b) == 2);
  CHECK(st.cooccur(a, b) == 2);
  CHECK(st.cooccur(b, a) == 2);
}

TEST_CASE("counting: short document is one window") {
  const auto st = count_cooccurrences(make_corpus({{a, b}}, 2), {a, b}, Estimator::window(10));
  CHECK(st.unit_count() == 1);
  CHECK(st.cooccur(a, b) == 1);
}

TEST_CASE("counting: document estimator on the three-document corpus") {
  const auto st = count_cooccurrences(three_docs(), {a, b, c}, Estimator::document());
  CHECK(st.unit_count() == 3);
  CHECK(st.occur(a) == 2);
  CHECK(st.occur(b) == 2);
  CHECK(st.occur(c) == 1);
  CHECK(st.cooccur(a, b) == 1);
  CHECK(st.cooccur(b, c) == 1);
  CHECK(st.cooccur(a, c) == 0);
}

TEST_CASE("counting: windows per document is max(1, L - s + 1)") {
  std::mt19937_64 rng(1);
  for (std::size_t len = 0; len < 30; ++len) {
    for (std::size_t s = 1; s < 12; ++s) {
      std::vector<TermId> doc;
      for (std::size_t i = 0; i < len; ++i) doc.push_back(static_cast<TermId>(rng() % 3));
      const auto st = count_cooccurrences(make_corpus({doc}, 3), {0, 1, 2}, Estimator::window(s));
      const std::size_t expect = len == 0 ? 0 : (len >= s ? len - s + 1 : 1);
      CHECK(st.unit_count() == expect);
    }
  }
}

TEST_CASE("counting: pair counts bounded by marginals; merge is order-free") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto corpus = oracle::random_corpus(rng, 50, 6);
    const std::vector<TermId> words = {0, 1, 2, 3, 4, 5};
    const auto st = count_cooccurrences(corpus, words, Estimator::window(3));
    for (TermId x : words) {
      CHECK(st.occur(x) <= st.unit_count());
      for (TermId y : words) CHECK(st.cooccur(x, y) <= std::min(st.occur(x), st.occur(y)));
    }
    const auto par = count_cooccurrences(corpus, words, Estimator::window(3), 3);
    for (TermId x : words)
      for (TermId y : words) CHECK(par.cooccur(x, y) == st.cooccur(x, y));
    CHECK(par.unit_count() == st.unit_count());
  }
}

TEST_CASE("c_umass: hand-computed anchor and ordering") {
  const auto corpus = three_docs();
  CHECK(c_umass(corpus, top({a, b}), kEps) ==
        doctest::Approx(std::log((1 + kEps) / 2)).epsilon(1e-12));
  CHECK(std::abs(c_umass(corpus, top({a, b}), kEps) - std::log(0.5)) < 1e-6);
  // Ordered segmentation: (b, c) conditions on D(b) = 2, (c, b) on D(c) = 1.
  CHECK(c_umass(corpus, top({b, c}), kEps) == doctest::Approx(std::log(0.5)));
  CHECK(c_umass(corpus, top({c, b}), kEps) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("c_umass: never co-occurring words go to ln(eps / D)") {
  const auto corpus = three_docs();
  const double v = c_umass(corpus, top({c, a}), kEps);
  CHECK(v == doctest::Approx(std::log(kEps / 1)));
  // Larger conditioning count, lower score.
  const auto more = make_corpus({{a}, {a}, {c}}, 3);
  CHECK(c_umass(more, top({a, c}), kEps) < c_umass(more, top({c, a}), kEps));
}

TEST_CASE("c_umass: unchanged when every document is doubled (eps = 0)") {
  const auto one = three_docs();
  const auto two = make_corpus({{a, b}, {a}, {b, c}, {a, b}, {a}, {b, c}}, 3);
  for (const auto& t : {top({a, b}), top({b, c}), top({c, b})}) {
    CHECK(c_umass(two, t, 0.0) == doctest::Approx(c_umass(one, t, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("c_umass: skipped pairs and degenerate topics") {
  const auto corpus = make_corpus({{a, b}}, 4);
  const auto st = count_cooccurrences(corpus, {a, b, d}, Estimator::document());
  const auto s = c_umass(st, top({d, a, b}), kEps);
  CHECK(s.skipped_pairs == 2);  // (a, d) and (b, d) condition on absent d
  CHECK_THROWS_AS(c_umass(st, top({d, c}), kEps), DegenerateTopic);
}

TEST_CASE("c_uci examples") {
  CHECK(c_uci(make_corpus({{a, b}}, 2), top({a, b}), 10, kEps) ==
        doctest::Approx(0.0).epsilon(1e-9));
  // Four windows, a and b together in two of them.
  const auto corpus = make_corpus({{a, b}, {a, b}, {c, d}, {c, d}}, 4);
  CHECK(c_uci(corpus, top({a, b}), 10, kEps) ==
        doctest::Approx(std::log((0.5 + kEps) / 0.25)).epsilon(1e-12));
  CHECK(c_uci(corpus, top({a, b}), 10, kEps) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("npmi examples") {
  CHECK(npmi(0.5, 0.5, 0.5, kEps) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(npmi(0.4, 0.5, 0.2, kEps) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(npmi(0.5, 0.5, 0.1, kEps) == doctest::Approx(std::log(0.4) / -std::log(0.1)));
  CHECK(npmi(0.5, 0.5, 0.1, kEps) == doctest::Approx(-0.3979).epsilon(1e-4));
  CHECK_THROWS_AS(npmi(1.0, 1.0, 1.0, kEps), UndefinedNpmi);
}

TEST_CASE("c_npmi: the npmi examples lifted through the mean") {
  // a and b always together in half the windows: pab = pa = pb = 0.5.
  const auto perfect = make_corpus({{a, b}, {c, d}}, 4);
  CHECK(c_npmi(perfect, top({a, b}), 10, kEps) == doctest::Approx(1.0).epsilon(1e-9));
  // Independent: pa = pb = 0.5, pab = 0.25.
  const auto indep = make_corpus({{a, b}, {a}, {b}, {c}}, 4);
  CHECK(c_npmi(indep, top({a, b}), 10, kEps) == doctest::Approx(0.0).epsilon(1e-9));
  // pa = pb = 0.5, pab = 0.1 over ten windows.
  std::vector<std::vector<TermId>> docs = {{a, b}};
  for (int i = 0; i < 4; ++i) docs.push_back({a});
  for (int i = 0; i < 4; ++i) docs.push_back({b});
  docs.push_back({c});
  CHECK(c_npmi(make_corpus(docs, 4), top({a, b}), 10, kEps) ==
        doctest::Approx(std::log(0.4) / -std::log(0.1)).epsilon(1e-9));
}

TEST_CASE("c_npmi: saturated pair is 1, values stay in range") {
  CHECK(c_npmi(make_corpus({{a, b}}, 2), top({a, b}), 10, kEps) == 1.0);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto corpus = oracle::random_corpus(rng, 40, 5);
    if (corpus.total_tokens == 0) continue;
    const auto st = count_cooccurrences(corpus, {0, 1, 2, 3, 4}, Estimator::window(3));
    for (TermId x = 0; x < 5; ++x) {
      for (TermId y = x + 1; y < 5; ++y) {
        if (st.occur(x) == 0 || st.occur(y) == 0) continue;
        try {
          const double v = c_npmi(st, top({x, y}), kEps).value;
          CHECK(v >= -1.0);
          CHECK(v <= 1.0 + 1e-9);
        } catch (const DegenerateTopic&) {
        }
      }
    }
  }
}

TEST_CASE("c_v: perfectly associated pair scores 1") {
  CHECK(c_v(make_corpus({{a, b}, {a, b}, {c}}, 3), top({a, b}), 110, kEps) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("c_v: absent word gets a zero vector") {
  const auto corpus = make_corpus({{a, b}, {a, b}, {c}}, 4);
  const auto st = count_cooccurrences(corpus, {a, b, d}, Estimator::window(110));
  const auto s = c_v(st, top({a, b, d}), kEps);
  CHECK(s.skipped_pairs == 2);
  CHECK(s.value == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  const auto none = count_cooccurrences(corpus, {d}, Estimator::window(110));
  CHECK_THROWS_AS(c_v(none, top({d, c}), kEps), DegenerateTopic);
}

TEST_CASE("c_v: five-document corpus against the brute-force oracle") {
  const auto corpus = make_corpus({{0, 1, 2, 0, 3}, {1, 2}, {2, 3, 4, 4}, {0, 4}, {3, 1, 0, 2, 2, 1}}, 5);
  for (std::size_t w : {2u, 3u, 110u}) {
    const std::vector<TermId> t = {2, 0, 1};
    CHECK(std::abs(c_v(corpus, top(t), w, kEps) - *oracle::cv(corpus, t, w, kEps)) < 1e-9);
  }
}

TEST_CASE("all measures agree with the brute-force oracle on random corpora") {
  std::mt19937_64 rng(4);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto corpus = oracle::random_corpus(rng, 50, 8);
    std::vector<TermId> words(8);
    std::iota(words.begin(), words.end(), TermId{0});
    std::shuffle(words.begin(), words.end(), rng);
    const std::size_t n = 2 + rng() % 5;
    words.resize(n);
    const std::size_t width = 1 + rng() % 6;
    for (double eps : {kEps, 0.0}) {
      auto check = [&](auto lib, std::optional<double> ref) {
        if (!ref) {
          CHECK_THROWS_AS(lib(), DegenerateTopic);
          return;
        }
        const double v = lib();
        if (std::isinf(*ref)) {
          CHECK(v == *ref);
        } else {
          CHECK(std::abs(v - *ref) < 1e-9);
        }
        ++compared;
      };
      check([&] { return c_umass(corpus, top(words), eps); }, oracle::umass(corpus, words, eps));
      check([&] { return c_uci(corpus, top(words), width, eps); },
            oracle::uci(corpus, words, width, eps));
      check([&] { return c_npmi(corpus, top(words), width, eps); },
            oracle::cnpmi(corpus, words, width, eps));
      check([&] { return c_v(corpus, top(words), width, eps); },
            oracle::cv(corpus, words, width, eps));
      check([&] { return c_v(corpus, top(words), width, eps, 2.0); },
            oracle::cv(corpus, words, width, eps, 2));
    }
  }
  CHECK(compared > 300);
}

TEST_CASE("duplication invariance with eps = 0") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto one = oracle::random_corpus(rng, 40, 5);
    std::vector<std::vector<TermId>> docs;
    for (int rep = 0; rep < 2; ++rep)
      for (const auto& doc : one.documents) docs.push_back(doc.tokens);
    const auto two = make_corpus(docs, 5);
    const auto t = top({0, 1, 2, 3});
    auto same = [](auto f) {
      try {
        const double x = f(0), y = f(1);
        if (std::isinf(x)) {
          CHECK(x == y);
        } else {
          CHECK(std::abs(x - y) < 1e-9);
        }
      } catch (const DegenerateTopic&) {
      }
    };
    same([&](int i) { return c_uci(i ? two : one, t, 4, 0.0); });
    same([&](int i) { return c_npmi(i ? two : one, t, 4, 0.0); });
    same([&](int i) { return c_v(i ? two : one, t, 4, 0.0); });
  }
}

TEST_CASE("score_model: aggregate, degenerate topics, permutation") {
  const auto corpus = make_corpus({{0, 1, 0, 1}, {2, 3}, {2, 3, 2}, {0, 1}}, 5);
  const auto dists = phi_only({{0.4, 0.3, 0.1, 0.1, 0.1},
                               {0.1, 0.1, 0.35, 0.35, 0.1},
                               {0.05, 0.05, 0.05, 0.05, 0.8}});
  Settings s;
  s.n_top = 2;
  for (Measure m : kAllMeasures) {
    const auto r = score_model(corpus, dists, m, s);
    CHECK(r.k == 3);
    CHECK(r.measure == m);
    double sum = 0;
    int used = 0;
    for (double v : r.per_topic) {
      if (!std::isnan(v)) {
        sum += v;
        ++used;
      }
    }
    CHECK(std::abs(r.aggregate - sum / used) < 1e-12);
    CHECK(r.n_top_words == 2);

    const auto swapped = phi_only({{0.05, 0.05, 0.05, 0.05, 0.8},
                                   {0.4, 0.3, 0.1, 0.1, 0.1},
                                   {0.1, 0.1, 0.35, 0.35, 0.1}});
    const auto r2 = score_model(corpus, swapped, m, s);
    CHECK(r2.aggregate == doctest::Approx(r.aggregate).epsilon(1e-12));
    CHECK(r2.per_topic[1] == r.per_topic[0]);
    CHECK(r2.per_topic[2] == r.per_topic[1]);
  }
  // Topic 2's top words (4, then 0) never appear together; word 4 is absent,
  // so the document-based measure conditions on it and skips.
  const auto umass = score_model(corpus, dists, Measure::CUMASS, s);
  CHECK(umass.degenerate_topics == std::vector<std::size_t>{2});
  CHECK(std::isnan(umass.per_topic[2]));
}

TEST_CASE("score_model: hand-built model matches the oracle for every measure") {
  const auto corpus = make_corpus({{0, 1, 2}, {1, 2, 3, 1}, {3, 0}, {2, 2, 0, 1}}, 4);
  const auto dists = phi_only({{0.4, 0.3, 0.2, 0.1}, {0.1, 0.2, 0.3, 0.4}});
  Settings s;
  s.n_top = 3;
  s.window_uci = 2;
  s.window_cv = 3;
  const auto all = score_all(corpus, dists, s);
  REQUIRE(all.size() == 4);
  const std::vector<std::vector<TermId>> tops = {{0, 1, 2}, {3, 2, 1}};
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(std::abs(all[0].per_topic[t] - *oracle::cv(corpus, tops[t], 3, kEps)) < 1e-9);
    CHECK(std::abs(all[1].per_topic[t] - *oracle::uci(corpus, tops[t], 2, kEps)) < 1e-9);
    CHECK(std::abs(all[2].per_topic[t] - *oracle::umass(corpus, tops[t], kEps)) < 1e-9);
    CHECK(std::abs(all[3].per_topic[t] - *oracle::cnpmi(corpus, tops[t], 2, kEps)) < 1e-9);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto single = score_model(corpus, dists, kAllMeasures[i], s);
    CHECK(single.per_topic == all[i].per_topic);
  }
  const auto j = to_json(all[0]);
  CHECK(j.at("measure") == "c_v");
  CHECK(j.at("window") == 3);
  CHECK(j.at("per_topic").size() == 2);
  CHECK(j.contains("skipped_pairs"));
}
