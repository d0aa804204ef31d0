#include "paramforge/coherence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "paramforge/error.hpp"
#include "paramforge/parallel.hpp"

namespace paramforge::coherence {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::CV:
      return "c_v";
    case Measure::CUCI:
      return "c_uci";
    case Measure::CUMASS:
      return "c_umass";
    case Measure::CNPMI:
      return "c_npmi";
  }
  return "?";
}

Measure parse_measure(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "cv") return Measure::CV;
  if (key == "cuci" || key == "uci") return Measure::CUCI;
  if (key == "cumass" || key == "umass") return Measure::CUMASS;
  if (key == "cnpmi" || key == "npmi") return Measure::CNPMI;
  throw ConfigError("unknown coherence measure \"" + std::string(s) + "\"");
}

void Settings::validate() const {
  if (n_top < 2) throw InvalidConfig("coherence needs at least 2 top words");
  if (window_uci < 1 || window_cv < 1) throw InvalidConfig("window width must be >= 1");
  if (!(epsilon >= 0.0)) throw InvalidConfig("epsilon must be >= 0");
  if (!(gamma > 0.0) || std::floor(gamma) != gamma) {
    throw InvalidConfig("gamma must be a positive integer");
  }
}

std::optional<std::size_t> Settings::window_for(Measure m) const {
  switch (m) {
    case Measure::CV:
      return window_cv;
    case Measure::CUCI:
    case Measure::CNPMI:
      return window_uci;
    case Measure::CUMASS:
      return std::nullopt;
  }
  return std::nullopt;
}

TopWords top_words(const lda::TopicDistributions& dists, std::size_t topic,
                   std::size_t n) {
  if (n > dists.vocab_size) {
    throw InvalidConfig("top-word count " + std::to_string(n) +
                        " exceeds vocabulary size " + std::to_string(dists.vocab_size));
  }
  std::vector<TermId> ids(dists.vocab_size);
  std::iota(ids.begin(), ids.end(), TermId{0});
  auto before = [&](TermId a, TermId b) {
    const double pa = dists.phi_at(topic, a);
    const double pb = dists.phi_at(topic, b);
    return pa != pb ? pa > pb : a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    before);
  ids.resize(n);
  return {topic, std::move(ids)};
}

// ---------------------------------------------------------------------------
// Co-occurrence counting

CooccurrenceStats::CooccurrenceStats(Estimator estimator, std::vector<TermId> words)
    : estimator_(estimator), words_(std::move(words)) {
  if (estimator_.kind == Estimator::Kind::BooleanWindow && estimator_.width < 1) {
    throw InvalidConfig("window width must be >= 1");
  }
  std::sort(words_.begin(), words_.end());
  words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  if (words_.empty()) throw InvalidConfig("co-occurrence word set is empty");
  const std::size_t m = words_.size();
  occur_.assign(m, 0);
  pairs_.assign(m * m, 0);
  in_window_.assign(m, 0);
}

std::optional<std::size_t> CooccurrenceStats::slot(TermId w) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), w);
  if (it == words_.end() || *it != w) return std::nullopt;
  return static_cast<std::size_t>(it - words_.begin());
}

bool CooccurrenceStats::tracks(TermId w) const { return slot(w).has_value(); }

std::uint64_t CooccurrenceStats::occur(TermId w) const {
  auto s = slot(w);
  return s ? occur_[*s] : 0;
}

std::uint64_t CooccurrenceStats::cooccur(TermId a, TermId b) const {
  auto sa = slot(a);
  auto sb = slot(b);
  if (!sa || !sb) return 0;
  if (*sa == *sb) return occur_[*sa];
  const auto lo = std::min(*sa, *sb);
  const auto hi = std::max(*sa, *sb);
  return pairs_[lo * words_.size() + hi];
}

void CooccurrenceStats::flush(const std::vector<std::uint32_t>& present,
                              std::uint64_t run) {
  if (run == 0) return;
  const std::size_t m = words_.size();
  unit_count_ += run;
  for (std::size_t i = 0; i < present.size(); ++i) {
    occur_[present[i]] += run;
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      const auto lo = std::min(present[i], present[j]);
      const auto hi = std::max(present[i], present[j]);
      pairs_[lo * m + hi] += run;
    }
  }
}

void CooccurrenceStats::add_document(const std::vector<TermId>& tokens) {
  const std::size_t len = tokens.size();
  if (len == 0) return;
  slot_of_token_.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    auto s = slot(tokens[i]);
    slot_of_token_[i] = s ? static_cast<std::int64_t>(*s) : -1;
  }

  const bool whole_doc =
      estimator_.kind == Estimator::Kind::BooleanDocument || len <= estimator_.width;
  const std::size_t width = whole_doc ? len : estimator_.width;

  // The present set changes only when a tracked word enters or leaves the
  // window, so identical consecutive windows are flushed as one run.
  std::vector<std::uint32_t> present;
  auto enter = [&](std::int64_t s) {
    if (s < 0) return;
    if (in_window_[s]++ == 0) present.push_back(static_cast<std::uint32_t>(s));
  };
  auto leave = [&](std::int64_t s) {
    if (s < 0) return;
    if (--in_window_[s] == 0) {
      auto it = std::find(present.begin(), present.end(), static_cast<std::uint32_t>(s));
      *it = present.back();
      present.pop_back();
    }
  };

  for (std::size_t i = 0; i < width; ++i) enter(slot_of_token_[i]);
  std::uint64_t run = 1;
  for (std::size_t start = 1; start + width <= len; ++start) {
    const std::int64_t out = slot_of_token_[start - 1];
    const std::int64_t in = slot_of_token_[start + width - 1];
    const bool changes = out != in && ((out >= 0 && in_window_[out] == 1) ||
                                       (in >= 0 && in_window_[in] == 0));
    if (changes) {
      flush(present, run);
      run = 0;
    }
    leave(out);
    enter(in);
    ++run;
  }
  flush(present, run);
  for (auto s : present) in_window_[s] = 0;
}

CooccurrenceStats& CooccurrenceStats::operator+=(const CooccurrenceStats& other) {
  if (other.words_ != words_) {
    throw InvariantError("merging co-occurrence statistics over different word sets");
  }
  unit_count_ += other.unit_count_;
  for (std::size_t i = 0; i < occur_.size(); ++i) occur_[i] += other.occur_[i];
  for (std::size_t i = 0; i < pairs_.size(); ++i) pairs_[i] += other.pairs_[i];
  return *this;
}

CooccurrenceStats count_cooccurrences(const Corpus& corpus, const std::vector<TermId>& words,
                                      Estimator estimator, unsigned jobs) {
  const std::size_t D = corpus.documents.size();
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(jobs, D));
  std::vector<CooccurrenceStats> partial(parts, CooccurrenceStats(estimator, words));
  parallel_for(parts, static_cast<unsigned>(parts), [&](std::size_t p) {
    const std::size_t begin = D * p / parts;
    const std::size_t end = D * (p + 1) / parts;
    for (std::size_t d = begin; d < end; ++d) {
      partial[p].add_document(corpus.documents[d].tokens);
    }
  });
  for (std::size_t p = 1; p < parts; ++p) partial[0] += partial[p];
  return std::move(partial[0]);
}

// ---------------------------------------------------------------------------
// Measures

double npmi(double pa, double pb, double pab, double eps) {
  const double joint = pab + eps;
  if (joint >= 1.0) {
    throw UndefinedNpmi("NPMI undefined for joint probability + eps >= 1");
  }
  return std::log(joint / (pa * pb)) / -std::log(joint);
}

namespace {

// NPMI of two present words from window statistics. A pair present in
// every window is perfectly associated: the value is the limit 1. A pair
// that never co-occurs with eps = 0 takes the other limit, -1.
double pair_npmi(double pa, double pb, double pab, double eps) {
  if (pab + eps >= 1.0) return 1.0;
  if (pab + eps <= 0.0) return -1.0;
  return npmi(pa, pb, pab, eps);
}

[[noreturn]] void degenerate(const TopWords& top, std::string_view measure) {
  throw DegenerateTopic("topic " + std::to_string(top.topic) + ": no scorable word pair for " +
                        std::string(measure));
}

void require_two(const TopWords& top) {
  if (top.words.size() < 2) throw InvalidConfig("coherence needs at least 2 top words");
}

template <class PairFn>
TopicScore mean_over_window_pairs(const CooccurrenceStats& stats, const TopWords& top,
                                  std::string_view measure, PairFn&& fn) {
  require_two(top);
  const double units = static_cast<double>(stats.unit_count());
  TopicScore out;
  double sum = 0.0;
  std::size_t used = 0;
  const auto& w = top.words;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      const auto ca = stats.occur(w[i]);
      const auto cb = stats.occur(w[j]);
      if (ca == 0 || cb == 0) {
        ++out.skipped_pairs;
        continue;
      }
      sum += fn(ca / units, cb / units, stats.cooccur(w[i], w[j]) / units);
      ++used;
    }
  }
  if (used == 0) degenerate(top, measure);
  out.value = sum / static_cast<double>(used);
  return out;
}

}  // namespace

TopicScore c_umass(const CooccurrenceStats& stats, const TopWords& top, double eps) {
  require_two(top);
  TopicScore out;
  double sum = 0.0;
  std::size_t used = 0;
  const auto& w = top.words;
  for (std::size_t i = 1; i < w.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const auto dj = stats.occur(w[j]);
      if (dj == 0) {
        ++out.skipped_pairs;
        continue;
      }
      sum += std::log((static_cast<double>(stats.cooccur(w[i], w[j])) + eps) /
                      static_cast<double>(dj));
      ++used;
    }
  }
  if (used == 0) degenerate(top, "c_umass");
  out.value = sum / static_cast<double>(used);
  return out;
}

TopicScore c_uci(const CooccurrenceStats& stats, const TopWords& top, double eps) {
  return mean_over_window_pairs(stats, top, "c_uci", [eps](double pa, double pb, double pab) {
    return std::log((pab + eps) / (pa * pb));
  });
}

TopicScore c_npmi(const CooccurrenceStats& stats, const TopWords& top, double eps) {
  return mean_over_window_pairs(stats, top, "c_npmi", [eps](double pa, double pb, double pab) {
    return pair_npmi(pa, pb, pab, eps);
  });
}

TopicScore c_v(const CooccurrenceStats& stats, const TopWords& top, double eps,
               double gamma) {
  require_two(top);
  const auto& w = top.words;
  const std::size_t n = w.size();
  const double units = static_cast<double>(stats.unit_count());
  TopicScore out;

  std::vector<double> p(n, 0.0);
  bool any_present = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = stats.occur(w[i]);
    p[i] = c == 0 ? 0.0 : c / units;
    any_present = any_present || c > 0;
  }
  if (!any_present) degenerate(top, "c_v");

  // Context vectors u_i[j] = NPMI(w_i, w_j)^gamma.
  std::vector<double> u(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) u[i * n + i] = std::pow(pair_npmi(p[i], p[i], p[i], eps), gamma);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (p[i] == 0.0 || p[j] == 0.0) {
        ++out.skipped_pairs;
        continue;
      }
      const double pab = stats.cooccur(w[i], w[j]) / units;
      const double v = std::pow(pair_npmi(p[i], p[j], pab, eps), gamma);
      u[i * n + j] = v;
      u[j * n + i] = v;
    }
  }
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) total[j] += u[i * n + j];
  }
  double total_norm = 0.0;
  for (double t : total) total_norm += t * t;
  total_norm = std::sqrt(total_norm);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    double norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += u[i * n + j] * total[j];
      norm += u[i * n + j] * u[i * n + j];
    }
    norm = std::sqrt(norm);
    if (norm > 0.0 && total_norm > 0.0) sum += dot / (norm * total_norm);
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

double c_umass(const Corpus& corpus, const TopWords& top, double eps) {
  return c_umass(count_cooccurrences(corpus, top.words, Estimator::document()), top, eps)
      .value;
}

double c_uci(const Corpus& corpus, const TopWords& top, std::size_t window, double eps) {
  return c_uci(count_cooccurrences(corpus, top.words, Estimator::window(window)), top, eps)
      .value;
}

double c_npmi(const Corpus& corpus, const TopWords& top, std::size_t window, double eps) {
  return c_npmi(count_cooccurrences(corpus, top.words, Estimator::window(window)), top, eps)
      .value;
}

double c_v(const Corpus& corpus, const TopWords& top, std::size_t window, double eps,
           double gamma) {
  return c_v(count_cooccurrences(corpus, top.words, Estimator::window(window)), top, eps,
             gamma)
      .value;
}

// ---------------------------------------------------------------------------
// Model scoring

nlohmann::json to_json(const CoherenceReport& r) {
  nlohmann::json per_topic = nlohmann::json::array();
  for (double v : r.per_topic) {
    per_topic.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  }
  return {{"measure", to_string(r.measure)},
          {"k", r.k},
          {"n_top_words", r.n_top_words},
          {"window", r.window ? nlohmann::json(*r.window) : nlohmann::json(nullptr)},
          {"epsilon", r.epsilon},
          {"per_topic", std::move(per_topic)},
          {"aggregate", std::isnan(r.aggregate) ? nlohmann::json(nullptr)
                                                : nlohmann::json(r.aggregate)},
          {"skipped_pairs", r.skipped_pairs},
          {"degenerate_topics", r.degenerate_topics}};
}

namespace {

TopicScore score_topic(Measure m, const CooccurrenceStats& stats, const TopWords& top,
                       const Settings& s) {
  switch (m) {
    case Measure::CV:
      return c_v(stats, top, s.epsilon, s.gamma);
    case Measure::CUCI:
      return c_uci(stats, top, s.epsilon);
    case Measure::CUMASS:
      return c_umass(stats, top, s.epsilon);
    case Measure::CNPMI:
      return c_npmi(stats, top, s.epsilon);
  }
  throw InvariantError("unhandled measure");
}

CoherenceReport score_with(Measure m, const CooccurrenceStats& stats,
                           const std::vector<TopWords>& tops, const Settings& s) {
  CoherenceReport r;
  r.measure = m;
  r.k = tops.size();
  r.n_top_words = s.n_top;
  r.window = s.window_for(m);
  r.epsilon = s.epsilon;
  r.per_topic.assign(tops.size(), std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> skipped(tops.size(), 0);
  std::vector<char> failed(tops.size(), 0);
  parallel_for(tops.size(), s.jobs, [&](std::size_t t) {
    try {
      const auto score = score_topic(m, stats, tops[t], s);
      r.per_topic[t] = score.value;
      skipped[t] = score.skipped_pairs;
    } catch (const DegenerateTopic&) {
      failed[t] = 1;
    }
  });

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < tops.size(); ++t) {
    r.skipped_pairs += skipped[t];
    if (failed[t]) {
      r.degenerate_topics.push_back(t);
      continue;
    }
    sum += r.per_topic[t];
    ++used;
  }
  if (used == 0) {
    throw DegenerateTopic("every topic is degenerate for " + std::string(to_string(m)));
  }
  r.aggregate = sum / static_cast<double>(used);
  return r;
}

std::vector<TopWords> all_top_words(const lda::TopicDistributions& dists, std::size_t n,
                                    std::vector<TermId>& union_out) {
  std::vector<TopWords> tops;
  tops.reserve(dists.k);
  for (std::size_t t = 0; t < dists.k; ++t) {
    tops.push_back(top_words(dists, t, n));
    union_out.insert(union_out.end(), tops.back().words.begin(), tops.back().words.end());
  }
  return tops;
}

Estimator estimator_for(Measure m, const Settings& s) {
  if (auto w = s.window_for(m)) return Estimator::window(*w);
  return Estimator::document();
}

}  // namespace

CoherenceReport score_model(const Corpus& corpus, const lda::TopicDistributions& dists,
                            Measure measure, const Settings& settings) {
  settings.validate();
  std::vector<TermId> vocab_union;
  const auto tops = all_top_words(dists, settings.n_top, vocab_union);
  const auto stats = count_cooccurrences(corpus, vocab_union,
                                         estimator_for(measure, settings), settings.jobs);
  return score_with(measure, stats, tops, settings);
}

std::vector<CoherenceReport> score_all(const Corpus& corpus,
                                       const lda::TopicDistributions& dists,
                                       const Settings& settings) {
  settings.validate();
  std::vector<TermId> vocab_union;
  const auto tops = all_top_words(dists, settings.n_top, vocab_union);

  const auto doc_stats =
      count_cooccurrences(corpus, vocab_union, Estimator::document(), settings.jobs);
  const auto uci_stats = count_cooccurrences(
      corpus, vocab_union, Estimator::window(settings.window_uci), settings.jobs);
  const auto cv_stats =
      settings.window_cv == settings.window_uci
          ? uci_stats
          : count_cooccurrences(corpus, vocab_union, Estimator::window(settings.window_cv),
                                settings.jobs);

  std::vector<CoherenceReport> out;
  for (Measure m : kAllMeasures) {
    const CooccurrenceStats& stats = m == Measure::CUMASS ? doc_stats
                                     : m == Measure::CV   ? cv_stats
                                                          : uci_stats;
    out.push_back(score_with(m, stats, tops, settings));
  }
  return out;
}

}  // namespace paramforge::coherence
