#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "paramforge/lda_gibbs.hpp"
#include "paramforge/preprocess.hpp"

namespace paramforge::coherence {

using preprocess::Corpus;
using preprocess::TermId;

enum class Measure { CV, CUCI, CUMASS, CNPMI };
inline constexpr std::array<Measure, 4> kAllMeasures = {Measure::CV, Measure::CUCI,
                                                        Measure::CUMASS, Measure::CNPMI};

std::string_view to_string(Measure m);
// Accepts "cv", "c_v", "cuci", "c_uci", "umass", "c_umass", "npmi", "c_npmi"
// (case-insensitive).
Measure parse_measure(std::string_view s);

struct Settings {
  std::size_t n_top = 20;
  std::size_t window_uci = 10;  // C_uci and C_npmi
  std::size_t window_cv = 110;
  double epsilon = 1e-12;
  double gamma = 1.0;
  unsigned jobs = 1;

  void validate() const;
  std::optional<std::size_t> window_for(Measure m) const;
};

struct TopWords {
  std::size_t topic = 0;
  std::vector<TermId> words;
};

// Top-n words of one phi row: descending probability, ties by ascending id.
TopWords top_words(const lda::TopicDistributions& dists, std::size_t topic,
                   std::size_t n);

struct Estimator {
  enum class Kind { BooleanDocument, BooleanWindow };
  Kind kind = Kind::BooleanDocument;
  std::size_t width = 0;

  static Estimator document() { return {Kind::BooleanDocument, 0}; }
  static Estimator window(std::size_t w) { return {Kind::BooleanWindow, w}; }
};

// Boolean presence counts over virtual documents for a fixed word set.
// Documents without tokens contribute no units; windows never cross
// document boundaries.
class CooccurrenceStats {
 public:
  CooccurrenceStats(Estimator estimator, std::vector<TermId> words);

  const Estimator& estimator() const { return estimator_; }
  std::uint64_t unit_count() const { return unit_count_; }
  const std::vector<TermId>& words() const { return words_; }
  bool tracks(TermId w) const;
  // Number of units containing w (0 if untracked).
  std::uint64_t occur(TermId w) const;
  // Number of units containing both; occur(a) when a == b.
  std::uint64_t cooccur(TermId a, TermId b) const;

  // Accumulates one document's units.
  void add_document(const std::vector<TermId>& tokens);
  CooccurrenceStats& operator+=(const CooccurrenceStats& other);

 private:
  std::optional<std::size_t> slot(TermId w) const;
  void flush(const std::vector<std::uint32_t>& present, std::uint64_t run);

  Estimator estimator_;
  std::vector<TermId> words_;  // sorted, unique
  std::uint64_t unit_count_ = 0;
  std::vector<std::uint64_t> occur_;
  std::vector<std::uint64_t> pairs_;  // m x m, upper triangle used
  // Scratch for add_document.
  std::vector<std::int64_t> slot_of_token_;
  std::vector<std::uint32_t> in_window_;
};

CooccurrenceStats count_cooccurrences(const Corpus& corpus, const std::vector<TermId>& words,
                                      Estimator estimator, unsigned jobs = 1);

// ln[(pab+eps)/(pa*pb)] / -ln(pab+eps). Throws UndefinedNpmi when
// pab + eps >= 1.
double npmi(double pa, double pb, double pab, double eps);

struct TopicScore {
  double value = 0.0;
  std::size_t skipped_pairs = 0;
};

// Scores on precomputed statistics; each throws DegenerateTopic when no
// pair (or, for C_v, no word) has usable counts.
TopicScore c_umass(const CooccurrenceStats& doc_stats, const TopWords& top, double eps);
TopicScore c_uci(const CooccurrenceStats& window_stats, const TopWords& top, double eps);
TopicScore c_npmi(const CooccurrenceStats& window_stats, const TopWords& top, double eps);
TopicScore c_v(const CooccurrenceStats& window_stats, const TopWords& top, double eps,
               double gamma = 1.0);

// Convenience forms that count their own statistics.
double c_umass(const Corpus& corpus, const TopWords& top, double eps);
double c_uci(const Corpus& corpus, const TopWords& top, std::size_t window, double eps);
double c_npmi(const Corpus& corpus, const TopWords& top, std::size_t window, double eps);
double c_v(const Corpus& corpus, const TopWords& top, std::size_t window, double eps,
           double gamma = 1.0);

struct CoherenceReport {
  Measure measure = Measure::CV;
  std::size_t k = 0;
  std::vector<double> per_topic;  // NaN marks a degenerate topic
  std::vector<std::size_t> degenerate_topics;
  double aggregate = 0.0;
  std::size_t n_top_words = 0;
  std::optional<std::size_t> window;
  double epsilon = 0.0;
  std::size_t skipped_pairs = 0;
};

nlohmann::json to_json(const CoherenceReport& r);

CoherenceReport score_model(const Corpus& corpus, const lda::TopicDistributions& dists,
                            Measure measure, const Settings& settings = {});
// All four measures; statistics passes are shared across measures that use
// the same estimator.
std::vector<CoherenceReport> score_all(const Corpus& corpus,
                                       const lda::TopicDistributions& dists,
                                       const Settings& settings = {});

}  // namespace paramforge::coherence
