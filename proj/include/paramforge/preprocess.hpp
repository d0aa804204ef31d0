#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "paramforge/corpus_ingest.hpp"

namespace paramforge::preprocess {

using TermId = std::uint32_t;

struct Document {
  std::string id;
  std::vector<TermId> tokens;
  // Token count before stopword removal.
  std::size_t raw_len = 0;

  bool operator==(const Document&) const = default;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terms);

  // Returns the id of `term`, inserting it if absent.
  TermId add(std::string_view term);
  std::optional<TermId> find(std::string_view term) const;

  const std::string& term(TermId id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  bool operator==(const Vocabulary& o) const { return terms_ == o.terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> index_;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  std::size_t total_tokens = 0;

  std::size_t nonempty_documents() const;
  // Throws InvariantError if ids are out of range or total_tokens is off.
  void check_invariants() const;

  bool operator==(const Corpus&) const = default;
};

using StopList = std::unordered_set<std::string>;
using LemmaDict = std::unordered_map<std::string, std::string>;

struct PreprocessConfig {
  std::size_t min_token_len = 2;
  std::size_t max_token_len = 15;
  std::optional<std::filesystem::path> stopword_path;
  std::optional<std::filesystem::path> lemma_dict_path;
  std::size_t min_doc_freq = 1;
  bool keep_numeric = false;

  void validate() const;
};

std::string clean_text(std::string_view raw);
std::vector<std::string> tokenize(std::string_view cleaned, const PreprocessConfig& cfg);
std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                          const StopList& stoplist);
// Rule-based suffix stripping on one token (no dictionary).
std::string stem_rules(std::string token);
std::vector<std::string> lemmatize(std::vector<std::string> tokens,
                                   const LemmaDict& lemma_dict);

// Stopword file: one token per line, '#' starts a comment.
StopList parse_stopwords(std::string_view text);
StopList load_stopwords(const std::filesystem::path& path);
// Built-in English list used when no stopword file is configured.
const StopList& default_stopwords();
// Lemma dictionary: "surface<TAB>lemma" per line.
LemmaDict parse_lemma_dict(std::string_view text);
LemmaDict load_lemma_dict(const std::filesystem::path& path);

// Steps 3-6 for one record, before vocabulary filtering.
struct TokenizedRecord {
  std::vector<std::string> tokens;
  std::size_t raw_len = 0;
};
TokenizedRecord process_record(std::string_view text, const PreprocessConfig& cfg,
                               const StopList& stoplist, const LemmaDict& lemmas);

Corpus build_corpus(const std::vector<ingest::RawRecord>& records,
                    const PreprocessConfig& cfg, const StopList& stoplist,
                    const LemmaDict& lemmas, unsigned jobs = 1);
// Loads the stopword/lemma files named in cfg (or the defaults).
Corpus build_corpus(const std::vector<ingest::RawRecord>& records,
                    const PreprocessConfig& cfg, unsigned jobs = 1);

// On-disk form: vocabulary.txt (line number = id) + documents.jsonl.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace paramforge::preprocess
