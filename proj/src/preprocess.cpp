#include "paramforge/preprocess.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "paramforge/error.hpp"
#include "paramforge/parallel.hpp"
#include "paramforge/utf8.hpp"

#include "default_stopwords.inc"

namespace paramforge::preprocess {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         std::string_view(s).substr(s.size() - suffix.size()) == suffix;
}

bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

// Length of a URL starting at cps[start] ("scheme://" then non-space), or 0.
std::size_t url_length(const std::u32string& cps, std::size_t start) {
  auto is_scheme_char = [](char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
           (c >= U'0' && c <= U'9') || c == U'+' || c == U'.' || c == U'-';
  };
  const char32_t first = cps[start];
  if (!((first >= U'a' && first <= U'z') || (first >= U'A' && first <= U'Z'))) {
    return 0;
  }
  std::size_t i = start + 1;
  while (i < cps.size() && is_scheme_char(cps[i])) ++i;
  if (i + 3 > cps.size() || cps[i] != U':' || cps[i + 1] != U'/' ||
      cps[i + 2] != U'/') {
    return 0;
  }
  i += 3;
  while (i < cps.size() && !utf8::is_space(cps[i])) ++i;
  return i - start;
}

std::string lowercase(std::string_view s) {
  std::string out;
  for (char32_t cp : utf8::decode(s)) utf8::append(out, utf8::to_lower(cp));
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> terms) {
  for (auto& t : terms) {
    if (!index_.emplace(t, static_cast<TermId>(terms_.size())).second) {
      throw DataError("duplicate vocabulary term \"" + t + "\"");
    }
    terms_.push_back(std::move(t));
  }
}

TermId Vocabulary::add(std::string_view term) {
  auto [it, inserted] =
      index_.emplace(std::string(term), static_cast<TermId>(terms_.size()));
  if (inserted) terms_.emplace_back(term);
  return it->second;
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::nonempty_documents() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.tokens.empty() ? 0 : 1;
  return n;
}

void Corpus::check_invariants() const {
  std::size_t total = 0;
  for (const auto& d : documents) {
    for (TermId t : d.tokens) {
      if (t >= vocabulary.size()) {
        throw InvariantError("document " + d.id + " references term id " +
                             std::to_string(t) + " outside vocabulary");
      }
    }
    total += d.tokens.size();
  }
  if (total != total_tokens) {
    throw InvariantError("corpus total_tokens mismatch");
  }
}

void PreprocessConfig::validate() const {
  if (min_token_len < 1 || min_token_len > max_token_len) {
    throw InvalidConfig("token length bounds must satisfy 1 <= min <= max");
  }
  if (min_doc_freq < 1) throw InvalidConfig("min_doc_freq must be >= 1");
}

std::string clean_text(std::string_view raw) {
  const std::u32string cps = utf8::decode(raw);
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < cps.size();) {
    if (std::size_t n = url_length(cps, i); n > 0) {
      i += n;
      continue;
    }
    const char32_t cp = cps[i++];
    if (utf8::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (utf8::is_control(cp) || utf8::is_symbol(cp)) continue;
    if (pending_space) out.push_back(' ');
    pending_space = false;
    utf8::append(out, utf8::to_lower(cp));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view cleaned, const PreprocessConfig& cfg) {
  std::vector<std::string> tokens;
  std::u32string current;
  auto flush = [&] {
    if (current.empty()) return;
    const bool numeric = std::all_of(current.begin(), current.end(), is_ascii_digit);
    const std::size_t len = current.size();
    if (len >= cfg.min_token_len && len <= cfg.max_token_len &&
        (cfg.keep_numeric || !numeric)) {
      tokens.push_back(utf8::encode(current));
    }
    current.clear();
  };
  for (char32_t cp : utf8::decode(cleaned)) {
    if (utf8::is_alnum(cp)) {
      current.push_back(cp);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                          const StopList& stoplist) {
  std::erase_if(tokens, [&](const std::string& t) { return stoplist.count(t) > 0; });
  return tokens;
}

std::string stem_rules(std::string token) {
  // Each rule shortens the token, so iterating to a fixed point terminates
  // and makes the rule path idempotent.
  for (;;) {
    const std::size_t len = utf8::length(token);
    if (ends_with(token, "ies") && len > 3) {
      token.replace(token.size() - 3, 3, "y");
    } else if (ends_with(token, "sses")) {
      token.erase(token.size() - 2);
    } else if (ends_with(token, "s") && !ends_with(token, "ss") && len > 3) {
      token.pop_back();
    } else if (ends_with(token, "ing") && len >= 3 + 4) {
      token.erase(token.size() - 3);
    } else if (ends_with(token, "ed") && len >= 2 + 4) {
      token.erase(token.size() - 2);
    } else {
      return token;
    }
  }
}

std::vector<std::string> lemmatize(std::vector<std::string> tokens,
                                   const LemmaDict& lemma_dict) {
  for (auto& t : tokens) {
    if (auto it = lemma_dict.find(t); it != lemma_dict.end()) {
      t = it->second;
    } else {
      t = stem_rules(std::move(t));
    }
  }
  return tokens;
}

StopList parse_stopwords(std::string_view text) {
  StopList out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string w;
    while (words >> w) out.insert(lowercase(w));
  }
  return out;
}

StopList load_stopwords(const std::filesystem::path& path) {
  return parse_stopwords(ingest::read_file(path));
}

const StopList& default_stopwords() {
  static const StopList list = parse_stopwords(kDefaultStopwords);
  return list;
}

LemmaDict parse_lemma_dict(std::string_view text) {
  LemmaDict out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("lemma dictionary line " + std::to_string(line_no) +
                      ": expected surface<TAB>lemma");
    }
    out[lowercase(line.substr(0, tab))] = lowercase(line.substr(tab + 1));
  }
  return out;
}

LemmaDict load_lemma_dict(const std::filesystem::path& path) {
  return parse_lemma_dict(ingest::read_file(path));
}

TokenizedRecord process_record(std::string_view text, const PreprocessConfig& cfg,
                               const StopList& stoplist, const LemmaDict& lemmas) {
  TokenizedRecord out;
  auto tokens = tokenize(clean_text(text), cfg);
  out.raw_len = tokens.size();
  tokens = lemmatize(remove_stopwords(std::move(tokens), stoplist), lemmas);
  // A lemma can itself be a stopword ("was" -> "be" via a dictionary).
  out.tokens = remove_stopwords(std::move(tokens), stoplist);
  return out;
}

Corpus build_corpus(const std::vector<ingest::RawRecord>& records,
                    const PreprocessConfig& cfg, const StopList& stoplist,
                    const LemmaDict& lemmas, unsigned jobs) {
  cfg.validate();
  std::vector<TokenizedRecord> processed(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    processed[i] = process_record(records[i].text, cfg, stoplist, lemmas);
  });

  // Document frequencies, then ids in order of first surviving occurrence.
  std::unordered_map<std::string, std::size_t> doc_freq;
  for (const auto& rec : processed) {
    std::unordered_set<std::string_view> seen(rec.tokens.begin(), rec.tokens.end());
    for (auto t : seen) ++doc_freq[std::string(t)];
  }

  Corpus corpus;
  corpus.documents.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Document doc;
    doc.id = records[i].id;
    doc.raw_len = processed[i].raw_len;
    for (const auto& t : processed[i].tokens) {
      if (doc_freq[t] >= cfg.min_doc_freq) doc.tokens.push_back(corpus.vocabulary.add(t));
    }
    corpus.total_tokens += doc.tokens.size();
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.total_tokens == 0) {
    throw EmptyCorpus("no document retains any token after preprocessing; "
                      "the configuration is too aggressive");
  }
  return corpus;
}

Corpus build_corpus(const std::vector<ingest::RawRecord>& records,
                    const PreprocessConfig& cfg, unsigned jobs) {
  const StopList stoplist =
      cfg.stopword_path ? load_stopwords(*cfg.stopword_path) : default_stopwords();
  const LemmaDict lemmas =
      cfg.lemma_dict_path ? load_lemma_dict(*cfg.lemma_dict_path) : LemmaDict{};
  return build_corpus(records, cfg, stoplist, lemmas, jobs);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream vocab(dir / "vocabulary.txt", std::ios::binary);
  for (const auto& t : corpus.vocabulary.terms()) vocab << t << '\n';
  std::ofstream docs(dir / "documents.jsonl", std::ios::binary);
  for (const auto& d : corpus.documents) {
    nlohmann::json j;
    j["id"] = d.id;
    j["token_ids"] = d.tokens;
    j["raw_len"] = d.raw_len;
    docs << j.dump() << '\n';
  }
  if (!vocab || !docs) throw DataError("failed writing corpus to " + dir.string());
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  {
    std::ifstream in(dir / "vocabulary.txt", std::ios::binary);
    if (!in) throw ConfigError("cannot open " + (dir / "vocabulary.txt").string());
    std::vector<std::string> terms;
    std::string line;
    while (std::getline(in, line)) terms.push_back(line);
    corpus.vocabulary = Vocabulary(std::move(terms));
  }
  std::ifstream in(dir / "documents.jsonl", std::ios::binary);
  if (!in) throw ConfigError("cannot open " + (dir / "documents.jsonl").string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Document d;
      d.id = j.at("id").get<std::string>();
      d.tokens = j.at("token_ids").get<std::vector<TermId>>();
      d.raw_len = j.value("raw_len", d.tokens.size());
      corpus.total_tokens += d.tokens.size();
      corpus.documents.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("documents.jsonl line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  corpus.check_invariants();
  return corpus;
}

}  // namespace paramforge::preprocess
