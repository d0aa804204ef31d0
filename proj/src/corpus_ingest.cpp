#include "paramforge/corpus_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "paramforge/csv.hpp"
#include "paramforge/error.hpp"
#include "paramforge/utf8.hpp"

namespace paramforge::ingest {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void check_utf8(std::string_view text, std::string_view what) {
  if (auto bad = utf8::first_invalid(text)) {
    throw EncodingError(std::string(what) + ": invalid UTF-8 at byte offset " +
                        std::to_string(*bad));
  }
}

bool is_blank_line(const csv::Row& row) {
  return row.size() == 1 && row[0].empty();
}

std::vector<csv::Row> load_rows(std::string_view text, std::string_view what) {
  check_utf8(text, what);
  auto rows = csv::parse(text);
  std::erase_if(rows, is_blank_line);
  return rows;
}

std::optional<std::size_t> find_column(const csv::Row& header,
                                       std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  return std::nullopt;
}

std::size_t require_column(const csv::Row& header, std::string_view name) {
  auto idx = find_column(header, name);
  if (!idx) {
    throw MissingColumn("missing column \"" + std::string(name) +
                        "\" in header (row 1)");
  }
  return *idx;
}

void check_width(const csv::Row& row, std::size_t width, std::size_t row_no) {
  if (row.size() != width) {
    throw MalformedCsv("malformed CSV at row " + std::to_string(row_no) +
                       ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(row.size()));
  }
}

std::optional<int> parse_year(std::string_view s) {
  s = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

std::string make_id(std::string_view prefix, std::size_t row_no) {
  return std::string(prefix) + ":" + std::to_string(row_no);
}

}  // namespace

std::string_view to_string(Source s) {
  return s == Source::AcademicExport ? "academic" : "post";
}

IngestStats& IngestStats::operator+=(const IngestStats& o) {
  rows_read += o.rows_read;
  rows_kept += o.rows_kept;
  duplicates_removed += o.duplicates_removed;
  empty_dropped += o.empty_dropped;
  return *this;
}

std::string join_academic_text(std::string_view title, std::string_view abstract,
                               std::string_view keywords) {
  std::vector<std::string> parts;
  if (auto t = trim(title); !t.empty()) parts.emplace_back(t);
  if (auto a = trim(abstract); !a.empty()) parts.emplace_back(a);

  std::string kw;
  std::string_view rest = keywords;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    auto item = trim(rest.substr(0, semi));
    if (!item.empty()) {
      if (!kw.empty()) kw += "; ";
      kw += item;
    }
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  if (!kw.empty()) parts.push_back(std::move(kw));

  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ". ";
    out += parts[i];
  }
  return out;
}

IngestBatch parse_academic_csv(std::string_view text, const AcademicColumns& cols,
                               std::string_view id_prefix) {
  const auto rows = load_rows(text, id_prefix);
  if (rows.empty()) throw EmptyFile(std::string(id_prefix) + ": empty file");

  const auto& header = rows.front();
  const std::size_t title = require_column(header, cols.title);
  const std::size_t abstract = require_column(header, cols.abstract);
  const auto keywords = find_column(header, cols.keywords);
  const auto year = find_column(header, cols.year);

  IngestBatch batch;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    check_width(row, header.size(), r + 1);
    ++batch.stats.rows_read;
    if (trim(row[title]).empty() && trim(row[abstract]).empty()) {
      ++batch.stats.empty_dropped;
      continue;
    }
    RawRecord rec;
    rec.id = make_id(id_prefix, r);
    rec.source = Source::AcademicExport;
    rec.text = join_academic_text(row[title], row[abstract],
                                  keywords ? row[*keywords] : std::string{});
    if (year) rec.year = parse_year(row[*year]);
    batch.records.push_back(std::move(rec));
  }
  batch.stats.rows_kept = batch.records.size();
  return batch;
}

IngestBatch parse_post_csv(std::string_view text, const PostColumns& cols,
                           std::string_view id_prefix) {
  const auto rows = load_rows(text, id_prefix);
  if (rows.empty()) throw EmptyFile(std::string(id_prefix) + ": empty file");

  const auto& header = rows.front();
  if (header.size() != 2) {
    throw MalformedCsv("malformed CSV at row 1: post export must have 2 columns, got " +
                       std::to_string(header.size()));
  }
  // Named lookup first; a two-column file with other header names is read
  // positionally as (query, post).
  std::size_t q = 0;
  std::size_t p = 1;
  if (auto qi = find_column(header, cols.query), pi = find_column(header, cols.post);
      qi && pi) {
    q = *qi;
    p = *pi;
  }

  IngestBatch batch;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    check_width(row, 2, r + 1);
    ++batch.stats.rows_read;
    auto body = trim(row[p]);
    if (body.empty()) {
      ++batch.stats.empty_dropped;
      continue;
    }
    RawRecord rec;
    rec.id = make_id(id_prefix, r);
    rec.source = Source::PostExport;
    rec.query_term = std::string(trim(row[q]));
    rec.text = std::string(body);
    batch.records.push_back(std::move(rec));
  }
  batch.stats.rows_kept = batch.records.size();
  return batch;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

IngestBatch read_academic_csv(const std::filesystem::path& path,
                              const AcademicColumns& cols) {
  const auto text = read_file(path);
  if (text.empty()) throw EmptyFile(path.string() + ": empty file");
  return parse_academic_csv(text, cols, path.stem().string());
}

IngestBatch read_post_csv(const std::filesystem::path& path, const PostColumns& cols) {
  const auto text = read_file(path);
  if (text.empty()) throw EmptyFile(path.string() + ": empty file");
  return parse_post_csv(text, cols, path.stem().string());
}

std::string normalize_for_dedup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    utf8::append(out, utf8::to_lower(cp));
  }
  return out;
}

IngestBatch deduplicate(std::vector<RawRecord> records) {
  IngestBatch batch;
  batch.stats.rows_read = records.size();
  std::unordered_set<std::string> seen;
  seen.reserve(records.size());
  for (auto& rec : records) {
    if (seen.insert(normalize_for_dedup(rec.text)).second) {
      batch.records.push_back(std::move(rec));
    } else {
      ++batch.stats.duplicates_removed;
    }
  }
  batch.stats.rows_kept = batch.records.size();
  return batch;
}

nlohmann::json to_json(const RawRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["source"] = to_string(r.source);
  j["query_term"] = r.query_term;
  j["text"] = r.text;
  j["year"] = r.year ? nlohmann::json(*r.year) : nlohmann::json(nullptr);
  return j;
}

RawRecord record_from_json(const nlohmann::json& j) {
  RawRecord r;
  r.id = j.at("id").get<std::string>();
  const auto src = j.at("source").get<std::string>();
  if (src == "academic") {
    r.source = Source::AcademicExport;
  } else if (src == "post") {
    r.source = Source::PostExport;
  } else {
    throw DataError("unknown record source \"" + src + "\"");
  }
  r.query_term = j.value("query_term", std::string{});
  r.text = j.at("text").get<std::string>();
  if (j.contains("year") && !j["year"].is_null()) r.year = j["year"].get<int>();
  return r;
}

}  // namespace paramforge::ingest
