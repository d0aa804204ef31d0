#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace paramforge::ingest {

enum class Source { AcademicExport, PostExport };

std::string_view to_string(Source s);

struct RawRecord {
  std::string id;
  Source source = Source::AcademicExport;
  std::string query_term;
  std::string text;
  std::optional<int> year;

  bool operator==(const RawRecord&) const = default;
};

struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t duplicates_removed = 0;
  std::size_t empty_dropped = 0;

  bool balanced() const {
    return rows_read == rows_kept + duplicates_removed + empty_dropped;
  }
  IngestStats& operator+=(const IngestStats& o);
};

struct IngestBatch {
  std::vector<RawRecord> records;
  IngestStats stats;
};

// Header names used to locate academic-export columns.
struct AcademicColumns {
  std::string title = "Article Title";
  std::string abstract = "Abstract";
  std::string keywords = "Author Keywords";
  std::string year = "Publication Year";
};

struct PostColumns {
  std::string query = "query";
  std::string post = "post";
};

// Builds "Title. Abstract. kw1; kw2"; empty parts are left out and keyword
// lists are re-joined with "; ".
std::string join_academic_text(std::string_view title, std::string_view abstract,
                               std::string_view keywords);

// Parsers over in-memory CSV text; `id_prefix` namespaces record ids.
IngestBatch parse_academic_csv(std::string_view text, const AcademicColumns& cols,
                               std::string_view id_prefix);
IngestBatch parse_post_csv(std::string_view text, const PostColumns& cols,
                           std::string_view id_prefix);

IngestBatch read_academic_csv(const std::filesystem::path& path,
                              const AcademicColumns& cols = {});
IngestBatch read_post_csv(const std::filesystem::path& path,
                          const PostColumns& cols = {});

// Lowercased, whitespace-collapsed, trimmed text; the dedup key.
std::string normalize_for_dedup(std::string_view text);

// Keeps the first record of each normalized-text class, in input order.
// The returned stats count only this step (rows_read = input size).
IngestBatch deduplicate(std::vector<RawRecord> records);

nlohmann::json to_json(const RawRecord& r);
RawRecord record_from_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);

}  // namespace paramforge::ingest
