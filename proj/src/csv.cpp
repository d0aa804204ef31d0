#include "paramforge/csv.hpp"

#include "paramforge/error.hpp"

namespace paramforge::csv {

namespace {

[[noreturn]] void fail(std::size_t record, const std::string& why) {
  throw MalformedCsv("malformed CSV at row " + std::to_string(record) + ": " +
                     why);
}

}  // namespace

std::vector<Row> parse(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<Row> rows;
  Row row;
  std::string field;
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto end_record = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
  };

  while (i < n) {
    const std::size_t record = rows.size() + 1;
    if (text[i] == '"') {
      ++i;
      for (;;) {
        if (i >= n) fail(record, "unterminated quoted field");
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field.push_back(text[i++]);
      }
      if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        fail(record, "unexpected character after closing quote");
      }
    } else {
      while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        if (text[i] == '"') fail(record, "quote inside unquoted field");
        field.push_back(text[i++]);
      }
    }

    if (i >= n) {
      end_record();
      break;
    }
    if (text[i] == ',') {
      row.push_back(std::move(field));
      field.clear();
      ++i;
      if (i >= n) end_record();  // trailing comma yields an empty last field
    } else {
      if (text[i] == '\r') {
        ++i;
        if (i < n && text[i] == '\n') ++i;
      } else {
        ++i;
      }
      end_record();
    }
  }
  return rows;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace paramforge::csv
