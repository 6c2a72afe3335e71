#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace woc::util {

/// Error raised while reading a sectioned text file. Carries 1-based
/// line/column of the offending token (0 when not applicable).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string source_;
  std::size_t line_;
  std::size_t column_;
};

struct Field {
  std::string text;
  std::size_t column = 0;
};

struct Record {
  std::size_t line = 0;
  std::vector<Field> fields;
};

/// One `[name]` block: a header naming the columns followed by records.
struct Section {
  std::string name;
  std::size_t line = 0;
  std::vector<Field> header;
  std::vector<Record> records;

  std::optional<std::size_t> column_index(std::string_view column) const;
};

/// Line-oriented, comma-separated, `[section]`-delimited document; `#`
/// starts a comment that runs to end of line.
class SectionedDocument {
 public:
  static SectionedDocument parse(std::string_view text, std::string source = "<input>");

  const std::string& source() const noexcept { return source_; }
  const std::vector<Section>& sections() const noexcept { return sections_; }
  const Section* find(std::string_view name) const;

 private:
  std::string source_;
  std::vector<Section> sections_;
};

/// Typed column access for one record with errors pointing at the cell.
class RecordReader {
 public:
  RecordReader(const SectionedDocument& doc, const Section& section, const Record& record);

  bool has(std::string_view column) const;
  std::string string(std::string_view column) const;
  std::optional<std::string> optional_string(std::string_view column) const;
  double number(std::string_view column) const;
  std::optional<double> optional_number(std::string_view column) const;
  bool boolean(std::string_view column) const;
  std::optional<bool> optional_boolean(std::string_view column) const;

  [[noreturn]] void fail(std::string_view column, const std::string& message) const;
  [[noreturn]] void fail(const std::string& message) const;

 private:
  const Field* cell(std::string_view column) const;

  const SectionedDocument& doc_;
  const Section& section_;
  const Record& record_;
};

/// Key/value view of a section with header `key,value`.
std::vector<std::pair<std::string, const Record*>> key_values(const SectionedDocument& doc,
                                                              const Section& section);

}  // namespace woc::util
