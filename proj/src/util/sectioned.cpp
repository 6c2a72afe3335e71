#include "woc/util/sectioned.hpp"

#include <fmt/format.h>

#include "woc/util/text.hpp"

namespace woc::util {

ParseError::ParseError(std::string source, std::size_t line, std::size_t column,
                       const std::string& what)
    : std::runtime_error(fmt::format("{}:{}:{}: {}", source, line, column, what)),
      source_(std::move(source)),
      line_(line),
      column_(column) {}

std::optional<std::size_t> Section::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].text == column) {
      return i;
    }
  }
  return std::nullopt;
}

namespace {

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto raw = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    std::size_t lead = 0;
    while (lead < raw.size() && (raw[lead] == ' ' || raw[lead] == '\t')) ++lead;
    fields.push_back(Field{std::string(trim(raw)), start + lead + 1});
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return fields;
}

}  // namespace

SectionedDocument SectionedDocument::parse(std::string_view text, std::string source) {
  SectionedDocument doc;
  doc.source_ = std::move(source);
  Section* current = nullptr;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") {
    pos = 3;
  }
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    auto raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    ++line_no;
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    if (!raw.empty() && raw.back() == '\r') {
      raw.remove_suffix(1);
    }
    auto line = trim(raw);
    if (line.empty()) {
      continue;
    }
    std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError(doc.source_, line_no, indent + 1, "malformed section header");
      }
      auto name = trim(line.substr(1, line.size() - 2));
      for (const auto& s : doc.sections_) {
        if (s.name == name) {
          throw ParseError(doc.source_, line_no, indent + 2,
                           fmt::format("duplicate section [{}]", name));
        }
      }
      doc.sections_.push_back(Section{std::string(name), line_no, {}, {}});
      current = &doc.sections_.back();
      continue;
    }
    if (current == nullptr) {
      throw ParseError(doc.source_, line_no, indent + 1, "record outside of any [section]");
    }
    auto fields = split_fields(raw);
    if (current->header.empty()) {
      for (const auto& f : fields) {
        if (f.text.empty()) {
          throw ParseError(doc.source_, line_no, f.column, "empty column name in header");
        }
      }
      current->header = std::move(fields);
      continue;
    }
    if (fields.size() != current->header.size()) {
      std::size_t col = fields.size() > current->header.size()
                            ? fields[current->header.size()].column
                            : raw.size() + 1;
      throw ParseError(doc.source_, line_no, col,
                       fmt::format("expected {} fields in [{}], found {}", current->header.size(),
                                   current->name, fields.size()));
    }
    current->records.push_back(Record{line_no, std::move(fields)});
  }
  return doc;
}

const Section* SectionedDocument::find(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) {
      return &s;
    }
  }
  return nullptr;
}

RecordReader::RecordReader(const SectionedDocument& doc, const Section& section,
                           const Record& record)
    : doc_(doc), section_(section), record_(record) {}

const Field* RecordReader::cell(std::string_view column) const {
  auto idx = section_.column_index(column);
  if (!idx) {
    return nullptr;
  }
  return &record_.fields[*idx];
}

bool RecordReader::has(std::string_view column) const { return cell(column) != nullptr; }

void RecordReader::fail(std::string_view column, const std::string& message) const {
  const Field* f = cell(column);
  throw ParseError(doc_.source(), record_.line, f ? f->column : 1, message);
}

void RecordReader::fail(const std::string& message) const {
  throw ParseError(doc_.source(), record_.line, 1, message);
}

std::string RecordReader::string(std::string_view column) const {
  const Field* f = cell(column);
  if (f == nullptr) {
    throw ParseError(doc_.source(), section_.line, 1,
                     fmt::format("section [{}] lacks column '{}'", section_.name, column));
  }
  if (f->text.empty()) {
    throw ParseError(doc_.source(), record_.line, f->column,
                     fmt::format("empty value for '{}'", column));
  }
  return f->text;
}

std::optional<std::string> RecordReader::optional_string(std::string_view column) const {
  const Field* f = cell(column);
  if (f == nullptr || f->text.empty()) {
    return std::nullopt;
  }
  return f->text;
}

double RecordReader::number(std::string_view column) const {
  auto text = string(column);
  double v = 0.0;
  if (!parse_double(text, v)) {
    fail(column, fmt::format("'{}' is not a number (column '{}')", text, column));
  }
  return v;
}

std::optional<double> RecordReader::optional_number(std::string_view column) const {
  auto text = optional_string(column);
  if (!text) {
    return std::nullopt;
  }
  return number(column);
}

bool RecordReader::boolean(std::string_view column) const {
  auto text = string(column);
  if (text == "true" || text == "1" || text == "yes") {
    return true;
  }
  if (text == "false" || text == "0" || text == "no") {
    return false;
  }
  fail(column, fmt::format("'{}' is not a boolean (column '{}')", text, column));
}

std::optional<bool> RecordReader::optional_boolean(std::string_view column) const {
  if (!optional_string(column)) {
    return std::nullopt;
  }
  return boolean(column);
}

std::vector<std::pair<std::string, const Record*>> key_values(const SectionedDocument& doc,
                                                              const Section& section) {
  auto key = section.column_index("key");
  auto value = section.column_index("value");
  if (!key || !value) {
    throw ParseError(doc.source(), section.line, 1,
                     fmt::format("section [{}] needs a 'key,value' header", section.name));
  }
  std::vector<std::pair<std::string, const Record*>> out;
  for (const auto& r : section.records) {
    for (const auto& [k, _] : out) {
      if (k == r.fields[*key].text) {
        throw ParseError(doc.source(), r.line, r.fields[*key].column,
                         fmt::format("duplicate key '{}'", k));
      }
    }
    out.emplace_back(r.fields[*key].text, &r);
  }
  return out;
}

}  // namespace woc::util
