#include "mpsxai/table.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mpsxai/error.hpp"

namespace mpsxai {

std::size_t RawTable::num_columns() const {
  if (!header.empty()) return header.size();
  return rows.empty() ? 0 : rows.front().size();
}

std::optional<Label> parse_label(const std::string& text) {
  std::string t;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      t += char(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (t == "0" || t == "benign" || t == "false" || t == "no") return Label::Benign;
  if (t == "1" || t == "attack" || t == "true" || t == "yes") return Label::Attack;
  return std::nullopt;
}

namespace {

// Reads one record; returns false at end of input. Tracks physical lines so
// errors can point at the record's first line.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                 bool& blank) {
  fields.clear();
  blank = true;
  if (in.peek() == std::char_traits<char>::eof()) return false;
  ++line;
  std::string field;
  bool quoted = false, was_quoted = false;
  char c;
  while (in.get(c)) {
    if (c != '\n' && c != '\r') blank = false;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": unterminated quote");
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

LabeledTable parse_csv(std::istream& in, bool has_header,
                       const std::optional<std::string>& label_column) {
  LabeledTable out;
  std::vector<std::string> fields;
  std::size_t line = 0;
  bool blank = false;
  std::size_t width = 0;
  bool have_width = false;

  if (has_header) {
    if (!read_record(in, fields, line, blank)) throw Error(ErrorKind::Parse, "empty input: missing header");
    out.table.header = fields;
    width = fields.size();
    have_width = true;
  }
  while (true) {
    const std::size_t start = line + 1;
    if (!read_record(in, fields, line, blank)) break;
    if (blank && in.peek() == std::char_traits<char>::eof()) break;  // trailing blank line
    if (!have_width) {
      width = fields.size();
      have_width = true;
    } else if (fields.size() != width) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(start) + ": expected " +
                                        std::to_string(width) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    out.table.rows.push_back(fields);
  }

  if (label_column) {
    std::optional<std::size_t> col;
    if (has_header) {
      auto it = std::find(out.table.header.begin(), out.table.header.end(), *label_column);
      if (it != out.table.header.end()) col = std::size_t(it - out.table.header.begin());
    } else {
      try {
        std::size_t pos = 0;
        const unsigned long idx = std::stoul(*label_column, &pos);
        if (pos == label_column->size() && idx < width) col = idx;
      } catch (const std::exception&) {
      }
    }
    if (!col) throw Error(ErrorKind::Config, "label column '" + *label_column + "' not found");

    std::vector<Label> labels;
    labels.reserve(out.table.rows.size());
    for (std::size_t r = 0; r < out.table.rows.size(); ++r) {
      auto& row = out.table.rows[r];
      const auto label = parse_label(row[*col]);
      if (!label) {
        throw Error(ErrorKind::Parse, "row " + std::to_string(r + 1) + ": unrecognized label '" +
                                          row[*col] + "'");
      }
      labels.push_back(*label);
      row.erase(row.begin() + std::ptrdiff_t(*col));
    }
    if (has_header) out.table.header.erase(out.table.header.begin() + std::ptrdiff_t(*col));
    out.labels = std::move(labels);
  }
  return out;
}

LabeledTable ingest(const std::filesystem::path& path, bool has_header,
                    const std::optional<std::string>& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_csv(in, has_header, label_column);
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_csv(std::ostream& out, const RawTable& table,
               const std::optional<std::vector<Label>>& labels, const std::string& label_column) {
  auto write_row = [&](const std::vector<std::string>& row, const std::string* extra) {
    if (row.size() == 1 && row[0].empty() && !extra) {
      out << "\"\"\n";  // keeps a lone empty field distinct from a blank line
      return;
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_field(row[i]);
    }
    if (extra) out << (row.empty() ? "" : ",") << csv_field(*extra);
    out << '\n';
  };
  if (!table.header.empty()) write_row(table.header, labels ? &label_column : nullptr);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (labels) {
      const std::string value = (*labels)[r] == Label::Attack ? "1" : "0";
      write_row(table.rows[r], &value);
    } else {
      write_row(table.rows[r], nullptr);
    }
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
}

}  // namespace mpsxai
