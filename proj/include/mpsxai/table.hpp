#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mpsxai {

enum class Label : std::uint8_t { Benign = 0, Attack = 1 };

/// Raw categorical event table in file order. File order stands in for time.
struct RawTable {
  std::vector<std::string> header;  // empty when the file has none
  std::vector<std::vector<std::string>> rows;

  std::size_t num_columns() const;
  friend bool operator==(const RawTable&, const RawTable&) = default;
};

struct LabeledTable {
  RawTable table;
  std::optional<std::vector<Label>> labels;
};

/// Accepts 0/1, benign/attack, false/true, no/yes (case-insensitive).
std::optional<Label> parse_label(const std::string& text);

/// Comma-separated input with RFC 4180 quoting. A label column, when named,
/// is removed from the features. Without a header the label column may be
/// given as a zero-based column number. Ragged rows raise a parse error
/// naming the line.
LabeledTable parse_csv(std::istream& in, bool has_header,
                       const std::optional<std::string>& label_column);
LabeledTable ingest(const std::filesystem::path& path, bool has_header,
                    const std::optional<std::string>& label_column);

/// Writes the table, appending the label column (as 0/1) when labels are given.
void write_csv(std::ostream& out, const RawTable& table,
               const std::optional<std::vector<Label>>& labels = std::nullopt,
               const std::string& label_column = "label");

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& value);

/// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace mpsxai
