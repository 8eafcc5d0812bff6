#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/color.hpp"

namespace autocf {

using Date = std::chrono::sys_days;

enum class CellType { Text, Numeric, Date };

std::string_view to_string(CellType t);
std::optional<CellType> cell_type_from_string(std::string_view s);

/// Cell format. A default-constructed Format is the "no formatting" value.
struct Format {
  std::optional<Rgb> fill;
  std::optional<Rgb> font;
  std::optional<bool> bold;
  std::optional<bool> italic;
  std::optional<bool> underline;

  bool empty() const noexcept {
    return !fill && !font && !bold && !italic && !underline;
  }
  bool operator==(const Format&) const = default;
};

/// Fields set in `over` replace those in `base`; unset fields keep `base`.
Format merge(const Format& base, const Format& over);

nlohmann::json format_to_json(const Format& f);
Format format_from_json(const nlohmann::json& j);
std::string describe(const Format& f);

using CellValue = std::variant<std::monostate, std::string, double, Date>;

struct Cell {
  std::string value;  // as entered; "" for blanks
  CellValue parsed;   // monostate iff blank
  CellType ctype = CellType::Text;
  Format format;
  std::optional<std::string> formula;

  bool blank() const noexcept {
    return std::holds_alternative<std::monostate>(parsed);
  }
  bool operator==(const Cell&) const = default;
};

/// Builds a cell for a column of type `column_type`. Values that do not
/// parse under the column type become Text cells.
Cell make_cell(std::string_view raw, CellType column_type);

struct Column {
  std::string header;
  CellType type = CellType::Text;
  std::vector<Cell> cells;

  bool operator==(const Column&) const = default;
};

/// Column-major table. Header names are unique after case folding.
class Table {
 public:
  Table() = default;
  /// `columns` must all have the same length; duplicate headers are
  /// renamed with ".2", ".3", ... suffixes.
  explicit Table(std::vector<Column> columns);

  std::size_t n_cols() const noexcept { return columns_.size(); }
  std::size_t n_rows() const noexcept { return n_rows_; }

  const Column& column(std::size_t i) const { return columns_.at(i); }
  Column& mutable_column(std::size_t i) { return columns_.at(i); }
  const Cell& cell(std::size_t col, std::size_t row) const {
    return columns_.at(col).cells.at(row);
  }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::vector<std::string> headers() const;

  /// Case-insensitive, whitespace-trimmed lookup.
  std::optional<std::size_t> find_column(std::string_view header) const;

  bool operator==(const Table&) const = default;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

/// 0-based target column index, validated against a table.
struct TargetColumn {
  std::size_t index = 0;
};

TargetColumn resolve_target(const Table& table, std::string_view header);

// --- parsing helpers -------------------------------------------------------

std::string trim(std::string_view s);
std::string fold_case(std::string_view s);

/// Decimal number with optional sign, leading currency symbol and
/// thousands separators.
std::optional<double> parse_number(std::string_view text);
/// Shortest text that reads back as the same double.
std::string format_number(double v);

/// Accepts YYYY-MM-DD, YYYY/MM/DD, MM/DD/YYYY and DD-Mon-YYYY.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Numeric if at least 90% of non-blank values are numbers, Date if at least
/// 90% are dates, Text otherwise (including all-blank input).
CellType infer_column_type(const std::vector<std::string>& raw_values);

/// RFC 4180 records. Throws InputError on unterminated quotes.
std::vector<std::vector<std::string>> read_csv_records(std::string_view text);

/// Parses CSV text with a mandatory header row and an optional format sidecar
/// ({"cells": [{"col", "row", "fill", "font", "bold", "italic", "underline",
/// "formula"}]}).
Table parse_table(std::string_view csv_text,
                  const std::optional<nlohmann::json>& sidecar = std::nullopt);

void apply_sidecar(Table& table, const nlohmann::json& sidecar);

std::string write_csv(const Table& table);
/// Sidecar describing every formatted cell and formula of `table`.
nlohmann::json sidecar_of(const Table& table);

/// Canonical table document: headers, per-column types, per-cell {v, fmt}.
nlohmann::json table_to_json(const Table& table);
Table table_from_json(const nlohmann::json& j);

}  // namespace autocf
