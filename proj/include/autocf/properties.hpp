#pragma once

// Static per-column properties used to seed predicate enumeration and the
// generator prompt.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/table.hpp"

namespace autocf {

inline constexpr std::size_t kDefaultPropertyK = 5;

struct RankedValue {
  std::string value;
  std::size_t count = 0;
  bool operator==(const RankedValue&) const = default;
};
using RankedList = std::vector<RankedValue>;

using PropertyValue = std::variant<double, Date, bool, RankedList>;

/// Property name -> value. Scalars that cannot be computed are absent.
using ColumnProperties = std::map<std::string, PropertyValue>;

/// Computes the general properties plus the set for the column's type.
/// `today` anchors the date-window counts.
ColumnProperties extract_properties(const Table& table, std::size_t col, std::size_t k, Date today);

enum class TextShape { Categorical, FreeText, Neither };
std::string_view to_string(TextShape s);

struct TextShapeResult {
  TextShape shape = TextShape::Neither;
  std::vector<std::string> categories;  // distinct values by descending count when Categorical
};
TextShapeResult classify_text_shape(const std::vector<std::string>& values);

/// Linear interpolation at position p*(n-1) of an ascending, non-empty list.
double percentile(const std::vector<double>& sorted, double p);

/// Values ranked by descending count, ties by first appearance; blanks skipped.
/// Grouping is case-insensitive; the first spelling seen is reported.
RankedList rank_values(const std::vector<std::string>& values);

std::optional<double> number_property(const ColumnProperties& props, const std::string& name);
const RankedList* list_property(const ColumnProperties& props, const std::string& name);

nlohmann::json properties_to_json(const ColumnProperties& props);

/// Text constants worth testing on a column: common values, categories, and
/// their short prefixes, suffixes and shared tokens. Entries are distinct
/// up to case; tokens are case-folded.
struct TextVocabulary {
  std::vector<std::string> values;  // common values then remaining categories, original spelling
  std::vector<std::string> prefixes, suffixes, tokens;
};
TextVocabulary text_vocabulary(const Column& column, const ColumnProperties& props);

/// 25th, 50th and 75th percentile dates (rounded down to a day) of the
/// non-blank date cells; empty when there are none.
std::vector<Date> date_quantiles(const Column& column);

/// Numeric summary statistics present in props, in a fixed order.
std::vector<std::pair<std::string, double>> numeric_stats(const ColumnProperties& props);

}  // namespace autocf
