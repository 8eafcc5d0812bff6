#include "autocf/table.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "autocf/error.hpp"

namespace autocf {

using nlohmann::json;
using namespace std::chrono;

std::string_view to_string(CellType t) {
  switch (t) {
    case CellType::Text: return "text";
    case CellType::Numeric: return "numeric";
    case CellType::Date: return "date";
  }
  return "text";
}

std::optional<CellType> cell_type_from_string(std::string_view s) {
  if (s == "text") return CellType::Text;
  if (s == "numeric") return CellType::Numeric;
  if (s == "date") return CellType::Date;
  return std::nullopt;
}

Format merge(const Format& base, const Format& over) {
  Format out = base;
  if (over.fill) out.fill = over.fill;
  if (over.font) out.font = over.font;
  if (over.bold) out.bold = over.bold;
  if (over.italic) out.italic = over.italic;
  if (over.underline) out.underline = over.underline;
  return out;
}

json format_to_json(const Format& f) {
  json j = json::object();
  if (f.fill) j["fill"] = to_hex(*f.fill);
  if (f.font) j["font"] = to_hex(*f.font);
  if (f.bold) j["bold"] = *f.bold;
  if (f.italic) j["italic"] = *f.italic;
  if (f.underline) j["underline"] = *f.underline;
  return j;
}

namespace {

std::optional<Rgb> color_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string())
    throw InputError(std::string("format field '") + key + "' must be a \"#RRGGBB\" string");
  auto c = parse_hex(j[key].get<std::string>());
  if (!c)
    throw InputError(std::string("format field '") + key + "' is not a \"#RRGGBB\" color: " +
                     j[key].get<std::string>());
  return c;
}

std::optional<bool> flag_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_boolean())
    throw InputError(std::string("format field '") + key + "' must be a boolean");
  return j[key].get<bool>();
}

}  // namespace

Format format_from_json(const json& j) {
  Format f;
  if (!j.is_object()) return f;
  f.fill = color_field(j, "fill");
  f.font = color_field(j, "font");
  f.bold = flag_field(j, "bold");
  f.italic = flag_field(j, "italic");
  f.underline = flag_field(j, "underline");
  return f;
}

std::string describe(const Format& f) {
  if (f.empty()) return "no format";
  std::string out;
  auto add = [&](const std::string& part) {
    if (!out.empty()) out += ", ";
    out += part;
  };
  if (f.fill)
    add("fill " + to_hex(*f.fill) + " (" + std::string(nearest_web_color(*f.fill).name) + ")");
  if (f.font)
    add("font " + to_hex(*f.font) + " (" + std::string(nearest_web_color(*f.font).name) + ")");
  if (f.bold) add(*f.bold ? "bold" : "not bold");
  if (f.italic) add(*f.italic ? "italic" : "not italic");
  if (f.underline) add(*f.underline ? "underline" : "no underline");
  return out;
}

// --- string helpers --------------------------------------------------------

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

bool strip_currency(std::string_view& s) {
  static constexpr std::array<std::string_view, 4> kSymbols{"$", "\xE2\x82\xAC", "\xC2\xA3",
                                                           "\xC2\xA5"};
  for (auto sym : kSymbols) {
    if (s.starts_with(sym)) {
      s.remove_prefix(sym.size());
      return true;
    }
  }
  return false;
}

bool valid_thousands(std::string_view integer_part) {
  // \d{1,3}(,\d{3})+
  std::size_t first = integer_part.find(',');
  if (first == 0 || first > 3) return false;
  std::size_t pos = first;
  while (pos != std::string_view::npos) {
    std::size_t next = integer_part.find(',', pos + 1);
    std::size_t group_end = next == std::string_view::npos ? integer_part.size() : next;
    if (group_end - pos - 1 != 3) return false;
    pos = next;
  }
  return true;
}

}  // namespace

std::optional<double> parse_number(std::string_view text) {
  std::string trimmed = trim(text);
  std::string_view s = trimmed;
  if (s.empty()) return std::nullopt;

  bool negative = false;
  auto take_sign = [&] {
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
      negative = s.front() == '-';
      s.remove_prefix(1);
      return true;
    }
    return false;
  };
  bool signed_before = take_sign();
  if (strip_currency(s) && !signed_before) take_sign();
  if (s.empty()) return std::nullopt;

  std::string digits;
  digits.reserve(s.size());
  std::size_t mantissa_end = s.find_first_of("eE");
  std::string_view mantissa = s.substr(0, mantissa_end);
  std::size_t dot = mantissa.find('.');
  std::string_view integer_part = mantissa.substr(0, dot);
  if (integer_part.find(',') != std::string_view::npos) {
    if (!valid_thousands(integer_part)) return std::nullopt;
  }
  bool any_digit = false;
  for (char c : s) {
    if (c == ',') continue;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      any_digit = true;
    } else if (c != '.' && c != 'e' && c != 'E' && c != '+' && c != '-') {
      return std::nullopt;
    }
    digits.push_back(c);
  }
  if (!any_digit || digits.front() == '+' || digits.front() == '-') return std::nullopt;

  double value = 0;
  const char* begin = digits.data();
  const char* end = begin + digits.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return negative ? -value : value;
}

std::string format_number(double v) {
  if (v == 0) v = 0;  // drop negative zero
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

namespace {

std::optional<int> parse_uint(std::string_view s, std::size_t min_len, std::size_t max_len) {
  if (s.size() < min_len || s.size() > max_len) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<Date> make_date(int y, int m, int d) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::optional<int> month_abbrev(std::string_view s) {
  static constexpr std::array<std::string_view, 12> kMonths{
      "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  std::string lowered = fold_case(s);
  for (std::size_t i = 0; i < kMonths.size(); ++i)
    if (lowered == kMonths[i]) return static_cast<int>(i) + 1;
  return std::nullopt;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  std::string trimmed = trim(text);
  std::string_view s = trimmed;
  if (s.size() < 8 || s.size() > 11) return std::nullopt;

  for (char sep : {'-', '/'}) {
    auto parts = split(s, sep);
    if (parts.size() != 3) continue;
    // YYYY-MM-DD and YYYY/MM/DD
    if (auto y = parse_uint(parts[0], 4, 4)) {
      auto m = parse_uint(parts[1], 1, 2);
      auto d = parse_uint(parts[2], 1, 2);
      if (m && d) return make_date(*y, *m, *d);
      return std::nullopt;
    }
    if (sep == '/') {
      // MM/DD/YYYY, month first
      auto m = parse_uint(parts[0], 1, 2);
      auto d = parse_uint(parts[1], 1, 2);
      auto y = parse_uint(parts[2], 4, 4);
      if (m && d && y) return make_date(*y, *m, *d);
    } else {
      // DD-Mon-YYYY
      auto d = parse_uint(parts[0], 1, 2);
      auto m = month_abbrev(parts[1]);
      auto y = parse_uint(parts[2], 4, 4);
      if (d && m && y) return make_date(*y, *m, *d);
    }
  }
  return std::nullopt;
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

CellType infer_column_type(const std::vector<std::string>& raw_values) {
  std::size_t non_blank = 0, numeric = 0, dates = 0;
  for (const auto& raw : raw_values) {
    if (trim(raw).empty()) continue;
    ++non_blank;
    if (parse_number(raw))
      ++numeric;
    else if (parse_date(raw))
      ++dates;
  }
  if (non_blank == 0) return CellType::Text;
  // integer arithmetic: count / non_blank >= 0.9
  if (numeric * 10 >= non_blank * 9) return CellType::Numeric;
  if (dates * 10 >= non_blank * 9) return CellType::Date;
  return CellType::Text;
}

Cell make_cell(std::string_view raw, CellType column_type) {
  Cell cell;
  cell.ctype = column_type;
  if (trim(raw).empty()) return cell;
  cell.value = std::string(raw);
  if (column_type == CellType::Numeric) {
    if (auto v = parse_number(raw)) {
      cell.parsed = *v;
      return cell;
    }
  } else if (column_type == CellType::Date) {
    if (auto d = parse_date(raw)) {
      cell.parsed = *d;
      return cell;
    }
  }
  cell.ctype = CellType::Text;
  cell.parsed = cell.value;
  return cell;
}

// --- Table -----------------------------------------------------------------

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (!columns_.empty()) n_rows_ = columns_.front().cells.size();
  for (const auto& c : columns_)
    if (c.cells.size() != n_rows_) throw InputError("columns have different lengths");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    auto& header = columns_[i].header;
    header = trim(header);
    if (header.empty()) header = "Column" + std::to_string(i + 1);
    if (seen.insert(fold_case(header)).second) continue;
    for (int suffix = 2;; ++suffix) {
      std::string candidate = header + "." + std::to_string(suffix);
      if (seen.insert(fold_case(candidate)).second) {
        header = candidate;
        break;
      }
    }
  }
}

std::vector<std::string> Table::headers() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.header);
  return out;
}

std::optional<std::size_t> Table::find_column(std::string_view header) const {
  const std::string key = fold_case(trim(header));
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (fold_case(columns_[i].header) == key) return i;
  return std::nullopt;
}

TargetColumn resolve_target(const Table& table, std::string_view header) {
  if (auto i = table.find_column(header)) return TargetColumn{*i};
  throw ResolutionError("unknown column '" + std::string(header) + "'");
}

// --- CSV -------------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw InputError("unterminated quoted field", records.size() + 1);
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

Table parse_table(std::string_view csv_text, const std::optional<json>& sidecar) {
  auto records = read_csv_records(csv_text);
  // blank trailing lines
  while (!records.empty() && records.back().size() == 1 && trim(records.back()[0]).empty())
    records.pop_back();
  if (records.empty()) throw InputError("CSV input is empty; a header row is required", 1);

  const auto& header = records.front();
  const std::size_t n = header.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != n)
      throw InputError("row " + std::to_string(r + 1) + " has " +
                           std::to_string(records[r].size()) + " fields, expected " +
                           std::to_string(n),
                       r + 1);
  }

  std::vector<Column> columns(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::string> raw;
    raw.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) raw.push_back(records[r][c]);
    columns[c].header = header[c];
    columns[c].type = infer_column_type(raw);
    columns[c].cells.reserve(raw.size());
    for (const auto& v : raw) columns[c].cells.push_back(make_cell(v, columns[c].type));
  }
  Table table(std::move(columns));
  if (sidecar) apply_sidecar(table, *sidecar);
  return table;
}

void apply_sidecar(Table& table, const json& sidecar) {
  if (!sidecar.is_object() || !sidecar.contains("cells")) return;
  const auto& cells = sidecar["cells"];
  if (!cells.is_array()) throw InputError("sidecar 'cells' must be an array");
  for (const auto& entry : cells) {
    if (!entry.contains("col") || !entry.contains("row") || !entry["col"].is_number_integer() ||
        !entry["row"].is_number_integer())
      throw InputError("sidecar cell needs integer 'col' and 'row'");
    const auto col = entry["col"].get<long long>();
    const auto row = entry["row"].get<long long>();
    if (col < 0 || row < 0 || static_cast<std::size_t>(col) >= table.n_cols() ||
        static_cast<std::size_t>(row) >= table.n_rows())
      throw InputError("sidecar cell (col " + std::to_string(col) + ", row " +
                       std::to_string(row) + ") is outside the " +
                       std::to_string(table.n_cols()) + "x" + std::to_string(table.n_rows()) +
                       " grid");
    auto& cell = table.mutable_column(static_cast<std::size_t>(col))
                     .cells[static_cast<std::size_t>(row)];
    cell.format = merge(cell.format, format_from_json(entry));
    if (entry.contains("formula") && entry["formula"].is_string())
      cell.formula = entry["formula"].get<std::string>();
  }
}

namespace {

std::string csv_field(const std::string& v) {
  bool quote = v.find_first_of(",\"\r\n") != std::string::npos ||
               (!v.empty() && (std::isspace(static_cast<unsigned char>(v.front())) ||
                               std::isspace(static_cast<unsigned char>(v.back()))));
  if (!quote) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string write_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c) out += ',';
    out += csv_field(table.column(c).header);
  }
  out += '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out += ',';
      out += csv_field(table.cell(c, r).value);
    }
    out += '\n';
  }
  return out;
}

json sidecar_of(const Table& table) {
  json cells = json::array();
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      const auto& cell = table.cell(c, r);
      if (cell.format.empty() && !cell.formula) continue;
      json entry = format_to_json(cell.format);
      entry["col"] = c;
      entry["row"] = r;
      if (cell.formula) entry["formula"] = *cell.formula;
      cells.push_back(std::move(entry));
    }
  }
  return json{{"cells", cells}};
}

json table_to_json(const Table& table) {
  json headers = json::array(), types = json::array(), columns = json::array();
  for (const auto& col : table.columns()) {
    headers.push_back(col.header);
    types.push_back(std::string(to_string(col.type)));
    json cells = json::array();
    for (const auto& cell : col.cells) {
      json jc{{"v", cell.value}};
      if (!cell.format.empty()) jc["fmt"] = format_to_json(cell.format);
      if (cell.formula) jc["formula"] = *cell.formula;
      cells.push_back(std::move(jc));
    }
    columns.push_back(std::move(cells));
  }
  return json{{"headers", headers}, {"types", types}, {"n_rows", table.n_rows()},
              {"columns", columns}};
}

Table table_from_json(const json& j) {
  const auto& headers = j.at("headers");
  const auto& types = j.at("types");
  const auto& columns = j.at("columns");
  if (headers.size() != types.size() || headers.size() != columns.size())
    throw InputError("table JSON: headers, types and columns differ in length");
  std::vector<Column> out(headers.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].header = headers[c].get<std::string>();
    auto type = cell_type_from_string(types[c].get<std::string>());
    if (!type) throw InputError("table JSON: unknown column type " + types[c].dump());
    out[c].type = *type;
    for (const auto& jc : columns[c]) {
      Cell cell = make_cell(jc.at("v").get<std::string>(), *type);
      if (jc.contains("fmt")) cell.format = format_from_json(jc["fmt"]);
      if (jc.contains("formula")) cell.formula = jc["formula"].get<std::string>();
      out[c].cells.push_back(std::move(cell));
    }
  }
  return Table(std::move(out));
}

}  // namespace autocf
