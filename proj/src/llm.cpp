#include "autocf/llm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "autocf/evaluate.hpp"
#include "autocf/hash.hpp"
#include "autocf/rng.hpp"

namespace autocf {

namespace {

constexpr std::size_t kHeadRows = 5;
constexpr std::size_t kRandomRows = 5;

struct Section {
  const char* label;
  std::vector<std::string> ReasoningSteps::*list;
};

const Section kSections[] = {
    {"Relevant columns", &ReasoningSteps::relevant_columns},
    {"Predicates and functions", &ReasoningSteps::predicates_functions},
    {"Constants", &ReasoningSteps::constants},
    {"Rules", &ReasoningSteps::rules},
};

constexpr const char* kPriming =
    "You suggest conditional formatting rules for one column of a spreadsheet table.\n"
    "A rule is a condition over a row; the target column's cell in every row where the condition holds\n"
    "receives the format. Good rules highlight a meaningful part of the column, not all of it.\n"
    "\n"
    "Condition language:\n"
    "- Column references are written [@Header]. A predicate without a column tests the target column.\n"
    "- Text: TextEquals, TextStartsWith, TextEndsWith, TextContains, e.g. TextStartsWith([@Code], \"AB\")\n"
    "- Numbers: > >= < <= = <> over columns, constants, + and -, e.g. [@Budget]-[@Cost]>1000;\n"
    "  Between([@Score], 10, 20)\n"
    "- Dates: DateBefore([@Due], 2024-03-01), DateAfter, InLastWeek, InThisWeek, InNextWeek, InLastMonth,\n"
    "  InThisMonth, InNextMonth, IsToday, YearEquals([@Due], 2023)\n"
    "- Any type: Blanks, Duplicates, Unique, IsError, IsNA\n"
    "- Combine with AND, OR, NOT(...) and parentheses.\n"
    "\n"
    "Think in four steps and answer with exactly these labels, one item per line starting with \"- \":\n"
    "Step 1 - Relevant columns: columns whose values decide how the target column is formatted.\n"
    "Step 2 - Predicates and functions: predicates or small combinations of them that are useful here.\n"
    "Step 3 - Constants: values relevant to those predicates.\n"
    "Step 4 - Rules: complete conditions in the language above.\n";

std::string trim_bullet(const std::string& line) {
  std::string s = trim(line);
  if (s.size() >= 2 && (s[0] == '-' || s[0] == '*') && s[1] == ' ') return trim(s.substr(2));
  return s;
}

bool is_bullet(const std::string& line) {
  const std::string s = trim(line);
  return s.size() >= 2 && (s[0] == '-' || s[0] == '*') && s[1] == ' ';
}

/// Matches "Step N - Label:", "Label:", "**Label**:" and the like. Returns
/// the section index and whatever follows the colon.
std::optional<std::pair<std::size_t, std::string>> match_label(const std::string& line) {
  std::string s = trim(line);
  std::erase_if(s, [](char c) { return c == '*' || c == '#'; });
  s = trim(s);
  std::string folded = fold_case(s);
  if (folded.starts_with("step")) {
    std::size_t i = 4;
    while (i < folded.size() && (std::isdigit(static_cast<unsigned char>(folded[i])) || folded[i] == ' ')) ++i;
    while (i < folded.size() && (folded[i] == '-' || folded[i] == ':' || folded[i] == '.' || folded[i] == ')' ||
                                 folded[i] == ' '))
      ++i;
    s = s.substr(i);
    folded = folded.substr(i);
  }
  static const std::vector<std::pair<std::string, std::size_t>> kNames{
      {"relevant columns", 0}, {"predicates and functions", 1}, {"predicates", 1},
      {"constants", 2},        {"rules", 3},
  };
  for (const auto& [name, idx] : kNames) {
    if (!folded.starts_with(name)) continue;
    const std::string rest = trim(s.substr(name.size()));
    if (!rest.empty() && rest[0] != ':') continue;
    return std::pair{idx, rest.empty() ? std::string{} : trim(rest.substr(1))};
  }
  return std::nullopt;
}

std::string strip_code_marks(std::string s) {
  s = trim(s);
  while (s.size() >= 2 && s.front() == '`' && s.back() == '`') s = trim(s.substr(1, s.size() - 2));
  return s;
}

std::string render_properties(const ColumnProperties& props) {
  std::ostringstream out;
  for (const auto& [name, value] : props) {
    out << "  " << name << ": ";
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            out << format_number(v);
          } else if constexpr (std::is_same_v<T, bool>) {
            out << (v ? "true" : "false");
          } else if constexpr (std::is_same_v<T, Date>) {
            out << format_date(v);
          } else {
            for (std::size_t i = 0; i < v.size(); ++i)
              out << (i ? ", " : "") << nlohmann::json(v[i].value).dump() << " (" << v[i].count << ")";
          }
        },
        value);
    out << "\n";
  }
  return out.str();
}

std::string render_context(const Table& table, std::size_t col, const ColumnProperties& props, std::uint64_t seed) {
  std::ostringstream out;
  out << "Columns:\n";
  for (const auto& c : table.columns()) out << "  " << c.header << " (" << to_string(c.type) << ")\n";
  out << "Sample rows:\n";
  out << "  ";
  for (std::size_t c = 0; c < table.n_cols(); ++c) out << (c ? " | " : "") << table.column(c).header;
  out << "\n";
  for (std::size_t r : sample_rows(table.n_rows(), seed)) {
    out << "  ";
    for (std::size_t c = 0; c < table.n_cols(); ++c) out << (c ? " | " : "") << table.cell(c, r).value;
    out << "\n";
  }
  out << "Target column: " << table.column(col).header << "\n";
  out << "Target column properties:\n" << render_properties(props);
  return out.str();
}

Condition open_slots(const Condition& c) {
  Condition out = c;
  for (auto& clause : out.clauses)
    for (auto& lit : clause)
      if (lit.pred.kind != PredKind::Compare && lit.pred.kind != PredKind::Between) lit.pred.column.clear();
  return out;
}

}  // namespace

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open exemplar file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("exemplar file " + path.string() + ": " + e.what());
  }
  std::vector<Exemplar> out;
  for (const auto& e : j.at("exemplars")) {
    Exemplar ex;
    ex.table_csv = e.at("table_csv").get<std::string>();
    ex.target = e.at("target").get<std::string>();
    const auto& s = e.at("steps");
    ex.steps.relevant_columns = s.at("relevant_columns").get<std::vector<std::string>>();
    ex.steps.predicates_functions = s.at("predicates_functions").get<std::vector<std::string>>();
    ex.steps.constants = s.at("constants").get<std::vector<std::string>>();
    ex.steps.rules = s.at("rules").get<std::vector<std::string>>();
    out.push_back(std::move(ex));
  }
  return out;
}

const std::vector<Exemplar>& default_exemplars() {
  static const std::vector<Exemplar> exemplars =
      load_exemplars(std::filesystem::path(AUTOCF_ASSET_DIR) / "prompt_exemplars.json");
  return exemplars;
}

std::vector<std::size_t> sample_rows(std::size_t n_rows, std::uint64_t seed) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < std::min(n_rows, kHeadRows); ++r) rows.push_back(r);
  if (n_rows <= kHeadRows) return rows;
  std::vector<std::size_t> rest;
  for (std::size_t r = kHeadRows; r < n_rows; ++r) rest.push_back(r);
  Rng rng(seed);
  rng.shuffle(rest);
  rest.resize(std::min(rest.size(), kRandomRows));
  std::sort(rest.begin(), rest.end());
  rows.insert(rows.end(), rest.begin(), rest.end());
  return rows;
}

std::string build_prompt(const Table& table, std::size_t col, const ColumnProperties& props, std::uint64_t seed,
                         const std::vector<Exemplar>& exemplars) {
  std::ostringstream out;
  out << kPriming;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const Exemplar& ex = exemplars[i];
    const Table t = parse_table(ex.table_csv);
    const auto idx = t.find_column(ex.target);
    if (!idx) throw InputError("exemplar target column not found: " + ex.target);
    const auto ex_props = extract_properties(t, *idx, kDefaultPropertyK, Date{});
    out << "\n## Example " << (i + 1) << "\n" << render_context(t, *idx, ex_props, seed) << "Answer:\n"
        << render_response(ex.steps);
  }
  out << "\n## Task\n" << render_context(table, col, props, seed) << "Answer:\n";
  return out.str();
}

std::string render_response(const ReasoningSteps& steps) {
  std::ostringstream out;
  for (std::size_t i = 0; i < std::size(kSections); ++i) {
    out << "Step " << (i + 1) << " - " << kSections[i].label << ":\n";
    for (const auto& item : steps.*kSections[i].list) out << "- " << item << "\n";
  }
  return out.str();
}

ParsedResponse parse_response(const std::string& text) {
  ParsedResponse out;
  std::optional<std::size_t> current;
  bool any = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_bullet(line)) {
      if (auto label = match_label(line)) {
        current = label->first;
        any = true;
        if (!label->second.empty()) (out.steps.*kSections[*current].list).push_back(label->second);
        continue;
      }
    }
    if (!current) continue;
    std::string item = trim_bullet(line);
    if (item.empty()) continue;
    (out.steps.*kSections[*current].list).push_back(std::move(item));
  }
  if (!any) throw MalformedResponseError("malformed response: no reasoning step labels found");
  for (const auto& rule : out.steps.rules) {
    try {
      out.conditions.push_back(parse_condition(strip_code_marks(rule)));
    } catch (const Error& e) {
      out.warnings.push_back("unparseable rule \"" + rule + "\": " + e.what());
    }
  }
  return out;
}

std::string canonical_constant(const std::string& raw) {
  std::string s = strip_code_marks(raw);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    s = s.substr(1, s.size() - 2);
  if (auto d = parse_date(s)) return format_date(*d);
  if (auto v = parse_number(s)) return format_number(*v);
  return fold_case(trim(s));
}

Decomposition decompose(const std::vector<Condition>& conditions, const ReasoningSteps& steps) {
  Decomposition out;
  std::map<std::string, Component> components;
  auto add_component = [&](const Condition& c) {
    Condition body = normalize(open_slots(c));
    std::string key = print(body);
    components.emplace(std::move(key), Component{std::move(body), Origin::Neural});
  };
  auto add_terms = [&](const Condition& c) {
    for (const auto& col : columns_of(c)) out.boosted_terms.insert(fold_case(col));
    for (const auto& k : constants_of(c)) out.boosted_terms.insert(k);
  };

  for (const auto& c : conditions) {
    add_terms(c);
    if (c.literal_count() <= 2) add_component(c);
    for (const auto& clause : c.clauses) {
      for (std::size_t i = 0; i < clause.size(); ++i) {
        add_component(Condition{{{clause[i]}}});
        for (std::size_t j = i + 1; j < clause.size(); ++j) add_component(Condition{{{clause[i], clause[j]}}});
      }
    }
  }
  for (const auto& k : steps.constants) {
    const std::string canon = canonical_constant(k);
    if (!canon.empty()) out.boosted_terms.insert(canon);
  }
  for (const auto& col : steps.relevant_columns) {
    std::string name = strip_code_marks(col);
    if (name.starts_with("[@") && name.ends_with("]")) name = name.substr(2, name.size() - 3);
    name = fold_case(trim(name));
    if (!name.empty()) out.boosted_terms.insert(name);
  }
  for (const auto& p : steps.predicates_functions) {
    try {
      Condition c = parse_condition(strip_code_marks(p));
      if (c.literal_count() <= 2) add_component(c);
    } catch (const Error&) {
      // free-form descriptions are common here
    }
  }
  for (auto& [key, comp] : components) out.components.push_back(std::move(comp));
  return out;
}

// ---------------------------------------------------------------------------

MockClient::MockClient(std::string response)
    : fn_([r = std::move(response)](const std::string&) { return r; }) {}

MockClient::MockClient(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}

std::string MockClient::complete(const std::string& prompt) {
  ++calls_;
  return fn_(prompt);
}

std::string prompt_hash(const std::string& prompt) { return sha256_hex(prompt); }

ReplayClient::ReplayClient(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw InputError("cannot open transcript " + transcript.string());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      responses_[j.at("prompt_hash").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("transcript " + transcript.string() + " line " + std::to_string(row) + ": " + e.what(), row);
    }
  }
}

std::string ReplayClient::complete(const std::string& prompt) {
  const std::string h = prompt_hash(prompt);
  auto it = responses_.find(h);
  if (it == responses_.end()) throw ClientError("no recorded response for prompt " + h);
  return it->second;
}

RecordingClient::RecordingClient(GeneratorClient& inner, std::filesystem::path transcript)
    : inner_(inner), path_(std::move(transcript)) {}

std::string RecordingClient::complete(const std::string& prompt) {
  std::string response = inner_.complete(prompt);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw ClientError("cannot append to transcript " + path_.string());
  out << nlohmann::json{{"prompt_hash", prompt_hash(prompt)}, {"response", response}}.dump() << "\n";
  return response;
}

// ---------------------------------------------------------------------------

NeuralResult run_neural_generator(const Table& table, std::size_t col, const ColumnProperties& props,
                                  GeneratorClient& client, std::uint64_t seed) {
  NeuralResult out;
  out.response = parse_response(client.complete(build_prompt(table, col, props, seed)));
  std::set<std::string> seen;
  for (const auto& c : out.response.conditions) {
    Condition bound = normalize(bind_target(c, table.column(col).header));
    try {
      type_check(bound, table, EvalContext{.today = {}, .target = col});
    } catch (const Error& e) {
      out.response.warnings.push_back("rule \"" + print(c) + "\" does not apply: " + e.what());
      continue;
    }
    if (seen.insert(print(bound)).second) out.conditions.push_back(std::move(bound));
  }
  out.decomposition = decompose(out.response.conditions, out.response.steps);
  return out;
}

}  // namespace autocf
