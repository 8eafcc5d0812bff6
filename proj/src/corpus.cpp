#include "autocf/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "autocf/error.hpp"
#include "autocf/evaluate.hpp"

namespace autocf {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::set<std::string> string_set(const json& j, const char* key) {
  std::set<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) out.insert(v.get<std::string>());
  return out;
}

/// Re-reads cells under declared column types (CSV inference may disagree
/// with what the writer intended).
Table with_types(const Table& t, const std::vector<CellType>& types) {
  std::vector<Column> cols;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    Column col{t.column(c).header, types.at(c), {}};
    for (const auto& cell : t.column(c).cells) col.cells.push_back(make_cell(cell.value, col.type));
    cols.push_back(std::move(col));
  }
  return Table(std::move(cols));
}

}  // namespace

std::set<std::string> header_set_of(const Table& table) {
  std::set<std::string> out;
  for (const auto& c : table.columns()) out.insert(fold_case(c.header));
  return out;
}

std::set<std::string> formula_set_of(const Table& table) {
  std::set<std::string> out;
  for (const auto& c : table.columns())
    for (const auto& cell : c.cells)
      if (cell.formula) out.insert(*cell.formula);
  return out;
}

CorpusRecord make_record(std::string id, const Table& table, const Rule& rule, std::string provenance) {
  CorpusRecord r;
  r.id = std::move(id);
  r.header_set = header_set_of(table);
  r.formula_set = formula_set_of(table);
  r.condition = normalize(rule.condition);
  r.predicate_sketch_set = predicate_sketches(r.condition);
  r.constant_set = constants_of(r.condition);
  r.format = rule.format;
  r.provenance = std::move(provenance);
  return r;
}

json record_to_json(const CorpusRecord& r) {
  return json{
      {"id", r.id},
      {"headers", r.header_set},
      {"formulas", r.formula_set},
      {"condition", print(r.condition)},
      {"condition_ast", to_json(r.condition)},
      {"predicate_sketches", r.predicate_sketch_set},
      {"constants", r.constant_set},
      {"format", format_to_json(r.format)},
      {"provenance", r.provenance},
  };
}

CorpusRecord record_from_json(const json& j) {
  if (!j.is_object()) throw InputError("record is not a JSON object");
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    throw InputError("record needs a non-empty string id");
  CorpusRecord r;
  r.id = j["id"].get<std::string>();
  try {
    for (const auto& h : string_set(j, "headers")) r.header_set.insert(fold_case(h));
    r.formula_set = string_set(j, "formulas");
    if (j.contains("format")) r.format = format_from_json(j.at("format"));
    r.provenance = j.value("provenance", std::string{});
  } catch (const json::exception& e) {
    throw InputError("record " + r.id + ": " + e.what());
  }
  if (j.contains("condition") && j["condition"].is_string())
    r.condition = normalize(parse_condition(j["condition"].get<std::string>()));
  else if (j.contains("condition_ast"))
    r.condition = normalize(condition_from_json(j["condition_ast"]));
  else
    throw InputError("record " + r.id + " has no condition");
  r.predicate_sketch_set = predicate_sketches(r.condition);
  r.constant_set = constants_of(r.condition);
  return r;
}

// ---------------------------------------------------------------------------

CorpusStore::CorpusStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  if (!in) throw InputError("cannot open corpus " + path_->string());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    CorpusRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError("corpus " + path_->string() + " line " + std::to_string(row) + ": " + e.what(), row);
    } catch (const Error& e) {
      throw InputError("corpus " + path_->string() + " line " + std::to_string(row) + ": " + e.what(), row);
    }
    if (by_id_.contains(r.id)) throw InputError("corpus has duplicate id " + r.id, row);
    index(r);
    records_.push_back(std::move(r));
  }
}

void CorpusStore::index(const CorpusRecord& r) {
  by_id_[r.id] = records_.size();
  for (const auto& h : r.header_set) by_header_[h].insert(r.id);
}

void CorpusStore::append_to_file(const CorpusRecord& r) const {
  if (!path_) return;
  std::ofstream out(*path_, std::ios::app);
  if (!out) throw Error("cannot append to corpus " + path_->string());
  out << record_to_json(r).dump() << "\n";
}

bool CorpusStore::add(const CorpusRecord& r) {
  if (by_id_.contains(r.id)) return false;
  append_to_file(r);
  index(r);
  records_.push_back(r);
  return true;
}

IngestReport CorpusStore::ingest(std::istream& lines) {
  IngestReport rep;
  std::string line;
  std::size_t row = 0;
  auto reject = [&](const std::string& reason, const std::string& msg) {
    ++rep.rejected;
    ++rep.reasons[reason];
    rep.messages.push_back("line " + std::to_string(row) + ": " + msg);
  };
  while (std::getline(lines, line)) {
    ++row;
    if (trim(line).empty()) continue;
    CorpusRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const ParseError& e) {
      reject("parse", e.what());
      continue;
    } catch (const DnfBoundError& e) {
      reject("parse", e.what());
      continue;
    } catch (const json::exception& e) {
      reject("schema", e.what());
      continue;
    } catch (const Error& e) {
      reject("schema", e.what());
      continue;
    }
    if (!add(r)) {
      reject("duplicate", "duplicate id " + r.id);
      continue;
    }
    ++rep.accepted;
  }
  return rep;
}

const CorpusRecord* CorpusStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::set<std::string> CorpusStore::ids_with_header(const std::string& header) const {
  auto it = by_header_.find(fold_case(header));
  return it == by_header_.end() ? std::set<std::string>{} : it->second;
}

void CorpusStore::export_jsonl(std::ostream& out) const {
  for (const auto& r : records_) out << record_to_json(r).dump() << "\n";
}

// ---------------------------------------------------------------------------

ExecutionVector BenchmarkTask::truth_mask() const {
  if (mask) return *mask;
  if (!rule) throw Error("task " + id + " has no ground truth");
  return execute(rule->condition, table, EvalContext{.today = today, .target = target});
}

Format BenchmarkTask::truth_format() const {
  if (rule) return rule->format;
  std::map<std::string, std::pair<std::size_t, Format>> counts;
  for (const auto& f : cell_formats) {
    if (f.empty()) continue;
    auto& e = counts[format_to_json(f).dump()];
    ++e.first;
    e.second = f;
  }
  const std::pair<std::size_t, Format>* best = nullptr;
  for (const auto& [key, e] : counts)
    if (!best || e.first > best->first) best = &e;
  return best ? best->second : Format{};
}

std::optional<BenchmarkTask> make_manual_task(const Table& table, std::size_t col) {
  const Column& column = table.column(col);
  const std::size_t m = table.n_rows();
  ExecutionVector mask(m);
  std::vector<Format> formats;
  for (std::size_t r = 0; r < m; ++r) {
    const Format& f = column.cells[r].format;
    if (f.fill) mask.set(r);
    formats.push_back(f);
  }
  const std::size_t c = mask.count();
  if (!(c > 5 && c < m)) return std::nullopt;
  BenchmarkTask t;
  t.id = "manual:" + column.header;
  // the sheet keeps its other formats; the target column is what is predicted
  std::vector<Column> cols = table.columns();
  for (auto& cell : cols[col].cells) cell.format = Format{};
  t.table = Table(std::move(cols));
  t.target = col;
  t.mask = std::move(mask);
  t.cell_formats = std::move(formats);
  return t;
}

json truth_to_json(const BenchmarkTask& t) {
  json types = json::array();
  for (const auto& c : t.table.columns()) types.push_back(std::string(to_string(c.type)));
  json j{{"id", t.id},
         {"target", t.table.column(t.target).header},
         {"today", format_date(t.today)},
         {"types", types}};
  if (t.rule) {
    j["kind"] = "rule";
    j["condition"] = print(t.rule->condition);
    j["condition_ast"] = to_json(t.rule->condition);
    j["format"] = format_to_json(t.rule->format);
  } else {
    j["kind"] = "manual";
    j["mask"] = t.mask->to_base64();
    json formats = json::array();
    for (const auto& f : t.cell_formats) formats.push_back(format_to_json(f));
    j["cell_formats"] = formats;
  }
  return j;
}

void write_benchmark(const std::filesystem::path& dir, const std::vector<BenchmarkTask>& tasks,
                     const std::vector<CorpusRecord>& corpus) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "task_%04zu", i);
    const auto tdir = dir / name;
    std::filesystem::create_directories(tdir);
    write_file(tdir / "table.csv", write_csv(tasks[i].table));
    write_file(tdir / "sidecar.json", sidecar_of(tasks[i].table).dump(2) + "\n");
    write_file(tdir / "truth.json", truth_to_json(tasks[i]).dump(2) + "\n");
  }
  std::ostringstream jsonl;
  for (const auto& r : corpus) jsonl << record_to_json(r).dump() << "\n";
  write_file(dir / "corpus.jsonl", jsonl.str());
}

std::vector<BenchmarkTask> read_benchmark(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("benchmark directory not found: " + dir.string());
  std::vector<std::filesystem::path> task_dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().starts_with("task_")) task_dirs.push_back(e.path());
  std::sort(task_dirs.begin(), task_dirs.end());

  std::vector<BenchmarkTask> tasks;
  for (const auto& tdir : task_dirs) {
    try {
      const json truth = json::parse(read_file(tdir / "truth.json"));
      Table table = parse_table(read_file(tdir / "table.csv"));
      if (truth.contains("types")) {
        std::vector<CellType> types;
        for (const auto& s : truth["types"]) {
          auto t = cell_type_from_string(s.get<std::string>());
          if (!t) throw InputError("unknown column type " + s.get<std::string>());
          types.push_back(*t);
        }
        if (types.size() != table.n_cols()) throw InputError("types do not match the table width");
        table = with_types(table, types);
      }
      if (std::filesystem::exists(tdir / "sidecar.json"))
        apply_sidecar(table, json::parse(read_file(tdir / "sidecar.json")));

      BenchmarkTask t;
      t.id = truth.value("id", tdir.filename().string());
      const auto target = table.find_column(truth.at("target").get<std::string>());
      if (!target) throw InputError("target column not found");
      t.target = *target;
      if (truth.contains("today")) {
        auto d = parse_date(truth["today"].get<std::string>());
        if (!d) throw InputError("bad today date");
        t.today = *d;
      }
      const std::string kind = truth.value("kind", std::string("rule"));
      if (kind == "rule") {
        Condition c = truth.contains("condition_ast") ? condition_from_json(truth["condition_ast"])
                                                      : parse_condition(truth.at("condition").get<std::string>());
        t.rule = Rule{std::move(c), truth.contains("format") ? format_from_json(truth["format"]) : Format{}};
      } else {
        auto mask = ExecutionVector::from_base64(truth.at("mask").get<std::string>(), table.n_rows());
        if (!mask) throw InputError("bad mask");
        t.mask = std::move(*mask);
        for (const auto& f : truth.at("cell_formats")) t.cell_formats.push_back(format_from_json(f));
      }
      t.table = std::move(table);
      tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw InputError(tdir.string() + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(tdir.string() + ": " + e.what());
    }
  }
  return tasks;
}

}  // namespace autocf
