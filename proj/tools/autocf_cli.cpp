// Command-line entry points: suggest, eval, train-ranker, ingest, gen-corpus
// and serve. Exit codes: 0 ok, 2 input error, 3 resolution error, 4 internal.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "autocf/engine.hpp"
#include "autocf/eval.hpp"
#include "autocf/service.hpp"
#include "autocf/synthetic.hpp"

namespace {

using namespace autocf;
namespace fs = std::filesystem;

constexpr int kExitInput = 2;
constexpr int kExitResolution = 3;
constexpr int kExitInternal = 4;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

Date parse_today(const std::string& text) {
  if (text.empty()) {
    // the only place the clock is read
    return std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
  }
  auto d = parse_date(text);
  if (!d) throw InputError("unparseable --today '" + text + "'");
  return *d;
}

RankerModel load_model(const std::string& path) {
  return path.empty() ? RankerModel::load_default() : RankerModel::load(path);
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  if (path.empty()) return {};
  if (!fs::exists(path)) throw InputError("corpus file not found: " + path);
  return CorpusStore(path).records();
}

struct ClientOptions {
  bool no_llm = false;
  std::string transcript;
};

/// Transcript replay when given, else a live endpoint from the environment
/// unless --no-llm, else nothing.
std::function<std::unique_ptr<GeneratorClient>()> client_factory(const ClientOptions& o) {
  if (!o.transcript.empty()) {
    auto replay = std::make_shared<ReplayClient>(o.transcript);
    return [replay] {
      struct Shared : GeneratorClient {
        std::shared_ptr<ReplayClient> inner;
        std::string complete(const std::string& p) override { return inner->complete(p); }
      };
      auto c = std::make_unique<Shared>();
      c->inner = replay;
      return std::unique_ptr<GeneratorClient>(std::move(c));
    };
  }
  if (o.no_llm) return {};
  if (auto cfg = HttpClientConfig::from_env())
    return [cfg = *cfg] { return std::unique_ptr<GeneratorClient>(std::make_unique<HttpClient>(cfg)); };
  std::cerr << "warning: AUTOCF_LLM_ENDPOINT is not set, using symbolic suggestions only\n";
  return {};
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long k = std::stoul(trim(part), &used);
      if (used != trim(part).size() || k == 0) throw std::invalid_argument(part);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw InputError("bad --k list '" + text + "'");
    }
  }
  if (ks.empty()) throw InputError("empty --k list");
  return ks;
}

// ---------------------------------------------------------------------------

struct SuggestArgs {
  std::string table, sidecar, column, model, corpus, format = "json", today;
  std::size_t k = 5;
  std::uint64_t seed = 1;
  ClientOptions client;
};

int run_suggest(const SuggestArgs& a) {
  std::optional<nlohmann::json> sidecar;
  if (!a.sidecar.empty()) {
    try {
      sidecar = nlohmann::json::parse(read_file(a.sidecar));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("sidecar " + a.sidecar + ": " + e.what());
    }
  }
  const Table table = parse_table(read_file(a.table), sidecar);
  const std::size_t target = resolve_target(table, a.column).index;
  EngineConfig cfg;
  cfg.k = a.k;
  cfg.seed = a.seed;
  const Engine engine(load_model(a.model), load_corpus(a.corpus), cfg);
  auto factory = client_factory(a.client);
  auto client = factory ? factory() : nullptr;
  const SuggestResult r = engine.suggest(table, target, parse_today(a.today), client.get());
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (a.format == "text") {
    for (std::size_t i = 0; i < r.suggestions.size(); ++i) {
      const auto& s = r.suggestions[i];
      std::cout << i + 1 << ". " << print(s.condition) << "\n   format: " << describe(s.format)
                << "\n   highlights " << s.mask.count() << " of " << table.n_rows() << " rows, score " << s.score << "\n";
    }
  } else {
    std::cout << result_to_json(r).dump(2) << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string bench, ks = "1,3,5", out, model;
  std::size_t threads = 0;
  std::uint64_t seed = 1;
  ClientOptions client;
};

int run_eval(const EvalArgs& a) {
  const auto tasks = read_benchmark(a.bench);
  const fs::path corpus_path = fs::path(a.bench) / "corpus.jsonl";
  EngineConfig ecfg;
  ecfg.seed = a.seed;
  SuiteConfig cfg;
  cfg.ks = parse_ks(a.ks);
  ecfg.k = *std::max_element(cfg.ks.begin(), cfg.ks.end());
  cfg.threads = a.threads;
  cfg.client_factory = client_factory(a.client);
  const Engine engine(load_model(a.model), fs::exists(corpus_path) ? load_corpus(corpus_path.string()) : std::vector<CorpusRecord>{},
                      ecfg);
  const SuiteReport report = run_suite(tasks, engine, cfg);
  const fs::path out = a.out.empty() ? fs::path(a.bench) : fs::path(a.out);
  write_file(out / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(out / "report.csv", report_to_csv(report));
  std::cout << report_to_csv(report);
  std::cout << "tasks " << report.tasks.size() << ", errors " << report.errors() << ", diversity violations "
            << report.diversity_violations() << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus, out;
  std::uint64_t seed = 1;
  std::size_t epochs = MlpConfig{}.epochs;
};

int run_train(const TrainArgs& a) {
  std::vector<TrainingTask> tasks;
  for (auto& t : read_benchmark(a.corpus))
    if (t.rule) tasks.push_back({std::move(t.table), t.target, t.rule->condition, t.today});
  TrainOptions opts;
  opts.seed = a.seed;
  opts.mlp.epochs = a.epochs;
  const RankerModel model = train_ranker(tasks, opts);
  model.save(a.out);
  std::cout << model.hash() << "\n";
  return 0;
}

int run_ingest(const std::string& in_path, const std::string& store_path) {
  std::ifstream in(in_path);
  if (!in) throw InputError("cannot read " + in_path);
  CorpusStore store(store_path);
  const IngestReport r = store.ingest(in);
  for (const auto& m : r.messages) std::cerr << m << "\n";
  std::cout << nlohmann::json{{"accepted", r.accepted}, {"rejected", r.rejected}, {"reasons", r.reasons}}.dump() << "\n";
  return 0;
}

int run_gen(std::uint64_t seed, std::size_t n, const std::string& out, double cross_rate) {
  SyntheticOptions o;
  o.seed = seed;
  o.n_tasks = n;
  o.cross_column_rate = cross_rate;
  const SyntheticCorpus c = generate_synthetic_corpus(o);
  for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
  write_benchmark(out, c.tasks, c.records);
  std::cout << "wrote " << c.tasks.size() << " tasks to " << out << "\n";
  return 0;
}

struct ServeArgs {
  std::string host = "127.0.0.1", model, corpus, today, static_dir = (fs::path(AUTOCF_ASSET_DIR) / "web").string();
  int port = 8080;
  ClientOptions client;
};

Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  const Engine engine(load_model(a.model), load_corpus(a.corpus));
  ServiceConfig cfg;
  cfg.today = parse_today(a.today);
  cfg.client_factory = client_factory(a.client);
  cfg.static_dir = a.static_dir;
  Service service(engine, cfg);
  const int port = service.bind(a.host, a.port);
  if (port < 0) {
    std::cerr << "cannot bind " << a.host << ":" << a.port << "\n";
    return kExitInput;
  }
  std::cout << "listening on http://" << a.host << ":" << port << std::endl;
  g_service = &service;
  std::signal(SIGINT, [](int) { if (g_service) g_service->stop(); });
  std::signal(SIGTERM, [](int) { if (g_service) g_service->stop(); });
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional formatting rule suggestions for tables"};
  app.require_subcommand(1);

  SuggestArgs sa;
  auto* suggest = app.add_subcommand("suggest", "Suggest rules for one column");
  suggest->add_option("--table", sa.table, "CSV file")->required();
  suggest->add_option("--sidecar", sa.sidecar, "Cell format sidecar JSON");
  suggest->add_option("--column", sa.column, "Target column header")->required();
  suggest->add_option("--k", sa.k, "Number of suggestions")->check(CLI::PositiveNumber);
  suggest->add_flag("--no-llm", sa.client.no_llm, "Do not call a live generator endpoint");
  suggest->add_option("--transcript", sa.client.transcript, "Replay generator answers from a JSONL transcript");
  suggest->add_option("--seed", sa.seed, "Seed for prompt row sampling");
  suggest->add_option("--format", sa.format, "Output format")->check(CLI::IsMember({"json", "text"}));
  suggest->add_option("--today", sa.today, "Reference date (YYYY-MM-DD), default the system date");
  suggest->add_option("--model", sa.model, "Ranker model, default the shipped one");
  suggest->add_option("--corpus", sa.corpus, "Rule corpus JSONL for format retrieval");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate on a benchmark directory");
  eval->add_option("--bench", ea.bench, "Benchmark directory")->required();
  eval->add_option("--k", ea.ks, "Comma-separated cutoffs");
  eval->add_option("--out", ea.out, "Report directory, default the benchmark directory");
  eval->add_option("--threads", ea.threads, "Worker threads, 0 for all cores");
  eval->add_option("--seed", ea.seed, "Seed for prompt row sampling");
  eval->add_option("--model", ea.model, "Ranker model, default the shipped one");
  eval->add_flag("--no-llm", ea.client.no_llm, "Do not call a live generator endpoint");
  eval->add_option("--transcript", ea.client.transcript, "Replay generator answers from a JSONL transcript");

  TrainArgs ta;
  auto* train = app.add_subcommand("train-ranker", "Train the candidate ranker");
  train->add_option("--corpus", ta.corpus, "Benchmark directory with rule tasks")->required();
  train->add_option("--out", ta.out, "Model output path")->required();
  train->add_option("--seed", ta.seed, "Training seed");
  train->add_option("--epochs", ta.epochs, "Training epochs");

  std::string ingest_in, ingest_store = "corpus.jsonl";
  auto* ingest = app.add_subcommand("ingest", "Add rule records to a corpus store");
  ingest->add_option("--in", ingest_in, "Records JSONL")->required();
  ingest->add_option("--store", ingest_store, "Corpus store JSONL");

  std::uint64_t gen_seed = 7;
  std::size_t gen_n = 200;
  std::string gen_out;
  double gen_cross = 0;
  auto* gen = app.add_subcommand("gen-corpus", "Write a seeded synthetic benchmark");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--n", gen_n, "Number of tasks")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--cross-column-rate", gen_cross, "Share of rules comparing two columns")->check(CLI::Range(0.0, 1.0));

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", sv.port, "Port, 0 for any free port");
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--model", sv.model, "Ranker model, default the shipped one");
  serve->add_option("--corpus", sv.corpus, "Rule corpus JSONL for format retrieval");
  serve->add_option("--today", sv.today, "Reference date (YYYY-MM-DD), default the system date");
  serve->add_option("--static-dir", sv.static_dir, "Directory with the browser page");
  serve->add_flag("--no-llm", sv.client.no_llm, "Do not call a live generator endpoint");
  serve->add_option("--transcript", sv.client.transcript, "Replay generator answers from a JSONL transcript");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*suggest) return run_suggest(sa);
    if (*eval) return run_eval(ea);
    if (*train) return run_train(ta);
    if (*ingest) return run_ingest(ingest_in, ingest_store);
    if (*gen) return run_gen(gen_seed, gen_n, gen_out, gen_cross);
    if (*serve) return run_serve(sv);
  } catch (const ResolutionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResolution;
  } catch (const TypeMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResolution;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DnfBoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
