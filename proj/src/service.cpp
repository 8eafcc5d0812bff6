#include "autocf/service.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "autocf/evaluate.hpp"

namespace autocf {

struct Service::Server {
  httplib::Server http;
};

namespace {

using nlohmann::json;

HttpResponse reply(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_reply(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return reply(status, extra);
}

// Thrown inside handlers to short-circuit with an error response.
struct Reject {
  HttpResponse response;
};

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw Reject{error_reply(400, "request body must be a JSON object")};
    return j;
  } catch (const json::parse_error& e) {
    throw Reject{error_reply(400, std::string("invalid JSON: ") + e.what())};
  }
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Reject{error_reply(400, std::string("field '") + name + "' has the wrong type")};
  }
}

std::string required_string(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || !it->is_string()) throw Reject{error_reply(400, std::string("missing string field '") + name + "'")};
  return it->get<std::string>();
}

json table_summary(const std::string& id, std::size_t revision, const Table& t) {
  json types = json::array();
  for (const auto& c : t.columns()) types.push_back(std::string(to_string(c.type)));
  return {{"table_id", id}, {"revision", revision}, {"headers", t.headers()}, {"types", types}, {"n_rows", t.n_rows()}};
}

}  // namespace

Service::Service(const Engine& engine, ServiceConfig cfg)
    : engine_(engine), cfg_(std::move(cfg)), server_(std::make_unique<Server>()) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handle(req.method, req.path, req.body, req.get_header_value("Content-Type"));
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server_->http.Get(".*", forward);
  server_->http.Post(".*", forward);
  server_->http.set_payload_max_length(cfg_.max_body_bytes);
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return server_->http.bind_to_any_port(host);
  return server_->http.bind_to_port(host, port) ? port : -1;
}

void Service::run() { server_->http.listen_after_bind(); }

void Service::stop() {
  if (server_ && server_->http.is_running()) server_->http.stop();
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body,
                             const std::string& content_type) {
  static const std::regex kTable(R"(/tables/([^/]+))");
  static const std::regex kRevision(R"(/tables/([^/]+)/revisions/([^/]+))");
  try {
    if (body.size() > cfg_.max_body_bytes) return error_reply(413, "request body too large");
    std::smatch m;
    if (method == "GET") {
      if (path == "/health") return reply(200, {{"status", "ok"}});
      if (path == "/" || path == "/index.html") return get_static("index.html");
      if (std::regex_match(path, m, kRevision)) return get_revision(m[1], m[2]);
      if (std::regex_match(path, m, kTable)) return get_table(m[1]);
    } else if (method == "POST") {
      if (path == "/tables") return post_tables(body, content_type);
      if (path == "/suggest") return post_suggest(body);
      if (path == "/apply") return post_apply(body);
    }
    return error_reply(404, "no route for " + method + " " + path);
  } catch (const Reject& r) {
    return r.response;
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Reject{error_reply(404, "unknown table_id '" + id + "'")};
  return it->second;
}

HttpResponse Service::post_tables(const std::string& body, const std::string& content_type) {
  std::string csv;
  std::optional<json> sidecar;
  if (content_type.starts_with("text/csv")) {
    csv = body;
  } else {
    const json j = parse_body(body);
    csv = required_string(j, "csv");
    if (auto it = j.find("sidecar"); it != j.end() && !it->is_null()) sidecar = *it;
  }
  std::shared_ptr<const Table> table;
  try {
    table = std::make_shared<const Table>(parse_table(csv, sidecar));
  } catch (const InputError& e) {
    json extra = json::object();
    if (e.row()) extra["row"] = e.row();
    return error_reply(400, e.what(), extra);
  }
  if (table->n_cols() == 0) return error_reply(400, "table has no columns");
  auto session = std::make_shared<Session>();
  session->revisions.push_back(table);
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "t" + std::to_string(next_id_++);
    sessions_[id] = session;
  }
  return reply(200, table_summary(id, 0, *table));
}

HttpResponse Service::get_table(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mu);
  return reply(200, table_summary(id, session->revisions.size() - 1, *session->revisions.back()));
}

HttpResponse Service::get_revision(const std::string& id, const std::string& rev) {
  auto session = find(id);
  std::size_t r = 0;
  try {
    std::size_t used = 0;
    r = std::stoul(rev, &used);
    if (used != rev.size()) throw std::invalid_argument(rev);
  } catch (const std::exception&) {
    return error_reply(404, "unknown revision '" + rev + "'");
  }
  std::lock_guard lock(session->mu);
  if (r >= session->revisions.size()) return error_reply(404, "unknown revision '" + rev + "'");
  json j = table_to_json(*session->revisions[r]);
  return reply(200, j);
}

HttpResponse Service::post_suggest(const std::string& body) {
  const json j = parse_body(body);
  const std::string id = required_string(j, "table_id");
  auto session = find(id);
  std::shared_ptr<const Table> table;
  std::size_t revision = 0;
  {
    std::lock_guard lock(session->mu);
    revision = field<std::size_t>(j, "revision", session->revisions.size() - 1);
    if (revision >= session->revisions.size()) return error_reply(404, "unknown revision");
    table = session->revisions[revision];
  }
  const std::string column = required_string(j, "column");
  const auto target = table->find_column(column);
  if (!target) return error_reply(422, "unknown column '" + column + "'");
  const std::size_t k = field<std::size_t>(j, "k", engine_.config().k);
  if (k == 0 || k > cfg_.max_k) return error_reply(422, "k must be between 1 and " + std::to_string(cfg_.max_k));
  const bool use_llm = field<bool>(j, "use_llm", false);
  Date today = cfg_.today;
  if (auto t = field<std::string>(j, "today", ""); !t.empty()) {
    auto d = parse_date(t);
    if (!d) return error_reply(422, "unparseable date '" + t + "'");
    today = *d;
  }
  SuggestOptions opts;
  opts.k = k;
  opts.seed = field<std::uint64_t>(j, "seed", engine_.config().seed);

  std::unique_ptr<GeneratorClient> client;
  bool fallback = false;
  if (use_llm) {
    if (cfg_.client_factory) client = cfg_.client_factory();
    if (!client) fallback = true;
  }
  SuggestResult result = engine_.suggest(*table, *target, today, client.get(), opts);
  if (use_llm && !result.llm_used) fallback = true;
  if (fallback && !client) result.warnings.push_back("no generator client configured, using symbolic suggestions only");

  json out = result_to_json(result);
  out["table_id"] = id;
  out["revision"] = revision;
  out["column"] = table->column(*target).header;
  out["symbolic_only_fallback"] = fallback;
  return reply(fallback ? 503 : 200, out);
}

HttpResponse Service::post_apply(const std::string& body) {
  const json j = parse_body(body);
  const std::string id = required_string(j, "table_id");
  auto session = find(id);
  const std::string column = required_string(j, "column");

  std::string rule_text;
  json format_json = j.contains("format") ? j["format"] : json(nullptr);
  if (auto it = j.find("rule"); it != j.end() && it->is_object()) {
    rule_text = required_string(*it, "condition");
    if (it->contains("format")) format_json = (*it)["format"];
  } else {
    rule_text = required_string(j, "rule");
  }
  Rule rule;
  try {
    rule.condition = parse_condition(rule_text);
  } catch (const ParseError& e) {
    return error_reply(422, e.what(), {{"position", e.position()}});
  } catch (const DnfBoundError& e) {
    return error_reply(422, e.what());
  }
  try {
    rule.format = format_json.is_null() ? fallback_format() : format_from_json(format_json);
  } catch (const std::exception& e) {
    return error_reply(422, std::string("invalid format: ") + e.what());
  }
  Date today = cfg_.today;
  if (auto t = field<std::string>(j, "today", ""); !t.empty()) {
    auto d = parse_date(t);
    if (!d) return error_reply(422, "unparseable date '" + t + "'");
    today = *d;
  }

  // revisions are append-only; hold the session lock so concurrent applies
  // each build on the previous one
  std::lock_guard lock(session->mu);
  const Table& current = *session->revisions.back();
  const auto target = current.find_column(column);
  if (!target) return error_reply(422, "unknown column '" + column + "'");
  const EvalContext ctx{.today = today, .target = *target};
  std::size_t highlighted = 0;
  try {
    highlighted = execute(rule.condition, current, ctx).count();
    session->revisions.push_back(std::make_shared<const Table>(apply_rule(current, *target, rule, ctx)));
  } catch (const ResolutionError& e) {
    return error_reply(422, e.what());
  } catch (const TypeMismatchError& e) {
    return error_reply(422, e.what());
  }
  return reply(200, {{"table_id", id}, {"revision", session->revisions.size() - 1}, {"highlighted", highlighted}});
}

HttpResponse Service::get_static(const std::string& name) {
  if (cfg_.static_dir.empty()) return error_reply(404, "no user interface configured");
  std::ifstream in(cfg_.static_dir / name, std::ios::binary);
  if (!in) return error_reply(404, "missing " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return {200, "text/html; charset=utf-8", ss.str()};
}

}  // namespace autocf
