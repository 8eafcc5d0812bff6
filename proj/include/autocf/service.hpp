#pragma once

// JSON-over-HTTP facade: table sessions with immutable revisions, suggestion
// and apply endpoints, and the static page of the browser companion.
//
//   POST /tables                       CSV (+ sidecar) -> table_id
//   GET  /tables/{id}                  latest revision summary
//   GET  /tables/{id}/revisions/{r}    canonical table JSON
//   POST /suggest                      ranked suggestions with masks and formats
//   POST /apply                        new revision with a rule applied
//   GET  /health

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "autocf/engine.hpp"

namespace autocf {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ServiceConfig {
  /// Reference date for relative date predicates unless a request gives one.
  Date today{};
  /// Client for use_llm requests; without one such requests fall back to
  /// symbolic suggestions with status 503.
  std::function<std::unique_ptr<GeneratorClient>()> client_factory;
  std::size_t max_body_bytes = std::size_t{16} << 20;
  std::size_t max_k = 50;
  /// Directory holding index.html for GET /; empty disables it.
  std::filesystem::path static_dir;
};

class Service {
 public:
  Service(const Engine& engine, ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Routes one request. Thread-safe.
  HttpResponse handle(const std::string& method, const std::string& path, const std::string& body,
                      const std::string& content_type = "application/json");

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void run();
  void stop();

 private:
  struct Session {
    std::mutex mu;
    std::vector<std::shared_ptr<const Table>> revisions;
  };

  std::shared_ptr<Session> find(const std::string& id);
  HttpResponse post_tables(const std::string& body, const std::string& content_type);
  HttpResponse get_table(const std::string& id);
  HttpResponse get_revision(const std::string& id, const std::string& rev);
  HttpResponse post_suggest(const std::string& body);
  HttpResponse post_apply(const std::string& body);
  HttpResponse get_static(const std::string& name);

  const Engine& engine_;
  ServiceConfig cfg_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_id_ = 1;

  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace autocf
