#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "autocf/llm.hpp"

namespace autocf {

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

// Splits "https://host:port/path" into ("https://host:port", "/path").
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ClientError("endpoint is not an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::optional<HttpClientConfig> HttpClientConfig::from_env() {
  auto endpoint = env("AUTOCF_LLM_ENDPOINT");
  if (!endpoint) return std::nullopt;
  HttpClientConfig cfg;
  cfg.endpoint = *endpoint;
  cfg.token = env("AUTOCF_LLM_TOKEN").value_or("");
  if (auto model = env("AUTOCF_LLM_MODEL")) cfg.model = *model;
  if (auto timeout = env("AUTOCF_LLM_TIMEOUT")) {
    auto secs = parse_number(*timeout);
    if (!secs || *secs <= 0) throw InputError("AUTOCF_LLM_TIMEOUT must be a positive number of seconds");
    cfg.timeout = std::chrono::seconds(static_cast<long>(*secs));
  }
  return cfg;
}

HttpClient::HttpClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {}

std::string HttpClient::complete(const std::string& prompt) {
  const auto [base, path] = split_url(cfg_.endpoint);
  httplib::Client cli(base);
  cli.set_connection_timeout(cfg_.timeout);
  cli.set_read_timeout(cfg_.timeout);
  cli.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);
  const nlohmann::json body{
      {"model", cfg_.model},
      {"temperature", cfg_.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
  };
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw ClientError("request to " + cfg_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ClientError("endpoint " + cfg_.endpoint + " returned HTTP " + std::to_string(res->status));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ClientError(std::string("unexpected response shape: ") + e.what());
  }
}

}  // namespace autocf
