#pragma once

// Prompted rule generation: prompt construction, pluggable text-generation
// clients, response parsing and decomposition into boosted terms/components.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autocf/condition.hpp"
#include "autocf/error.hpp"
#include "autocf/properties.hpp"
#include "autocf/symbolic.hpp"
#include "autocf/table.hpp"

namespace autocf {

struct ReasoningSteps {
  std::vector<std::string> relevant_columns;
  std::vector<std::string> predicates_functions;
  std::vector<std::string> constants;
  std::vector<std::string> rules;

  bool operator==(const ReasoningSteps&) const = default;
};

/// Hand-annotated example shown in the prompt.
struct Exemplar {
  std::string table_csv;
  std::string target;
  ReasoningSteps steps;
};

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path);
/// The three exemplars shipped in the asset directory.
const std::vector<Exemplar>& default_exemplars();

/// Row indices shown to the model: the first five plus five seeded picks
/// from the rest, in ascending order.
std::vector<std::size_t> sample_rows(std::size_t n_rows, std::uint64_t seed);

std::string build_prompt(const Table& table, std::size_t col, const ColumnProperties& props, std::uint64_t seed,
                         const std::vector<Exemplar>& exemplars = default_exemplars());

/// Canonical four-section answer text; parse_response reads it back exactly.
std::string render_response(const ReasoningSteps& steps);

class MalformedResponseError : public Error {
 public:
  using Error::Error;
};

struct ParsedResponse {
  ReasoningSteps steps;
  std::vector<Condition> conditions;
  std::vector<std::string> warnings;  // unparseable rule lines
};

/// Throws MalformedResponseError when no section label is found.
ParsedResponse parse_response(const std::string& text);

struct Decomposition {
  std::set<std::string> boosted_terms;  // case-folded columns, canonical constants
  std::vector<Component> components;    // sorted by printed body

  bool operator==(const Decomposition&) const = default;
};

/// Canonical spelling of a constant as it appears in boosted terms.
std::string canonical_constant(const std::string& raw);

Decomposition decompose(const std::vector<Condition>& conditions, const ReasoningSteps& steps);

// ---------------------------------------------------------------------------
// Clients

/// Raised by clients on transport failures, timeouts and missing transcripts.
class ClientError : public Error {
 public:
  using Error::Error;
};

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic stand-in: returns the result of a fixed function of the prompt.
class MockClient : public GeneratorClient {
 public:
  explicit MockClient(std::string response);
  explicit MockClient(std::function<std::string(const std::string&)> fn);
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const noexcept { return calls_; }

 private:
  std::function<std::string(const std::string&)> fn_;
  std::size_t calls_ = 0;
};

std::string prompt_hash(const std::string& prompt);

/// Answers from a JSONL transcript of {prompt_hash, response} records.
class ReplayClient : public GeneratorClient {
 public:
  explicit ReplayClient(const std::filesystem::path& transcript);
  std::string complete(const std::string& prompt) override;
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
};

/// Forwards to another client and appends every exchange to a transcript.
class RecordingClient : public GeneratorClient {
 public:
  RecordingClient(GeneratorClient& inner, std::filesystem::path transcript);
  std::string complete(const std::string& prompt) override;

 private:
  GeneratorClient& inner_;
  std::filesystem::path path_;
};

struct HttpClientConfig {
  std::string endpoint;  // full URL of a chat-completions style endpoint
  std::string token;
  std::string model = "gpt-4";
  std::chrono::seconds timeout{30};
  double temperature = 0;

  /// From AUTOCF_LLM_ENDPOINT / _TOKEN / _MODEL / _TIMEOUT; nullopt without an endpoint.
  static std::optional<HttpClientConfig> from_env();
};

/// Sends {model, messages, temperature} and reads choices[0].message.content.
class HttpClient : public GeneratorClient {
 public:
  explicit HttpClient(HttpClientConfig cfg);
  std::string complete(const std::string& prompt) override;

 private:
  HttpClientConfig cfg_;
};

// ---------------------------------------------------------------------------

struct NeuralResult {
  ParsedResponse response;
  std::vector<Condition> conditions;  // bound to the table and type-checked
  Decomposition decomposition;
};

/// Prompts the client and post-processes its answer. Rules that do not
/// resolve on the table are moved to warnings. Client errors propagate.
NeuralResult run_neural_generator(const Table& table, std::size_t col, const ColumnProperties& props,
                                  GeneratorClient& client, std::uint64_t seed);

}  // namespace autocf
