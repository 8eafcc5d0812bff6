#pragma once

// Node features for (partial) conditions and the feed-forward scorer that
// ranks them during beam search.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autocf/condition.hpp"
#include "autocf/execution_vector.hpp"
#include "autocf/properties.hpp"
#include "autocf/table.hpp"

namespace autocf {

/// Everything about the target column that node features need, computed once
/// per (table, target).
struct FeatureContext {
  const Table* table = nullptr;
  std::size_t target = 0;
  Date today{};
  ColumnProperties props;

  std::vector<std::string> common_values;  // case-folded, most common first
  std::set<std::string> categories;
  std::set<std::string> prefixes, suffixes, tokens;
  std::vector<std::pair<std::string, double>> stats;  // property name -> value
  std::vector<std::pair<double, std::string>> rounded_stats;  // nice constant -> source property
  std::vector<std::uint32_t> value_ids;  // per row, equal case-folded values share an id
  std::size_t n_values = 0;
  std::set<int> years;
  std::vector<Date> date_quantiles;
  std::vector<double> column_features;  // flattened properties
};

FeatureContext make_feature_context(const Table& table, std::size_t target, Date today,
                                    std::size_t k = kDefaultPropertyK);

/// Named view of the node-level features.
struct NodeFeatures {
  double fraction_highlighted = 0;
  CellType rule_type = CellType::Text;
  PredFamily rule_category = PredFamily::General;  // family of the first literal
  double argument_length = 0;                      // constant arguments over all literals
  std::vector<double> values;                      // full vector, see feature_names()
};

NodeFeatures node_features(const Condition& cond, const ExecutionVector& mask, const FeatureContext& ctx);

/// Stable, ordered schema of the feature vector.
const std::vector<std::string>& feature_names();

/// Round "nice" neighbours of x with one and two significant digits.
std::vector<double> nice_constants(double x);

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;
};

/// Multi-layer perceptron over standardized features; ReLU hidden layers and
/// a single logit output.
class RankerModel {
 public:
  static constexpr int kSchemaVersion = 1;

  std::vector<std::string> feature_schema;
  std::vector<double> mean, scale;
  std::vector<DenseLayer> layers;

  double logit(const std::vector<double>& features) const;

  nlohmann::json to_json() const;
  static RankerModel from_json(const nlohmann::json& j);
  /// Canonical serialized text (what save() writes).
  std::string serialize() const;
  std::string hash() const;

  void save(const std::filesystem::path& path) const;
  static RankerModel load(const std::filesystem::path& path);
  /// Model shipped in the asset directory.
  static RankerModel load_default();
};

struct MlpConfig {
  std::vector<std::size_t> hidden{32, 16, 8};
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
};

/// Fits the scorer with a weighted logistic loss (Adam). Deterministic given
/// the inputs and cfg.seed.
RankerModel fit_mlp(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                    const std::vector<double>& sample_weight, const MlpConfig& cfg);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace autocf
