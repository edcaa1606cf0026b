#include "tlrf/model_io.hpp"

#include <fstream>
#include <stdexcept>

namespace tlrf {

using nlohmann::json;

namespace {

void check_version(const json& j, const std::string& kind) {
  if (!j.contains("version") || j.at("version").get<int>() != kModelFormatVersion)
    throw std::runtime_error("model file: unsupported version");
  if (!j.contains("kind") || j.at("kind").get<std::string>() != kind)
    throw std::runtime_error("model file: expected kind '" + kind + "'");
}

}  // namespace

json to_json(const CenteredForest& forest) {
  json trees = json::array();
  for (const auto& t : forest.trees()) {
    trees.push_back({{"split_feature", t.split_feature},
                     {"split_value", t.split_value},
                     {"leaf_mean", t.leaf_mean},
                     {"leaf_count", t.leaf_count}});
  }
  return {{"version", kModelFormatVersion},
          {"kind", "centered"},
          {"d", forest.dims()},
          {"depth", forest.depth()},
          {"trees_count", forest.trees().size()},
          {"weights", forest.weights().probs()},
          {"seed", forest.seed()},
          {"trees", std::move(trees)}};
}

CenteredForest centered_forest_from_json(const json& j) {
  check_version(j, "centered");
  const int depth = j.at("depth").get<int>();
  const std::size_t d = j.at("d").get<std::size_t>();
  std::vector<CenteredTree> trees;
  for (const auto& tj : j.at("trees")) {
    CenteredTree t;
    t.depth = depth;
    t.n_features = d;
    tj.at("split_feature").get_to(t.split_feature);
    tj.at("split_value").get_to(t.split_value);
    tj.at("leaf_mean").get_to(t.leaf_mean);
    tj.at("leaf_count").get_to(t.leaf_count);
    trees.push_back(std::move(t));
  }
  FeatureWeights w(j.at("weights").get<std::vector<double>>());
  return CenteredForest(std::move(trees), std::move(w), depth,
                        j.at("seed").get<std::uint64_t>());
}

json to_json(const CartForest& forest) {
  json trees = json::array();
  for (const auto& t : forest.trees()) {
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"value", t.value},
                     {"count", t.count}});
  }
  const auto& cfg = forest.config();
  return {{"version", kModelFormatVersion},
          {"kind", "cart"},
          {"d", forest.dims()},
          {"trees_count", forest.trees().size()},
          {"mtry", cfg.mtry},
          {"n_boot", cfg.n_boot},
          {"max_depth", cfg.max_depth},
          {"bootstrap", cfg.bootstrap},
          {"weights", forest.weights().probs()},
          {"seed", cfg.seed},
          {"trees", std::move(trees)}};
}

CartForest cart_forest_from_json(const json& j) {
  check_version(j, "cart");
  std::vector<CartTree> trees;
  for (const auto& tj : j.at("trees")) {
    CartTree t;
    tj.at("feature").get_to(t.feature);
    tj.at("threshold").get_to(t.threshold);
    tj.at("left").get_to(t.left);
    tj.at("right").get_to(t.right);
    tj.at("value").get_to(t.value);
    tj.at("count").get_to(t.count);
    trees.push_back(std::move(t));
  }
  CartConfig cfg;
  cfg.trees = trees.size();
  cfg.mtry = j.at("mtry").get<std::size_t>();
  cfg.n_boot = j.at("n_boot").get<std::size_t>();
  cfg.max_depth = j.at("max_depth").get<int>();
  cfg.bootstrap = j.at("bootstrap").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  FeatureWeights w(j.at("weights").get<std::vector<double>>());
  return CartForest(std::move(trees), std::move(w), cfg,
                    j.at("d").get<std::size_t>());
}

json to_json(const TransferModel& model) {
  const bool centered = model.kind == ForestKind::Centered;
  return {{"version", kModelFormatVersion},
          {"kind", "transfer"},
          {"forest_kind", centered ? "centered" : "cart"},
          {"dcov_weights", model.dcov_weights.probs()},
          {"train_idx", model.split.train_idx},
          {"dcov_idx", model.split.dcov_idx},
          {"source", centered ? to_json(*model.source_crf) : to_json(*model.source_srf)},
          {"residual",
           centered ? to_json(*model.residual_crf) : to_json(*model.residual_srf)}};
}

TransferModel transfer_model_from_json(const json& j) {
  check_version(j, "transfer");
  const bool centered = j.at("forest_kind").get<std::string>() == "centered";
  FeatureWeights w(j.at("dcov_weights").get<std::vector<double>>());
  SplitAssignment split;
  j.at("train_idx").get_to(split.train_idx);
  j.at("dcov_idx").get_to(split.dcov_idx);
  if (centered) {
    return TransferModel{ForestKind::Centered,
                         centered_forest_from_json(j.at("source")),
                         centered_forest_from_json(j.at("residual")),
                         std::nullopt,
                         std::nullopt,
                         std::move(w),
                         std::move(split)};
  }
  return TransferModel{ForestKind::Cart,
                       std::nullopt,
                       std::nullopt,
                       cart_forest_from_json(j.at("source")),
                       cart_forest_from_json(j.at("residual")),
                       std::move(w),
                       std::move(split)};
}

json to_json(const Encoder& encoder) {
  json cols = json::array();
  for (const auto& c : encoder.columns) {
    cols.push_back({{"name", c.name},
                    {"categorical", c.is_categorical},
                    {"min", c.min},
                    {"max", c.max},
                    {"categories", c.categories}});
  }
  return {{"columns", std::move(cols)}, {"fitted_rows", encoder.fitted_rows}};
}

Encoder encoder_from_json(const json& j) {
  Encoder enc;
  enc.fitted_rows = j.at("fitted_rows").get<std::size_t>();
  for (const auto& cj : j.at("columns")) {
    Encoder::Column c;
    c.name = cj.at("name").get<std::string>();
    c.is_categorical = cj.at("categorical").get<bool>();
    c.min = cj.at("min").get<double>();
    c.max = cj.at("max").get<double>();
    cj.at("categories").get_to(c.categories);
    enc.columns.push_back(std::move(c));
  }
  return enc;
}

json to_json(const CsvSchema& schema) {
  return {{"response", schema.response},
          {"categorical", schema.categorical},
          {"ignore", schema.ignore}};
}

CsvSchema schema_from_json(const json& j) {
  CsvSchema s;
  s.response = j.value("response", std::string("y"));
  if (j.contains("categorical")) j.at("categorical").get_to(s.categorical);
  if (j.contains("ignore")) j.at("ignore").get_to(s.ignore);
  return s;
}

void save_model_file(const std::string& path, const ModelFile& file) {
  json doc = {{"format", "tlrf-model"},
              {"version", kModelFormatVersion},
              {"model", file.model}};
  if (file.encoder) doc["encoder"] = to_json(*file.encoder);
  if (file.schema) doc["schema"] = to_json(*file.schema);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << doc.dump(1, '\t') << '\n';
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  json doc = json::parse(in);
  if (doc.value("format", std::string()) != "tlrf-model")
    throw std::runtime_error("not a tlrf model file: '" + path + "'");
  ModelFile file;
  file.model = doc.at("model");
  if (doc.contains("encoder")) file.encoder = encoder_from_json(doc.at("encoder"));
  if (doc.contains("schema")) file.schema = schema_from_json(doc.at("schema"));
  return file;
}

}  // namespace tlrf
