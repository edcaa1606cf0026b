#pragma once

#include <iosfwd>
#include <string>

#include "tlrf/cart_forest.hpp"
#include "tlrf/centered_forest.hpp"
#include "tlrf/csv.hpp"
#include "tlrf/transfer.hpp"

#include "json.hpp"

namespace tlrf {

/// Versioned structured-text model files. Doubles survive the round trip
/// exactly, so a reloaded model predicts bit-identically.
inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const CenteredForest& forest);
nlohmann::json to_json(const CartForest& forest);
nlohmann::json to_json(const TransferModel& model);
nlohmann::json to_json(const Encoder& encoder);
nlohmann::json to_json(const CsvSchema& schema);

CenteredForest centered_forest_from_json(const nlohmann::json& j);
CartForest cart_forest_from_json(const nlohmann::json& j);
TransferModel transfer_model_from_json(const nlohmann::json& j);
Encoder encoder_from_json(const nlohmann::json& j);
CsvSchema schema_from_json(const nlohmann::json& j);

/// CLI-level wrapper: the model plus the encoder/schema it was trained
/// with, when ingestion went through a CSV schema.
struct ModelFile {
  nlohmann::json model;  // one of the forest/transfer documents
  std::optional<Encoder> encoder;
  std::optional<CsvSchema> schema;
};

void save_model_file(const std::string& path, const ModelFile& file);
ModelFile load_model_file(const std::string& path);

}  // namespace tlrf
