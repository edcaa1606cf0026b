#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlrf/data.hpp"

namespace tlrf {

enum class CsvErrorKind { EmptyFile, MissingColumn, BadCell };

class CsvError : public std::runtime_error {
 public:
  CsvError(CsvErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  CsvErrorKind kind() const { return kind_; }

 private:
  CsvErrorKind kind_;
};

/// Raw parsed CSV: header plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws MissingColumn
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Column roles. The response column is required and parsed numerically;
/// columns in `categorical` are one-hot encoded with a dummy per category;
/// columns in `ignore` are dropped; everything else is a numeric feature,
/// min-max scaled to [0,1].
struct CsvSchema {
  std::string response = "y";
  std::vector<std::string> categorical;
  std::vector<std::string> ignore;
};

/// Per-column statistics fitted on a training table and reused verbatim on
/// any later table, so test rows never influence the scaling.
struct Encoder {
  struct Column {
    std::string name;
    bool is_categorical = false;
    double min = 0.0;  // numeric
    double max = 1.0;
    std::vector<std::string> categories;  // categorical, sorted
  };
  std::vector<Column> columns;    // input order, response/ignored excluded
  std::size_t fitted_rows = 0;

  std::size_t encoded_dims() const;
  std::vector<std::string> feature_names() const;
};

Encoder fit_encoder(const CsvTable& table, const CsvSchema& schema);

/// Applies a fitted encoder: numeric features become (x-min)/(max-min)
/// clamped to [0,1] (constant training columns map to 0.5); categorical
/// features become 0/1 dummies, unseen categories encoding to all zeros.
/// `require_response` controls whether the response column must exist.
Dataset encode_table(const CsvTable& table, const CsvSchema& schema,
                     const Encoder& encoder, bool require_response = true);

struct EncodedCsv {
  Dataset data;
  Encoder encoder;
};

/// read + fit + encode in one step (the training path).
EncodedCsv load_csv(const std::string& path, const CsvSchema& schema);

}  // namespace tlrf
