#include "tlrf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

namespace tlrf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

double parse_numeric(const std::string& cell, const std::string& column,
                     std::size_t row) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != cell.size() || cell.empty() || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "unparseable numeric cell '" << cell << "' in column '" << column
        << "', data row " << row + 1;
    throw CsvError(CsvErrorKind::BadCell, msg.str());
  }
  return v;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw CsvError(CsvErrorKind::MissingColumn, "missing column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && !have_header) continue;
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line);
    cells.resize(table.header.size());
    table.rows.push_back(std::move(cells));
  }
  if (!have_header || table.rows.empty())
    throw CsvError(CsvErrorKind::EmptyFile, "no data rows");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(CsvErrorKind::EmptyFile, "cannot open '" + path + "'");
  return read_csv(in);
}

std::size_t Encoder::encoded_dims() const {
  std::size_t d = 0;
  for (const auto& c : columns)
    d += c.is_categorical ? c.categories.size() : 1;
  return d;
}

std::vector<std::string> Encoder::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (c.is_categorical)
      for (const auto& cat : c.categories) names.push_back(c.name + "=" + cat);
    else
      names.push_back(c.name);
  }
  return names;
}

Encoder fit_encoder(const CsvTable& table, const CsvSchema& schema) {
  table.column(schema.response);  // must exist on the training table
  for (const auto& name : schema.categorical) table.column(name);

  Encoder enc;
  enc.fitted_rows = table.rows.size();
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    const std::string& name = table.header[j];
    if (name == schema.response || contains(schema.ignore, name)) continue;
    Encoder::Column col;
    col.name = name;
    if (contains(schema.categorical, name)) {
      col.is_categorical = true;
      std::set<std::string> cats;
      for (const auto& row : table.rows) cats.insert(row[j]);
      col.categories.assign(cats.begin(), cats.end());
    } else {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double v = parse_numeric(table.rows[r][j], name, r);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      col.min = lo;
      col.max = hi;
    }
    enc.columns.push_back(std::move(col));
  }
  return enc;
}

Dataset encode_table(const CsvTable& table, const CsvSchema& schema,
                     const Encoder& encoder, bool require_response) {
  const std::size_t n = table.rows.size();
  Dataset out;
  out.X = FeatureMatrix(n, encoder.encoded_dims());

  bool has_response = true;
  std::size_t y_col = 0;
  try {
    y_col = table.column(schema.response);
  } catch (const CsvError&) {
    if (require_response) throw;
    has_response = false;
  }
  if (has_response) {
    out.y.resize(n);
    for (std::size_t r = 0; r < n; ++r)
      out.y[r] = parse_numeric(table.rows[r][y_col], schema.response, r);
  } else {
    out.y.assign(n, 0.0);
  }

  std::size_t feat = 0;
  for (const auto& col : encoder.columns) {
    const std::size_t j = table.column(col.name);
    if (col.is_categorical) {
      for (std::size_t k = 0; k < col.categories.size(); ++k) {
        for (std::size_t r = 0; r < n; ++r)
          out.X(r, feat + k) = table.rows[r][j] == col.categories[k] ? 1.0 : 0.0;
      }
      feat += col.categories.size();
    } else {
      const double range = col.max - col.min;
      for (std::size_t r = 0; r < n; ++r) {
        const double v = parse_numeric(table.rows[r][j], col.name, r);
        double scaled = range > 0.0 ? (v - col.min) / range : 0.5;
        out.X(r, feat) = std::clamp(scaled, 0.0, 1.0);
      }
      ++feat;
    }
  }
  return out;
}

EncodedCsv load_csv(const std::string& path, const CsvSchema& schema) {
  const CsvTable table = read_csv_file(path);
  Encoder enc = fit_encoder(table, schema);
  Dataset data = encode_table(table, schema, enc, true);
  return {std::move(data), std::move(enc)};
}

}  // namespace tlrf
