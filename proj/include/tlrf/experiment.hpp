#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "tlrf/csv.hpp"
#include "tlrf/simgen.hpp"
#include "tlrf/transfer.hpp"

#include "json.hpp"

namespace tlrf {

enum class Method { CRF, SRF, TLCRF, TLSRF, SourceOnly };
enum class MetricKind { MSE, OneMinusAUC };
enum class SweepVar { Discrepancy, TargetSize, Mtry, TargetTrainSize };

std::string method_name(Method m);
std::string metric_name(MetricKind m);
std::string sweep_name(SweepVar v);

/// Model hyperparameters shared by all methods in a run. Zeros mean "use
/// the default resolution": CV for centered depths, floor(sqrt(d)) for
/// mtry, the training size for n_boot, ceil(log2(n_boot)) for cart depth.
struct ModelParams {
  std::size_t trees = 100;
  int source_depth = 0;
  int residual_depth = 0;
  int target_depth = 0;
  std::size_t source_mtry = 0;
  std::size_t residual_mtry = 0;
  std::size_t target_mtry = 0;
  std::size_t source_n_boot = 0;
  std::size_t residual_n_boot = 0;
  std::size_t target_n_boot = 0;
  double boot_frac = 0.0;  // >0: n_boot defaults to frac * training size
  int source_max_depth = 0;
  int residual_max_depth = 0;
  int target_max_depth = 0;
  int cv_folds = 5;
  DCovKind estimator = DCovKind::FastU;
  WeightScheme single_weights = WeightScheme::Uniform;  // CRF/SRF methods
  ForestKind source_only_kind = ForestKind::Centered;
};

struct SimDataSpec {
  SimConfig base;
};

struct CsvDataSpec {
  std::string source_csv;
  std::string target_csv;
  CsvSchema schema;
  std::size_t n_test = 0;   // 0 -> use test_frac
  double test_frac = 0.3;
};

struct ExperimentSpec {
  std::vector<Method> methods;
  std::variant<SimDataSpec, CsvDataSpec> data;
  SweepVar sweep = SweepVar::Discrepancy;
  std::vector<double> sweep_values;
  std::size_t replications = 1;
  MetricKind metric = MetricKind::MSE;
  std::uint64_t seed = 0;
  bool timing = false;  // wall_ms stays 0 when off, keeping reruns byte-identical
  unsigned workers = 0;
  ModelParams model;

  void validate() const;
};

struct ResultRow {
  Method method;
  SweepVar sweep;
  double sweep_value = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  MetricKind metric = MetricKind::MSE;
  double metric_value = 0.0;
  std::int64_t wall_ms = 0;
};

/// Runs |sweep values| x replications tasks, each fitting every method on
/// the same generated (or subsampled) data. Rows come back ordered by
/// (sweep value, replicate, method) no matter how many workers ran.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// Fixed schema: method,sweep_name,sweep_value,replicate,seed,metric_name,
/// metric_value,wall_ms.
void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);
std::string results_csv_string(const std::vector<ResultRow>& rows);

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::string& path);

}  // namespace tlrf
