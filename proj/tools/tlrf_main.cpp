#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tlrf/csv.hpp"
#include "tlrf/dcov.hpp"
#include "tlrf/experiment.hpp"
#include "tlrf/model_io.hpp"
#include "tlrf/simgen.hpp"
#include "tlrf/transfer.hpp"

namespace {

using tlrf::CsvSchema;
using tlrf::Dataset;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (std::size_t j = 0; j < data.dims(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dims(); ++j) out << fmt(data.X(i, j)) << ',';
    out << fmt(data.y[i]) << '\n';
  }
}

CsvSchema schema_from_file(const std::string& path) {
  if (path.empty()) return CsvSchema{};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file '" + path + "'");
  return tlrf::schema_from_json(nlohmann::json::parse(in));
}

tlrf::DCovKind parse_estimator(const std::string& s) {
  if (s == "fastu") return tlrf::DCovKind::FastU;
  if (s == "u") return tlrf::DCovKind::U;
  if (s == "v") return tlrf::DCovKind::V;
  throw std::runtime_error("unknown estimator '" + s + "' (use fastu|u|v)");
}

struct TrainOptions {
  std::string method;
  std::string data_path;
  std::string source_path;
  std::string schema_path;
  std::string output = "model.json";
  std::string estimator = "fastu";
  std::string weights = "uniform";
  std::size_t trees = 100;
  int depth = 0;
  int source_depth = 0;
  std::size_t mtry = 0;
  std::size_t source_mtry = 0;
  std::size_t n_boot = 0;
  std::size_t source_n_boot = 0;
  int max_depth = 0;
  int source_max_depth = 0;
  int cv_folds = 5;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

int run_train(const TrainOptions& opt) {
  const CsvSchema schema = schema_from_file(opt.schema_path);
  tlrf::EncodedCsv data = tlrf::load_csv(opt.data_path, schema);
  const std::size_t d = data.data.dims();

  tlrf::ModelFile file;
  if (!opt.schema_path.empty()) {
    file.encoder = data.encoder;
    file.schema = schema;
  }

  const auto cart_depth = [](int configured, std::size_t n_boot) {
    if (configured > 0) return configured;
    if (configured < 0) return -1;
    return static_cast<int>(std::ceil(
        std::log2(static_cast<double>(std::max<std::size_t>(n_boot, 2)))));
  };

  if (opt.method == "crf" || opt.method == "srf") {
    tlrf::FeatureWeights w = tlrf::FeatureWeights::uniform(d);
    if (opt.weights == "dcov")
      w = tlrf::feature_weights(tlrf::dcov_per_feature(
          data.data.X, data.data.y, parse_estimator(opt.estimator)));
    else if (opt.weights != "uniform")
      throw std::runtime_error("unknown weights scheme '" + opt.weights + "'");

    if (opt.method == "crf") {
      int depth = opt.depth;
      if (depth <= 0)
        depth = tlrf::cv_select_depth(data.data, w, opt.trees, opt.cv_folds,
                                      tlrf::derive_stream(opt.seed, 11), opt.workers);
      tlrf::CenteredForestConfig cfg{depth, opt.trees, opt.seed, opt.workers};
      file.model = tlrf::to_json(tlrf::CenteredForest::fit(data.data, w, cfg));
    } else {
      tlrf::CartConfig cfg;
      cfg.trees = opt.trees;
      cfg.mtry = opt.mtry;
      cfg.n_boot = opt.n_boot == 0 ? data.data.size() : opt.n_boot;
      cfg.max_depth = cart_depth(opt.max_depth, cfg.n_boot);
      cfg.seed = opt.seed;
      cfg.workers = opt.workers;
      file.model = tlrf::to_json(tlrf::CartForest::fit(data.data, w, cfg));
    }
  } else if (opt.method == "tlcrf" || opt.method == "tlsrf") {
    if (opt.source_path.empty())
      throw std::runtime_error("transfer methods need --source-data");
    const tlrf::CsvTable src_table = tlrf::read_csv_file(opt.source_path);
    // scale every domain with the source-corpus statistics
    tlrf::Encoder enc = tlrf::fit_encoder(src_table, schema);
    const Dataset source = tlrf::encode_table(src_table, schema, enc, true);
    const tlrf::CsvTable tgt_table = tlrf::read_csv_file(opt.data_path);
    const Dataset target = tlrf::encode_table(tgt_table, schema, enc, true);
    if (!opt.schema_path.empty()) file.encoder = enc;

    tlrf::TransferConfig cfg;
    cfg.trees = opt.trees;
    cfg.source_depth = opt.source_depth;
    cfg.residual_depth = opt.depth;
    cfg.source_mtry = opt.source_mtry;
    cfg.residual_mtry = opt.mtry;
    cfg.source_n_boot = opt.source_n_boot == 0 ? source.size() : opt.source_n_boot;
    cfg.residual_n_boot = opt.n_boot;
    cfg.source_max_depth = opt.source_max_depth;
    cfg.residual_max_depth = opt.max_depth;
    cfg.cv_folds = opt.cv_folds;
    cfg.estimator = parse_estimator(opt.estimator);
    cfg.seed = opt.seed;
    cfg.workers = opt.workers;
    const tlrf::TransferModel model = opt.method == "tlcrf"
                                          ? tlrf::fit_tlcrf(source, target, cfg)
                                          : tlrf::fit_tlsrf(source, target, cfg);
    file.model = tlrf::to_json(model);
  } else {
    throw std::runtime_error("unknown method '" + opt.method +
                             "' (use crf|srf|tlcrf|tlsrf)");
  }

  tlrf::save_model_file(opt.output, file);
  std::cerr << "wrote " << opt.output << "\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& output) {
  const tlrf::ModelFile file = tlrf::load_model_file(model_path);
  const tlrf::CsvTable table = tlrf::read_csv_file(data_path);

  Dataset data;
  if (file.encoder) {
    const CsvSchema schema = file.schema ? *file.schema : CsvSchema{};
    data = tlrf::encode_table(table, schema, *file.encoder, false);
  } else {
    CsvSchema schema;
    tlrf::Encoder identity;
    for (const auto& name : table.header) {
      if (name == schema.response) continue;
      tlrf::Encoder::Column col;
      col.name = name;
      col.min = 0.0;
      col.max = 1.0;
      identity.columns.push_back(col);
    }
    data = tlrf::encode_table(table, schema, identity, false);
  }

  const std::string kind = file.model.at("kind").get<std::string>();
  std::vector<double> preds;
  if (kind == "centered")
    preds = tlrf::centered_forest_from_json(file.model).predict_batch(data.X);
  else if (kind == "cart")
    preds = tlrf::cart_forest_from_json(file.model).predict_batch(data.X);
  else if (kind == "transfer")
    preds = tlrf::transfer_model_from_json(file.model).predict_batch(data.X);
  else
    throw std::runtime_error("unknown model kind '" + kind + "'");

  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot write '" + output + "'");
  out << "prediction\n";
  for (double p : preds) out << fmt(p) << '\n';
  std::cerr << "wrote " << output << " (" << preds.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer learning for random forests with distance covariance weights"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate synthetic source/target/test CSVs");
  tlrf::SimConfig sim_cfg;
  sim_cfg.n_source = 1000;
  sim_cfg.n_target = 400;
  sim_cfg.n_test = 100;
  sim_cfg.d = 20;
  sim_cfg.discrepancy = 0.1;
  std::string sim_out = ".";
  sim->add_option("--n-source", sim_cfg.n_source, "source rows");
  sim->add_option("--n-target", sim_cfg.n_target, "target rows");
  sim->add_option("--n-test", sim_cfg.n_test, "test rows");
  sim->add_option("-d,--dims", sim_cfg.d, "feature count (even)");
  sim->add_option("-r,--discrepancy", sim_cfg.discrepancy, "discrepancy ratio in [0, 0.5]");
  sim->add_option("--noise-sd", sim_cfg.noise_sd, "noise standard deviation");
  sim->add_option("--seed", sim_cfg.seed, "RNG seed");
  sim->add_option("-o,--out-dir", sim_out, "output directory");

  // dcov
  auto* dcov = app.add_subcommand("dcov", "Per-feature distance covariance weights for a CSV");
  std::string dcov_data, dcov_schema, dcov_est = "fastu", dcov_out;
  dcov->add_option("--data", dcov_data, "input CSV")->required();
  dcov->add_option("--schema", dcov_schema, "schema JSON (default: all numeric, response 'y')");
  dcov->add_option("--estimator", dcov_est, "fastu|u|v");
  dcov->add_option("-o,--output", dcov_out, "output CSV (default stdout)");

  // train
  auto* train = app.add_subcommand("train", "Fit a model and write it to a model file");
  TrainOptions topt;
  train->add_option("--method", topt.method, "crf|srf|tlcrf|tlsrf")->required();
  train->add_option("--data", topt.data_path, "training CSV (target data for transfer)")->required();
  train->add_option("--source-data", topt.source_path, "source CSV (transfer methods)");
  train->add_option("--schema", topt.schema_path, "schema JSON");
  train->add_option("-o,--output", topt.output, "model file path");
  train->add_option("--trees", topt.trees, "trees per forest");
  train->add_option("--depth", topt.depth, "centered depth (0 = cross-validate)");
  train->add_option("--source-depth", topt.source_depth, "source centered depth");
  train->add_option("--mtry", topt.mtry, "cart features per split (0 = sqrt(d))");
  train->add_option("--source-mtry", topt.source_mtry, "source cart mtry");
  train->add_option("--n-boot", topt.n_boot, "cart bootstrap size (0 = n)");
  train->add_option("--source-n-boot", topt.source_n_boot, "source bootstrap size");
  train->add_option("--max-depth", topt.max_depth, "cart depth (0 = ceil(log2 n_boot), -1 = unlimited)");
  train->add_option("--source-max-depth", topt.source_max_depth, "source cart depth");
  train->add_option("--cv-folds", topt.cv_folds, "cross-validation folds");
  train->add_option("--estimator", topt.estimator, "fastu|u|v");
  train->add_option("--weights", topt.weights, "uniform|dcov (single-domain forests)");
  train->add_option("--seed", topt.seed, "RNG seed");
  train->add_option("--workers", topt.workers, "worker threads (0 = all cores)");

  // predict
  auto* predict = app.add_subcommand("predict", "Apply a model file to a CSV");
  std::string p_model, p_data, p_out = "predictions.csv";
  predict->add_option("--model", p_model, "model file")->required();
  predict->add_option("--data", p_data, "input CSV")->required();
  predict->add_option("-o,--output", p_out, "predictions CSV");

  // experiment
  auto* expt = app.add_subcommand("experiment", "Run a replicated experiment from a spec file");
  std::string e_spec, e_out = "results.csv";
  std::optional<unsigned> e_workers;
  std::optional<std::uint64_t> e_seed;
  expt->add_option("--spec", e_spec, "experiment spec JSON")->required();
  expt->add_option("-o,--output", e_out, "results CSV");
  expt->add_option("--workers", e_workers, "override spec worker count");
  expt->add_option("--seed", e_seed, "override spec seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      sim_cfg.validate();
      write_dataset_csv(tlrf::gen_dataset(sim_cfg, tlrf::Domain::Source),
                        sim_out + "/source.csv");
      write_dataset_csv(tlrf::gen_dataset(sim_cfg, tlrf::Domain::Target),
                        sim_out + "/target.csv");
      write_dataset_csv(tlrf::gen_dataset(sim_cfg, tlrf::Domain::Test),
                        sim_out + "/test.csv");
      std::cerr << "wrote " << sim_out << "/{source,target,test}.csv\n";
    } else if (dcov->parsed()) {
      const CsvSchema schema = schema_from_file(dcov_schema);
      tlrf::EncodedCsv data = tlrf::load_csv(dcov_data, schema);
      const auto estimates = tlrf::dcov_per_feature(data.data.X, data.data.y,
                                                    parse_estimator(dcov_est));
      const auto weights = tlrf::feature_weights(estimates);
      const auto names = data.encoder.feature_names();
      std::ostream* os = &std::cout;
      std::ofstream file;
      if (!dcov_out.empty()) {
        file.open(dcov_out);
        if (!file) throw std::runtime_error("cannot write '" + dcov_out + "'");
        os = &file;
      }
      (*os) << "feature,dcov,weight\n";
      for (std::size_t j = 0; j < estimates.size(); ++j)
        (*os) << names[j] << ',' << fmt(estimates[j].value) << ','
              << fmt(weights[j]) << '\n';
    } else if (train->parsed()) {
      return run_train(topt);
    } else if (predict->parsed()) {
      return run_predict(p_model, p_data, p_out);
    } else if (expt->parsed()) {
      tlrf::ExperimentSpec spec = tlrf::load_experiment_spec(e_spec);
      if (e_workers) spec.workers = *e_workers;
      if (e_seed) spec.seed = *e_seed;
      const auto rows = tlrf::run_experiment(spec);
      std::ofstream out(e_out);
      if (!out) throw std::runtime_error("cannot write '" + e_out + "'");
      tlrf::write_results_csv(rows, out);
      std::cerr << "wrote " << e_out << " (" << rows.size() << " rows)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
