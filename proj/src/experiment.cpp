#include "tlrf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tlrf/metrics.hpp"
#include "tlrf/parallel.hpp"
#include "tlrf/rng.hpp"

namespace tlrf {

namespace {

constexpr std::uint64_t kTestRowStream = 0x7e57;
constexpr std::uint64_t kTaskStream = 0x7a5c;
constexpr std::uint64_t kTrainRowStream = 1;
constexpr std::uint64_t kModelStreamBase = 100;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int resolve_cart_depth(int configured, std::size_t n_boot) {
  if (configured > 0) return configured;
  if (configured < 0) return -1;
  return static_cast<int>(
      std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(n_boot, 2)))));
}

std::size_t resolve_n_boot(std::size_t configured, double frac, std::size_t n) {
  if (configured > 0) return configured;
  if (frac > 0.0)
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(frac * static_cast<double>(n)));
  return n;
}

std::vector<int> to_labels(std::span<const double> y) {
  std::vector<int> labels(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument("one_minus_auc: responses must be 0/1");
    labels[i] = v == 1.0 ? 1 : 0;
  }
  return labels;
}

/// The data a single (sweep value, replicate) task trains and scores on.
struct TaskData {
  Dataset source;
  Dataset target;
  FeatureMatrix test_X;
  std::vector<double> test_truth;  // noiseless f_t (sim) or observed y (csv)
};

struct CsvContext {
  Dataset source;
  Dataset target_all;
};

ModelParams params_for(const ExperimentSpec& spec, double sweep_value) {
  ModelParams p = spec.model;
  if (spec.sweep == SweepVar::Mtry) {
    const auto m = static_cast<std::size_t>(sweep_value);
    p.source_mtry = m;
    p.residual_mtry = m;
    p.target_mtry = m;
  }
  return p;
}

TaskData make_sim_task(const ExperimentSpec& spec, const SimDataSpec& sim,
                       double sweep_value, std::uint64_t task_seed) {
  SimConfig cfg = sim.base;
  cfg.seed = task_seed;
  switch (spec.sweep) {
    case SweepVar::Discrepancy: cfg.discrepancy = sweep_value; break;
    case SweepVar::TargetSize:
    case SweepVar::TargetTrainSize:
      cfg.n_target = static_cast<std::size_t>(sweep_value);
      break;
    case SweepVar::Mtry: break;
  }
  TaskData task;
  task.source = gen_dataset(cfg, Domain::Source);
  task.target = gen_dataset(cfg, Domain::Target);
  Dataset test = gen_dataset(cfg, Domain::Test);
  task.test_truth.resize(test.size());
  std::vector<double> row(cfg.d);
  for (std::size_t i = 0; i < test.size(); ++i) {
    test.X.row(i, row);
    task.test_truth[i] = f_target(row, cfg.d0());
  }
  task.test_X = std::move(test.X);
  return task;
}

TaskData make_csv_task(const ExperimentSpec& spec, const CsvDataSpec& csv,
                       const CsvContext& ctx, double sweep_value,
                       std::size_t rep, std::uint64_t task_seed) {
  const std::size_t n_all = ctx.target_all.size();
  std::size_t n_test = csv.n_test;
  if (n_test == 0)
    n_test = static_cast<std::size_t>(csv.test_frac * static_cast<double>(n_all));
  if (n_test == 0 || n_test >= n_all)
    throw std::invalid_argument("experiment: test split leaves no training rows");

  // Test rows depend on the replicate only, so sweeping the training size
  // scores every value against the same held-out set.
  std::vector<std::size_t> perm(n_all);
  std::iota(perm.begin(), perm.end(), 0);
  Rng test_rng(derive_stream(derive_stream(spec.seed, kTestRowStream), rep));
  test_rng.shuffle(perm);
  std::vector<std::size_t> test_idx(perm.begin(),
                                    perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> pool(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                                perm.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(pool.begin(), pool.end());

  std::size_t n_train = pool.size();
  if (spec.sweep == SweepVar::TargetTrainSize || spec.sweep == SweepVar::TargetSize) {
    n_train = static_cast<std::size_t>(sweep_value);
    if (n_train > pool.size())
      throw std::invalid_argument("experiment: training size exceeds available rows");
    Rng train_rng(derive_stream(task_seed, kTrainRowStream));
    train_rng.shuffle(pool);
    pool.resize(n_train);
    std::sort(pool.begin(), pool.end());
  }

  TaskData task;
  task.source = ctx.source;
  task.target = ctx.target_all.subset(pool);
  Dataset test = ctx.target_all.subset(test_idx);
  task.test_truth = test.y;
  task.test_X = std::move(test.X);
  return task;
}

double score(const ExperimentSpec& spec, std::span<const double> preds,
             std::span<const double> truth) {
  if (spec.metric == MetricKind::MSE) return mse(preds, truth);
  const auto labels = to_labels(truth);
  return 1.0 - auc(preds, labels);
}

double eval_method(const ExperimentSpec& spec, Method method,
                   const ModelParams& p, const TaskData& task,
                   std::uint64_t model_seed) {
  const std::size_t d = task.target.dims();
  std::vector<double> preds;

  switch (method) {
    case Method::CRF: {
      FeatureWeights w = FeatureWeights::uniform(d);
      if (p.single_weights == WeightScheme::DCov)
        w = feature_weights(dcov_per_feature(task.target.X, task.target.y, p.estimator));
      int depth = p.target_depth;
      if (depth <= 0)
        depth = cv_select_depth(task.target, w, p.trees, p.cv_folds,
                                derive_stream(model_seed, 11), 1);
      CenteredForestConfig cfg{depth, p.trees, derive_stream(model_seed, 12), 1};
      preds = CenteredForest::fit(task.target, w, cfg).predict_batch(task.test_X, 1);
      break;
    }
    case Method::SRF: {
      FeatureWeights w = FeatureWeights::uniform(d);
      if (p.single_weights == WeightScheme::DCov)
        w = feature_weights(dcov_per_feature(task.target.X, task.target.y, p.estimator));
      CartConfig cfg;
      cfg.trees = p.trees;
      cfg.mtry = p.target_mtry;
      cfg.n_boot = resolve_n_boot(p.target_n_boot, p.boot_frac, task.target.size());
      cfg.max_depth = resolve_cart_depth(p.target_max_depth, cfg.n_boot);
      cfg.seed = derive_stream(model_seed, 13);
      cfg.workers = 1;
      preds = CartForest::fit(task.target, w, cfg).predict_batch(task.test_X, 1);
      break;
    }
    case Method::TLCRF:
    case Method::TLSRF: {
      TransferConfig cfg;
      cfg.trees = p.trees;
      cfg.source_depth = p.source_depth;
      cfg.residual_depth = p.residual_depth;
      cfg.source_mtry = p.source_mtry;
      cfg.residual_mtry = p.residual_mtry;
      cfg.source_n_boot =
          resolve_n_boot(p.source_n_boot, p.boot_frac, task.source.size());
      cfg.residual_n_boot = resolve_n_boot(p.residual_n_boot, p.boot_frac,
                                           (task.target.size() + 1) / 2);
      cfg.source_max_depth = p.source_max_depth;
      cfg.residual_max_depth = p.residual_max_depth;
      cfg.cv_folds = p.cv_folds;
      cfg.estimator = p.estimator;
      cfg.seed = derive_stream(model_seed, 14);
      cfg.workers = 1;
      const TransferModel model = method == Method::TLCRF
                                      ? fit_tlcrf(task.source, task.target, cfg)
                                      : fit_tlsrf(task.source, task.target, cfg);
      preds = model.predict_batch(task.test_X, 1);
      break;
    }
    case Method::SourceOnly: {
      const FeatureWeights w = FeatureWeights::uniform(d);
      if (p.source_only_kind == ForestKind::Centered) {
        int depth = p.source_depth;
        if (depth <= 0)
          depth = cv_select_depth(task.source, w, p.trees, p.cv_folds,
                                  derive_stream(model_seed, 15), 1);
        CenteredForestConfig cfg{depth, p.trees, derive_stream(model_seed, 16), 1};
        preds = CenteredForest::fit(task.source, w, cfg).predict_batch(task.test_X, 1);
      } else {
        CartConfig cfg;
        cfg.trees = p.trees;
        cfg.mtry = p.source_mtry;
        cfg.n_boot = resolve_n_boot(p.source_n_boot, p.boot_frac, task.source.size());
        cfg.max_depth = resolve_cart_depth(p.source_max_depth, cfg.n_boot);
        cfg.seed = derive_stream(model_seed, 17);
        cfg.workers = 1;
        preds = CartForest::fit(task.source, w, cfg).predict_batch(task.test_X, 1);
      }
      break;
    }
  }
  return score(spec, preds, task.test_truth);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::CRF: return "CRF";
    case Method::SRF: return "SRF";
    case Method::TLCRF: return "TLCRF";
    case Method::TLSRF: return "TLSRF";
    case Method::SourceOnly: return "SourceOnly";
  }
  return "?";
}

std::string metric_name(MetricKind m) {
  return m == MetricKind::MSE ? "mse" : "one_minus_auc";
}

std::string sweep_name(SweepVar v) {
  switch (v) {
    case SweepVar::Discrepancy: return "r";
    case SweepVar::TargetSize: return "n_t";
    case SweepVar::Mtry: return "mtry";
    case SweepVar::TargetTrainSize: return "target_train_size";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (methods.empty()) throw std::invalid_argument("experiment: no methods");
  if (sweep_values.empty())
    throw std::invalid_argument("experiment: sweep values must be non-empty");
  if (replications == 0)
    throw std::invalid_argument("experiment: replications must be >= 1");
  if (std::holds_alternative<CsvDataSpec>(data) && sweep == SweepVar::Discrepancy)
    throw std::invalid_argument("experiment: discrepancy sweep needs simulated data");
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();

  CsvContext csv_ctx;
  if (const auto* csv = std::get_if<CsvDataSpec>(&spec.data)) {
    // encoder statistics come from the source corpus and are reused on every
    // target/test row
    EncodedCsv src = load_csv(csv->source_csv, csv->schema);
    const CsvTable tgt_table = read_csv_file(csv->target_csv);
    csv_ctx.target_all = encode_table(tgt_table, csv->schema, src.encoder, true);
    csv_ctx.source = std::move(src.data);
  }

  const std::size_t n_tasks = spec.sweep_values.size() * spec.replications;
  std::vector<std::vector<ResultRow>> per_task(n_tasks);

  parallel_for(n_tasks, spec.workers, [&](std::size_t t) {
    const std::size_t sv_idx = t / spec.replications;
    const std::size_t rep = t % spec.replications;
    const double sweep_value = spec.sweep_values[sv_idx];
    const std::uint64_t task_seed =
        derive_stream(derive_stream(spec.seed, kTaskStream + sv_idx), rep);

    try {
      const ModelParams params = params_for(spec, sweep_value);
      const TaskData task =
          std::holds_alternative<SimDataSpec>(spec.data)
              ? make_sim_task(spec, std::get<SimDataSpec>(spec.data), sweep_value,
                              task_seed)
              : make_csv_task(spec, std::get<CsvDataSpec>(spec.data), csv_ctx,
                              sweep_value, rep, task_seed);

      auto& rows = per_task[t];
      rows.reserve(spec.methods.size());
      for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        const auto t0 = std::chrono::steady_clock::now();
        const double value =
            eval_method(spec, spec.methods[mi], params, task,
                        derive_stream(task_seed, kModelStreamBase + mi));
        const auto t1 = std::chrono::steady_clock::now();
        ResultRow row;
        row.method = spec.methods[mi];
        row.sweep = spec.sweep;
        row.sweep_value = sweep_value;
        row.replicate = rep;
        row.seed = task_seed;
        row.metric = spec.metric;
        row.metric_value = value;
        row.wall_ms =
            spec.timing
                ? std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
                : 0;
        rows.push_back(row);
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "experiment task (sweep " << sweep_name(spec.sweep) << "="
          << format_double(sweep_value) << ", replicate " << rep
          << ") failed: " << e.what();
      throw std::runtime_error(msg.str());
    }
  });

  std::vector<ResultRow> rows;
  rows.reserve(n_tasks * spec.methods.size());
  for (auto& task_rows : per_task)
    for (auto& r : task_rows) rows.push_back(r);
  return rows;
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "method,sweep_name,sweep_value,replicate,seed,metric_name,metric_value,wall_ms\n";
  for (const auto& r : rows) {
    out << method_name(r.method) << ',' << sweep_name(r.sweep) << ','
        << format_double(r.sweep_value) << ',' << r.replicate << ',' << r.seed
        << ',' << metric_name(r.metric) << ',' << format_double(r.metric_value)
        << ',' << r.wall_ms << '\n';
  }
}

std::string results_csv_string(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_results_csv(rows, out);
  return out.str();
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;

  const auto parse_method = [](const std::string& s) {
    if (s == "CRF") return Method::CRF;
    if (s == "SRF") return Method::SRF;
    if (s == "TLCRF") return Method::TLCRF;
    if (s == "TLSRF") return Method::TLSRF;
    if (s == "SourceOnly") return Method::SourceOnly;
    throw std::invalid_argument("unknown method '" + s + "'");
  };
  if (j.contains("methods"))
    for (const auto& m : j.at("methods"))
      spec.methods.push_back(parse_method(m.get<std::string>()));
  else if (j.contains("method"))
    spec.methods.push_back(parse_method(j.at("method").get<std::string>()));

  const auto& data = j.at("data");
  const std::string kind = data.value("kind", std::string("sim"));
  if (kind == "sim") {
    SimDataSpec sim;
    sim.base.n_source = data.value("n_source", std::size_t{1000});
    sim.base.n_target = data.value("n_target", std::size_t{400});
    sim.base.n_test = data.value("n_test", std::size_t{100});
    sim.base.d = data.value("d", std::size_t{20});
    sim.base.discrepancy = data.value("r", 0.1);
    sim.base.noise_sd = data.value("noise_sd", 1.0);
    spec.data = sim;
  } else if (kind == "csv") {
    CsvDataSpec csv;
    csv.source_csv = data.at("source_csv").get<std::string>();
    csv.target_csv = data.at("target_csv").get<std::string>();
    if (data.contains("schema")) csv.schema = schema_from_json(data.at("schema"));
    csv.n_test = data.value("n_test", std::size_t{0});
    csv.test_frac = data.value("test_frac", 0.3);
    spec.data = csv;
  } else {
    throw std::invalid_argument("data.kind must be 'sim' or 'csv'");
  }

  const auto& sweep = j.at("sweep");
  const std::string sname = sweep.at("name").get<std::string>();
  if (sname == "r") spec.sweep = SweepVar::Discrepancy;
  else if (sname == "n_t") spec.sweep = SweepVar::TargetSize;
  else if (sname == "mtry") spec.sweep = SweepVar::Mtry;
  else if (sname == "target_train_size") spec.sweep = SweepVar::TargetTrainSize;
  else throw std::invalid_argument("unknown sweep '" + sname + "'");
  sweep.at("values").get_to(spec.sweep_values);

  spec.replications = j.value("replications", std::size_t{1});
  const std::string metric = j.value("metric", std::string("mse"));
  if (metric == "mse") spec.metric = MetricKind::MSE;
  else if (metric == "one_minus_auc") spec.metric = MetricKind::OneMinusAUC;
  else throw std::invalid_argument("unknown metric '" + metric + "'");
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.timing = j.value("timing", false);
  spec.workers = j.value("workers", 0u);

  if (j.contains("model")) {
    const auto& m = j.at("model");
    auto& p = spec.model;
    p.trees = m.value("trees", p.trees);
    p.source_depth = m.value("source_depth", p.source_depth);
    p.residual_depth = m.value("residual_depth", p.residual_depth);
    p.target_depth = m.value("target_depth", p.target_depth);
    p.source_mtry = m.value("source_mtry", p.source_mtry);
    p.residual_mtry = m.value("residual_mtry", p.residual_mtry);
    p.target_mtry = m.value("target_mtry", p.target_mtry);
    p.source_n_boot = m.value("source_n_boot", p.source_n_boot);
    p.residual_n_boot = m.value("residual_n_boot", p.residual_n_boot);
    p.target_n_boot = m.value("target_n_boot", p.target_n_boot);
    p.boot_frac = m.value("boot_frac", p.boot_frac);
    p.source_max_depth = m.value("source_max_depth", p.source_max_depth);
    p.residual_max_depth = m.value("residual_max_depth", p.residual_max_depth);
    p.target_max_depth = m.value("target_max_depth", p.target_max_depth);
    p.cv_folds = m.value("cv_folds", p.cv_folds);
    const std::string est = m.value("estimator", std::string("fastu"));
    if (est == "fastu") p.estimator = DCovKind::FastU;
    else if (est == "u") p.estimator = DCovKind::U;
    else if (est == "v") p.estimator = DCovKind::V;
    else throw std::invalid_argument("unknown estimator '" + est + "'");
    const std::string w = m.value("weights", std::string("uniform"));
    if (w == "uniform") p.single_weights = WeightScheme::Uniform;
    else if (w == "dcov") p.single_weights = WeightScheme::DCov;
    else throw std::invalid_argument("unknown weights scheme '" + w + "'");
    const std::string sk = m.value("source_only_kind", std::string("crf"));
    if (sk == "crf") p.source_only_kind = ForestKind::Centered;
    else if (sk == "srf") p.source_only_kind = ForestKind::Cart;
    else throw std::invalid_argument("unknown source_only_kind '" + sk + "'");
  }

  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
  return experiment_spec_from_json(nlohmann::json::parse(in));
}

}  // namespace tlrf
