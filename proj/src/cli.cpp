#include "cosso/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "CLI11.hpp"
#include "json.hpp"

#include "cosso/io.hpp"
#include "cosso/rng.hpp"
#include "cosso/sim.hpp"
#include "cosso/spectral.hpp"

namespace cosso {

namespace {

using json = nlohmann::ordered_json;

void emit_error(const std::string &type, const std::string &message) {
  const json j{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Mixed text/number tables (component labels, stage names) are written by
// hand; purely numeric ones go through write_csv.
void write_rows(const std::string &path,
                const std::vector<std::string> &header,
                const std::vector<std::vector<std::string>> &rows) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  for (size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  out << "\n";
  for (const auto &row : rows) {
    for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  if (!out) throw input_error("failed while writing '" + path + "'");
}

Criterion parse_criterion(const std::string &label) {
  if (label == "gcv") return Criterion::gcv();
  if (label.size() > 2 && label.compare(0, 2, "cv") == 0) {
    int k = 0;
    const auto res =
        std::from_chars(label.data() + 2, label.data() + label.size(), k);
    if (res.ec == std::errc{} && res.ptr == label.data() + label.size() &&
        k >= 2)
      return Criterion::kfold(k);
  }
  throw input_error("criterion must be gcv or cvK (e.g. cv5), got '" + label +
                    "'");
}

CovarianceSpec parse_covariance(const std::string &label) {
  if (label == "uniform") return CovarianceSpec::uniform();
  const auto colon = label.find(':');
  if (colon != std::string::npos) {
    const std::string head = label.substr(0, colon);
    const std::string tail = label.substr(colon + 1);
    try {
      if (head == "compound") return CovarianceSpec::compound(std::stod(tail));
      if (head == "ar1") return CovarianceSpec::ar1(std::stod(tail));
    } catch (const std::exception &) {
      // fall through to the error below
    }
  }
  throw input_error(
      "covariance must be uniform, compound:<t> or ar1:<rho>, got '" + label +
      "'");
}

AnovaDesign make_design(const std::string &order, int d) {
  if (order == "additive") return AnovaDesign::additive(d);
  if (order == "twoway") return AnovaDesign::twoway(d);
  throw input_error("design must be additive or twoway, got '" + order + "'");
}

TuneGrids fill_grids(std::vector<double> lambda0, std::vector<double> m,
                     int p) {
  TuneGrids g;
  g.lambda0 = lambda0.empty() ? default_lambda0_grid() : std::move(lambda0);
  g.m = m.empty() ? default_m_grid(p) : std::move(m);
  return g;
}

void warn_constant_columns(const LoadedCsv &loaded) {
  for (int j : loaded.constant_columns)
    std::cerr << "warning: column '" << loaded.covariate_names[j]
              << "' is constant; it scales to 0.5 and cannot be selected\n";
}

void note_written(const std::string &path) {
  std::cout << "wrote " << path << "\n";
}

// One row per component of the fitted model: identity, weight, magnitude.
void write_component_table(const std::string &path, const FitState &fit,
                           const GramSet &grams) {
  const VectorXd l1 = component_l1_norms(fit, grams);
  std::vector<std::vector<std::string>> rows;
  for (int a = 0; a < fit.design.p(); ++a) {
    const Component &comp = fit.design.component(a);
    rows.push_back({comp.label(), std::to_string(comp.j),
                    std::to_string(comp.k), fmt(fit.theta[a]), fmt(l1[a]),
                    fit.theta[a] > kThetaZeroTol ? "1" : "0"});
  }
  write_rows(path, {"component", "j", "k", "theta", "l1_norm", "selected"},
             rows);
}

// The norm-vs-budget path underlying the selection profile: one row per
// budget grid point, one column per component.
void write_norm_path(const std::string &path, const AnovaDesign &design,
                     const TuneReport &report) {
  std::vector<std::string> header{"M"};
  for (int a = 0; a < design.p(); ++a)
    header.push_back(design.component(a).label());
  MatrixXd values(report.m_grid.size(), design.p() + 1);
  for (size_t i = 0; i < report.m_grid.size(); ++i) {
    values(i, 0) = report.m_grid[i];
    values.row(i).tail(design.p()) = report.norm_trace.row(i);
  }
  write_csv(path, header, values);
}

void write_tune_table(const std::string &path, const TuneReport &report) {
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < report.lambda0_grid.size(); ++i)
    rows.push_back({"lambda0", fmt(report.lambda0_grid[i]),
                    fmt(report.lambda0_scores[i]),
                    report.lambda0_grid[i] == report.chosen_lambda0 ? "1"
                                                                    : "0"});
  for (size_t i = 0; i < report.m_grid.size(); ++i)
    rows.push_back({"M", fmt(report.m_grid[i]), fmt(report.m_scores[i]),
                    report.m_grid[i] == report.chosen_m ? "1" : "0"});
  write_rows(path, {"stage", "value", "score", "chosen"}, rows);
}

// Covariate columns pulled out of a prediction CSV by the archived names.
MatrixXd extract_columns(const CsvTable &table,
                         const std::vector<std::string> &names,
                         const std::string &path) {
  MatrixXd X(table.values.rows(), names.size());
  for (size_t k = 0; k < names.size(); ++k) {
    int col = -1;
    for (size_t c = 0; c < table.header.size(); ++c)
      if (table.header[c] == names[k]) col = static_cast<int>(c);
    if (col < 0)
      throw input_error("'" + path + "' is missing covariate column '" +
                        names[k] + "'");
    X.col(k) = table.values.col(col);
  }
  return X;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

struct FitOpts {
  std::string data, response, out;
  std::string design = "additive";
  std::string criterion = "cv5";
  std::vector<double> lambda0_grid, m_grid;
  std::uint64_t seed = 0;
};

int cmd_fit(const FitOpts &o) {
  const LoadedCsv loaded = load_csv(o.data, o.response);
  warn_constant_columns(loaded);
  const AnovaDesign design = make_design(o.design, loaded.data.d());
  const Criterion crit = parse_criterion(o.criterion);
  const TuneGrids grids = fill_grids(o.lambda0_grid, o.m_grid, design.p());

  auto [report, fit] =
      tune(loaded.data, design, crit, grids, derive_seed(o.seed, "cli-fit"));
  fit.scaling = loaded.scaling;

  ModelArchive archive;
  archive.fit = fit;
  archive.tuned = true;
  archive.tuning = report;
  archive.seed = o.seed;
  archive.covariate_names = loaded.covariate_names;
  archive.response_name = loaded.response_name;
  save_archive(o.out + ".model.json", archive);
  note_written(o.out + ".model.json");

  const GramSet grams(loaded.data.X, design);
  write_component_table(o.out + ".components.csv", fit, grams);
  note_written(o.out + ".components.csv");
  return 0;
}

struct PredictOpts {
  std::string model, data, out;
};

int cmd_predict(const PredictOpts &o) {
  const ModelArchive archive = load_archive(o.model);
  const CsvTable table = read_csv(o.data);
  const MatrixXd raw = extract_columns(table, archive.covariate_names, o.data);

  const VectorXd pred = predict(archive.fit, raw);
  if (archive.logistic) {
    LogisticFit lf{archive.fit, archive.deviance_trace,
                   archive.irls_iterations, archive.separation_warning};
    const VectorXd prob = predict_probability(lf, raw);
    MatrixXd outv(pred.size(), 2);
    outv.col(0) = pred;
    outv.col(1) = prob;
    write_csv(o.out + ".predictions.csv", {"prediction", "probability"}, outv);
  } else {
    write_csv(o.out + ".predictions.csv", {"prediction"}, pred);
  }
  note_written(o.out + ".predictions.csv");
  return 0;
}

struct ClassifyOpts {
  std::string data, response, out;
  std::string design = "additive";
  std::string criterion = "cv5";
  std::string loss = "mis";
  std::vector<double> lambda0_grid, m_grid;
  std::uint64_t seed = 0;
};

int cmd_classify(const ClassifyOpts &o) {
  const LoadedCsv loaded = load_csv(o.data, o.response, /*labels01=*/true);
  warn_constant_columns(loaded);
  const AnovaDesign design = make_design(o.design, loaded.data.d());
  const Criterion crit = parse_criterion(o.criterion);
  if (crit.kind != Criterion::KFold)
    throw input_error("classification tunes by cross-validation; use cvK");
  ClassLoss loss;
  if (o.loss == "mis")
    loss = ClassLoss::Misclassification;
  else if (o.loss == "deviance")
    loss = ClassLoss::Deviance;
  else
    throw input_error("loss must be mis or deviance, got '" + o.loss + "'");
  const TuneGrids grids = fill_grids(o.lambda0_grid, o.m_grid, design.p());

  auto [report, model] = tune_logistic(loaded.data, design, crit.k, loss,
                                       grids,
                                       derive_seed(o.seed, "cli-classify"));
  model.fit.scaling = loaded.scaling;
  if (model.separation_warning)
    std::cerr << "warning: classes look separable; logits ran into the "
                 "stabilizing guards\n";

  ModelArchive archive;
  archive.logistic = true;
  archive.fit = model.fit;
  archive.deviance_trace = model.deviance_trace;
  archive.separation_warning = model.separation_warning;
  archive.irls_iterations = model.iterations;
  archive.tuned = true;
  archive.tuning = report;
  archive.seed = o.seed;
  archive.covariate_names = loaded.covariate_names;
  archive.response_name = loaded.response_name;
  save_archive(o.out + ".model.json", archive);
  note_written(o.out + ".model.json");

  const GramSet grams(loaded.data.X, design);
  write_component_table(o.out + ".components.csv", model.fit, grams);
  note_written(o.out + ".components.csv");
  return 0;
}

struct SimulateOpts {
  std::string example = "1";
  std::string covariance = "uniform";
  int n = 100;
  int replicates = 20;
  std::string criterion = "cv5";
  double noise_sd = -1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateOpts &o) {
  ExperimentSpec spec;
  spec.example = parse_example(o.example);
  spec.covariance = parse_covariance(o.covariance);
  spec.n = o.n;
  spec.replicates = o.replicates;
  spec.criterion = parse_criterion(o.criterion);
  spec.noise_sd = o.noise_sd;
  spec.seed = derive_seed(o.seed, "cli-simulate");

  const RunReport report = run_experiment(spec);
  for (const auto &w : report.warnings) std::cerr << "warning: " << w << "\n";

  const int d = example_dimension(spec.example);
  std::vector<std::string> header{"replicate", "ise", "model_size"};
  for (int j = 1; j <= d; ++j) header.push_back("x" + std::to_string(j));
  MatrixXd values(report.ise.size(), 3 + d);
  for (size_t i = 0; i < report.ise.size(); ++i) {
    values(i, 0) = report.replicate[i];
    values(i, 1) = report.ise[i];
    values(i, 2) = report.model_size[i];
    for (int j = 0; j < d; ++j)
      values(i, 3 + j) = report.selected[i][j] ? 1.0 : 0.0;
  }
  write_csv(o.out + ".report.csv", header, values);
  note_written(o.out + ".report.csv");

  json j;
  j["spec"] = {{"example", example_label(spec.example)},
               {"covariance", spec.covariance.label()},
               {"n", spec.n},
               {"replicates", spec.replicates},
               {"criterion", spec.criterion.label()},
               {"seed", o.seed},
               {"noise_sd",
                spec.noise_sd >= 0 ? spec.noise_sd
                                   : example_noise_sd(spec.example)}};
  j["ise"] = report.ise;
  j["model_size"] = report.model_size;
  j["selected"] = report.selected;
  j["mean_ise"] = report.mean_ise;
  j["se_ise"] = report.se_ise;
  j["mean_size"] = report.mean_size;
  j["se_size"] = report.se_size;
  j["sd_size"] = report.sd_size;
  j["variable_frequency"] = report.variable_frequency;
  j["failed"] = report.failed;
  j["warnings"] = report.warnings;
  std::ofstream jf(o.out + ".report.json");
  if (!jf) throw input_error("cannot write '" + o.out + ".report.json'");
  jf << j.dump(2) << "\n";
  note_written(o.out + ".report.json");
  return 0;
}

struct SpectralOpts {
  std::string data, out;
  std::string response = "y";
  int m = 0;
  double lambda = 0.0;
  bool experiment = false;
  double sigma = 1.0;
  int replicates = 200;
  std::uint64_t seed = 0;
};

json encode_theta(double th) {
  return std::isinf(th) ? json("inf") : json(th);
}

int cmd_spectral(const SpectralOpts &o) {
  if (o.experiment) {
    // The data file holds the m x m coefficient table of the truth.
    const CsvTable table = read_csv(o.data);
    const ConsistencyReport rep = selection_consistency_experiment(
        table.values, o.sigma, o.lambda, o.replicates,
        derive_seed(o.seed, "cli-spectral"));
    json j;
    j["m"] = table.values.rows();
    j["lambda"] = o.lambda;
    j["sigma"] = o.sigma;
    j["replicates"] = o.replicates;
    j["truth"] = {rep.truth[0], rep.truth[1], rep.truth[2]};
    j["frequency"] = {rep.frequency[0], rep.frequency[1], rep.frequency[2]};
    std::ofstream jf(o.out + ".spectral.json");
    if (!jf) throw input_error("cannot write '" + o.out + ".spectral.json'");
    jf << j.dump(2) << "\n";
    note_written(o.out + ".spectral.json");
    return 0;
  }

  const CsvTable table = read_csv(o.data);
  int col = -1;
  for (size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == o.response) col = static_cast<int>(c);
  if (col < 0)
    throw input_error("response column '" + o.response + "' not found in '" +
                      o.data + "'");
  const VectorXd y = table.values.col(col);

  const SpectralFit fit = spectral_oracle_fit(y, o.m, o.lambda);
  json j;
  j["m"] = o.m;
  j["lambda"] = o.lambda;
  j["b"] = fit.b;
  j["theta"] = {encode_theta(fit.theta[0]), encode_theta(fit.theta[1]),
                encode_theta(fit.theta[2])};
  const auto sel = fit.selected();
  j["selected"] = {sel[0], sel[1], sel[2]};
  j["u"] = {u_statistic(fit.coeffs, Block::Main1),
            u_statistic(fit.coeffs, Block::Main2),
            u_statistic(fit.coeffs, Block::Interaction)};
  std::ofstream jf(o.out + ".spectral.json");
  if (!jf) throw input_error("cannot write '" + o.out + ".spectral.json'");
  jf << j.dump(2) << "\n";
  note_written(o.out + ".spectral.json");

  const FourierGrid grid(o.m);
  MatrixXd values(grid.n(), 3);
  values.leftCols(2) = grid.points();
  values.col(2) = fit.fitted;
  write_csv(o.out + ".fitted.csv", {"x1", "x2", "fitted"}, values);
  note_written(o.out + ".fitted.csv");
  return 0;
}

struct TuneOpts {
  std::string data, response, out;
  std::string design = "additive";
  std::string criterion = "cv5";
  std::vector<double> lambda0_grid, m_grid;
  std::uint64_t seed = 0;
};

int cmd_tune(const TuneOpts &o) {
  const LoadedCsv loaded = load_csv(o.data, o.response);
  warn_constant_columns(loaded);
  const AnovaDesign design = make_design(o.design, loaded.data.d());
  const Criterion crit = parse_criterion(o.criterion);
  const TuneGrids grids = fill_grids(o.lambda0_grid, o.m_grid, design.p());

  const auto [report, fit] =
      tune(loaded.data, design, crit, grids, derive_seed(o.seed, "cli-tune"));
  (void)fit;

  write_tune_table(o.out + ".tune.csv", report);
  note_written(o.out + ".tune.csv");
  write_norm_path(o.out + ".norms_vs_m.csv", design, report);
  note_written(o.out + ".norms_vs_m.csv");
  return 0;
}

int dispatch(int argc, const char *const argv[]) {
  CLI::App app{"component-selecting smoothing-spline models"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI key=value file with [subcommand] sections; explicit "
                 "flags win");

  FitOpts fo;
  auto *fit = app.add_subcommand("fit", "tune and fit a regression model");
  fit->add_option("--data", fo.data, "training CSV")->required();
  fit->add_option("--response", fo.response, "response column name")
      ->required();
  fit->add_option("--design", fo.design, "additive|twoway");
  fit->add_option("--criterion", fo.criterion, "gcv|cv5|cv10");
  fit->add_option("--lambda0-grid", fo.lambda0_grid, "smoothing grid")
      ->delimiter(',');
  fit->add_option("--M-grid", fo.m_grid, "budget grid")->delimiter(',');
  fit->add_option("--seed", fo.seed, "root seed");
  fit->add_option("--out", fo.out, "output path prefix")->required();

  PredictOpts po;
  auto *pred = app.add_subcommand("predict", "apply an archived model");
  pred->add_option("--model", po.model, "model archive JSON")->required();
  pred->add_option("--data", po.data, "CSV with the model's covariates")
      ->required();
  pred->add_option("--out", po.out, "output path prefix")->required();

  ClassifyOpts co;
  auto *cls = app.add_subcommand("classify", "tune and fit a 0/1 classifier");
  cls->add_option("--data", co.data, "training CSV")->required();
  cls->add_option("--response", co.response, "0/1 label column")->required();
  cls->add_option("--design", co.design, "additive|twoway");
  cls->add_option("--criterion", co.criterion, "cvK, e.g. cv5");
  cls->add_option("--loss", co.loss, "mis|deviance");
  cls->add_option("--lambda0-grid", co.lambda0_grid, "smoothing grid")
      ->delimiter(',');
  cls->add_option("--M-grid", co.m_grid, "budget grid")->delimiter(',');
  cls->add_option("--seed", co.seed, "root seed");
  cls->add_option("--out", co.out, "output path prefix")->required();

  SimulateOpts so;
  auto *sim = app.add_subcommand("simulate", "run a synthetic benchmark");
  sim->add_option("--example", so.example, "1|2|3|4-Z|4-phi");
  sim->add_option("--covariance", so.covariance,
                  "uniform|compound:<t>|ar1:<rho>");
  sim->add_option("--n", so.n, "sample size per replicate");
  sim->add_option("--replicates", so.replicates, "replicate count");
  sim->add_option("--criterion", so.criterion, "gcv|cv5|cv10");
  sim->add_option("--noise-sd", so.noise_sd,
                  "noise sd override (< 0 keeps the example default)");
  sim->add_option("--seed", so.seed, "root seed");
  sim->add_option("--out", so.out, "output path prefix")->required();

  SpectralOpts spo;
  auto *spe = app.add_subcommand(
      "spectral", "closed-form estimator on a square tensor grid");
  spe->add_option("--data", spo.data,
                  "responses CSV (or truth table with --experiment)")
      ->required();
  spe->add_option("--response", spo.response, "response column name");
  spe->add_option("--m", spo.m, "per-axis grid count (even, >= 4)")
      ->required();
  spe->add_option("--lambda", spo.lambda, "selection penalty")->required();
  spe->add_flag("--experiment", spo.experiment,
                "replicate selection frequencies under added noise");
  spe->add_option("--sigma", spo.sigma, "noise sd (experiment mode)");
  spe->add_option("--replicates", spo.replicates, "experiment replicates");
  spe->add_option("--seed", spo.seed, "root seed");
  spe->add_option("--out", spo.out, "output path prefix")->required();

  TuneOpts to;
  auto *tun = app.add_subcommand("tune", "score the tuning grids only");
  tun->add_option("--data", to.data, "training CSV")->required();
  tun->add_option("--response", to.response, "response column name")
      ->required();
  tun->add_option("--design", to.design, "additive|twoway");
  tun->add_option("--criterion", to.criterion, "gcv|cv5|cv10");
  tun->add_option("--lambda0-grid", to.lambda0_grid, "smoothing grid")
      ->delimiter(',');
  tun->add_option("--M-grid", to.m_grid, "budget grid")->delimiter(',');
  tun->add_option("--seed", to.seed, "root seed");
  tun->add_option("--out", to.out, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    emit_error("input_error", e.what());
    return 1;
  }

  if (fit->parsed()) return cmd_fit(fo);
  if (pred->parsed()) return cmd_predict(po);
  if (cls->parsed()) return cmd_classify(co);
  if (sim->parsed()) return cmd_simulate(so);
  if (spe->parsed()) return cmd_spectral(spo);
  return cmd_tune(to);
}

}  // namespace

int run_cli(int argc, const char *const argv[]) {
  try {
    return dispatch(argc, argv);
  } catch (const input_error &e) {
    emit_error("input_error", e.what());
    return 1;
  } catch (const numerical_error &e) {
    emit_error("numerical_error", e.what());
    return 2;
  } catch (const internal_error &e) {
    emit_error("internal_error", e.what());
    return 3;
  } catch (const std::exception &e) {
    emit_error("internal_error", e.what());
    return 3;
  }
}

int run_cli(const std::vector<std::string> &args) {
  std::vector<const char *> argv{"cosso"};
  for (const auto &a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cosso
