#include "cosso/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cosso/kernel.hpp"

namespace cosso {

namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string &cell, int row, const std::string &col) {
  const char *b = cell.data(), *e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  if (b == e)
    throw input_error("data row " + std::to_string(row) +
                      ": missing value in column '" + col + "'");
  double v = 0.0;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw input_error("data row " + std::to_string(row) + ": cell '" + cell +
                      "' in column '" + col + "' is not numeric");
  return v;
}

// ---------------------------------------------------------------------------
// JSON helpers.  Matrices are stored flat row-major with their shape; the one
// field that can legitimately be infinite (the sum bound of a penalized fit)
// is stored as the string "inf".
// ---------------------------------------------------------------------------

json encode_extended(double v) {
  if (std::isfinite(v)) return v;
  if (std::isinf(v) && v > 0) return "inf";
  throw input_error("archive cannot store a NaN or -inf value");
}

double decode_extended(const json &j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw input_error("archive: unexpected string where a number belongs");
  }
  return j.get<double>();
}

json encode_vector(const VectorXd &v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd decode_vector(const json &j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json encode_matrix(const MatrixXd &m) {
  json flat = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int c = 0; c < m.cols(); ++c) flat.push_back(m(i, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", flat}};
}

MatrixXd decode_matrix(const json &j) {
  const int r = j.at("rows").get<int>(), c = j.at("cols").get<int>();
  const json &flat = j.at("values");
  if (r < 0 || c < 0 || static_cast<int>(flat.size()) != r * c)
    throw input_error("archive: matrix shape does not match its data");
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = flat[i * c + k].get<double>();
  return m;
}

std::string kernel_name(KernelFn k) {
  if (k == &sobolev_rk) return "sobolev";
  if (k == &linear_rk) return "linear";
  throw input_error("archive supports only the built-in kernels");
}

KernelFn kernel_by_name(const std::string &name) {
  if (name == "sobolev") return &sobolev_rk;
  if (name == "linear") return &linear_rk;
  throw input_error("archive: unknown kernel '" + name + "'");
}

json encode_design(const AnovaDesign &design) {
  const int d = design.d();
  std::string order;
  if (design.p() == AnovaDesign::additive(d).p())
    order = "additive";
  else if (design.p() == AnovaDesign::twoway(d).p())
    order = "twoway";
  else
    throw input_error("archive supports additive and two-way designs");
  return json{{"d", d}, {"order", order}};
}

AnovaDesign decode_design(const json &j) {
  const int d = j.at("d").get<int>();
  const std::string order = j.at("order").get<std::string>();
  if (order == "additive") return AnovaDesign::additive(d);
  if (order == "twoway") return AnovaDesign::twoway(d);
  throw input_error("archive: unknown design order '" + order + "'");
}

json encode_scaling(const Scaling &s) {
  if (s.is_identity()) return json{{"identity", true}};
  json lo = json::array(), hi = json::array();
  for (const auto &col : s.columns()) {
    lo.push_back(col.lo);
    hi.push_back(col.hi);
  }
  return json{{"identity", false}, {"lo", lo}, {"hi", hi}};
}

Scaling decode_scaling(const json &j) {
  if (j.at("identity").get<bool>()) return Scaling();
  const json &lo = j.at("lo"), &hi = j.at("hi");
  if (lo.size() != hi.size())
    throw input_error("archive: scaling bounds disagree in length");
  std::vector<ColumnScale> cols(lo.size());
  for (size_t i = 0; i < lo.size(); ++i)
    cols[i] = {lo[i].get<double>(), hi[i].get<double>()};
  return Scaling::from_columns(std::move(cols));
}

Criterion decode_criterion(const std::string &label) {
  if (label == "gcv") return Criterion::gcv();
  if (label.size() > 2 && label.compare(0, 2, "cv") == 0) {
    int k = 0;
    const auto res =
        std::from_chars(label.data() + 2, label.data() + label.size(), k);
    if (res.ec == std::errc{} && res.ptr == label.data() + label.size() &&
        k >= 2)
      return Criterion::kfold(k);
  }
  throw input_error("archive: unknown tuning criterion '" + label + "'");
}

json encode_fit(const FitState &fit) {
  json j;
  j["design"] = encode_design(fit.design);
  j["kernel"] = kernel_name(fit.kernel);
  j["X"] = encode_matrix(fit.X);
  j["scaling"] = encode_scaling(fit.scaling);
  j["theta"] = encode_vector(fit.theta);
  j["c"] = encode_vector(fit.c);
  j["b"] = fit.b;
  j["lambda0"] = fit.lambda0;
  j["M"] = encode_extended(fit.M);
  j["objective"] = fit.objective;
  j["sum_theta"] = fit.sum_theta;
  j["nu"] = fit.nu;
  j["objective_trace"] = fit.objective_trace;
  j["iterations"] = fit.iterations;
  return j;
}

FitState decode_fit(const json &j) {
  FitState fit;
  fit.design = decode_design(j.at("design"));
  fit.kernel = kernel_by_name(j.at("kernel").get<std::string>());
  fit.X = decode_matrix(j.at("X"));
  fit.scaling = decode_scaling(j.at("scaling"));
  fit.theta = decode_vector(j.at("theta"));
  fit.c = decode_vector(j.at("c"));
  fit.b = j.at("b").get<double>();
  fit.lambda0 = j.at("lambda0").get<double>();
  fit.M = decode_extended(j.at("M"));
  fit.objective = j.at("objective").get<double>();
  fit.sum_theta = j.at("sum_theta").get<double>();
  fit.nu = j.at("nu").get<double>();
  fit.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  fit.iterations = j.at("iterations").get<int>();
  return fit;
}

json encode_tuning(const TuneReport &t) {
  json j;
  j["criterion"] = t.criterion.label();
  j["seed"] = t.seed;
  j["lambda0_grid"] = t.lambda0_grid;
  j["lambda0_scores"] = t.lambda0_scores;
  j["m_grid"] = t.m_grid;
  j["m_scores"] = t.m_scores;
  j["chosen_lambda0"] = t.chosen_lambda0;
  j["chosen_m"] = t.chosen_m;
  j["norm_trace"] = encode_matrix(t.norm_trace);
  return j;
}

TuneReport decode_tuning(const json &j) {
  TuneReport t;
  t.criterion = decode_criterion(j.at("criterion").get<std::string>());
  t.seed = j.at("seed").get<std::uint64_t>();
  t.lambda0_grid = j.at("lambda0_grid").get<std::vector<double>>();
  t.lambda0_scores = j.at("lambda0_scores").get<std::vector<double>>();
  t.m_grid = j.at("m_grid").get<std::vector<double>>();
  t.m_scores = j.at("m_scores").get<std::vector<double>>();
  t.chosen_lambda0 = j.at("chosen_lambda0").get<double>();
  t.chosen_m = j.at("chosen_m").get<double>();
  t.norm_trace = decode_matrix(j.at("norm_trace"));
  return t;
}

}  // namespace

CsvTable read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");

  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;  // trailing newline
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw input_error("'" + path + "' has no header row");

  CsvTable table;
  table.header = rows[0];
  const int cols = static_cast<int>(table.header.size());
  std::set<std::string> seen;
  for (const auto &name : table.header)
    if (!seen.insert(name).second)
      throw input_error("duplicate column name '" + name + "' in '" + path +
                        "'");

  const int n = static_cast<int>(rows.size()) - 1;
  table.values.resize(n, cols);
  for (int i = 0; i < n; ++i) {
    const auto &cells = rows[i + 1];
    if (static_cast<int>(cells.size()) != cols)
      throw input_error("data row " + std::to_string(i + 1) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(cols));
    for (int c = 0; c < cols; ++c)
      table.values(i, c) = parse_cell(cells[c], i + 1, table.header[c]);
  }
  return table;
}

void write_csv(const std::string &path, const std::vector<std::string> &header,
               const MatrixXd &values) {
  if (static_cast<int>(header.size()) != values.cols())
    throw input_error("csv write: header width does not match the data");
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");

  for (size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  out << "\n";
  char buf[40];
  for (int i = 0; i < values.rows(); ++i) {
    for (int c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values(i, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw input_error("failed while writing '" + path + "'");
}

LoadedCsv load_csv(const std::string &path, const std::string &response,
                   bool labels01) {
  const CsvTable table = read_csv(path);

  int y_col = -1;
  for (size_t c = 0; c < table.header.size(); ++c)
    if (table.header[c] == response) y_col = static_cast<int>(c);
  if (y_col < 0)
    throw input_error("response column '" + response + "' not found in '" +
                      path + "'");
  if (table.header.size() < 2)
    throw input_error("'" + path + "' has no covariate columns");

  LoadedCsv out;
  out.response_name = response;
  const int n = static_cast<int>(table.values.rows());
  const int d = static_cast<int>(table.header.size()) - 1;
  MatrixXd raw(n, d);
  int k = 0;
  for (size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<int>(c) == y_col) continue;
    out.covariate_names.push_back(table.header[c]);
    raw.col(k++) = table.values.col(c);
  }
  out.data.y = table.values.col(y_col);

  if (labels01)
    for (int i = 0; i < n; ++i)
      if (out.data.y[i] != 0.0 && out.data.y[i] != 1.0)
        throw input_error("data row " + std::to_string(i + 1) +
                          ": label must be 0 or 1, got " +
                          std::to_string(out.data.y[i]));

  out.scaling = Scaling::fit(raw);
  out.data.X = out.scaling.apply(raw);
  const auto degenerate = out.scaling.degenerate_columns();
  for (int j = 0; j < d; ++j)
    if (degenerate[j]) out.constant_columns.push_back(j);
  return out;
}

void save_archive(const std::string &path, const ModelArchive &archive) {
  json j;
  j["schema"] = archive.schema;
  j["kind"] = archive.logistic ? "logistic" : "regression";
  j["seed"] = archive.seed;
  j["covariates"] = archive.covariate_names;
  j["response"] = archive.response_name;
  j["fit"] = encode_fit(archive.fit);
  if (archive.logistic) {
    j["deviance_trace"] = archive.deviance_trace;
    j["separation_warning"] = archive.separation_warning;
    j["irls_iterations"] = archive.irls_iterations;
  }
  j["tuned"] = archive.tuned;
  if (archive.tuned) j["tuning"] = encode_tuning(archive.tuning);

  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw input_error("failed while writing '" + path + "'");
}

ModelArchive load_archive(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw input_error("'" + path + "' is not valid archive JSON: " + e.what());
  }

  try {
    ModelArchive a;
    a.schema = j.at("schema").get<int>();
    if (a.schema != kArchiveSchema)
      throw input_error("archive schema " + std::to_string(a.schema) +
                        " is not supported (expected " +
                        std::to_string(kArchiveSchema) + ")");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "regression" && kind != "logistic")
      throw input_error("archive: unknown kind '" + kind + "'");
    a.logistic = kind == "logistic";
    a.seed = j.at("seed").get<std::uint64_t>();
    a.covariate_names = j.at("covariates").get<std::vector<std::string>>();
    a.response_name = j.at("response").get<std::string>();
    a.fit = decode_fit(j.at("fit"));
    if (a.logistic) {
      a.deviance_trace = j.at("deviance_trace").get<std::vector<double>>();
      a.separation_warning = j.at("separation_warning").get<bool>();
      a.irls_iterations = j.at("irls_iterations").get<int>();
    }
    a.tuned = j.at("tuned").get<bool>();
    if (a.tuned) a.tuning = decode_tuning(j.at("tuning"));

    if (static_cast<int>(a.covariate_names.size()) != a.fit.design.d())
      throw input_error("archive: covariate names disagree with the design");
    return a;
  } catch (const json::exception &e) {
    throw input_error("'" + path + "' is missing archive fields: " + e.what());
  }
}

}  // namespace cosso
