#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cosso/logistic.hpp"
#include "cosso/tuning.hpp"
#include "cosso/types.hpp"

namespace cosso {

// ---------------------------------------------------------------------------
// CSV plumbing.  Comma-separated, one header row, '.' decimal point.  Written
// numbers carry 17 significant digits so a write-read cycle reproduces every
// double exactly.
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd values;
};

// Strictly numeric table.  Empty or non-numeric cells, ragged rows and
// duplicate header names raise input_error naming the offending row.
CsvTable read_csv(const std::string &path);

void write_csv(const std::string &path, const std::vector<std::string> &header,
               const MatrixXd &values);

// A modelling view of a CSV: the named response column is split off and the
// remaining columns become covariates, min-max scaled onto [0,1] with the
// scaling parameters kept for prediction time.  Constant covariate columns
// are retained (they scale to the degenerate 0.5) and reported so callers can
// warn.  In label mode the response must be exactly 0/1.
struct LoadedCsv {
  Dataset data;  // X scaled, y as read
  Scaling scaling;
  std::vector<std::string> covariate_names;
  std::string response_name;
  std::vector<int> constant_columns;  // 0-based covariate indices
};

LoadedCsv load_csv(const std::string &path, const std::string &response,
                   bool labels01 = false);

// ---------------------------------------------------------------------------
// Model persistence.  One JSON document, schema-versioned; finite doubles
// round-trip bit for bit, so archived models predict identically after a
// save-load cycle.
// ---------------------------------------------------------------------------

inline constexpr int kArchiveSchema = 1;

struct ModelArchive {
  int schema = kArchiveSchema;
  bool logistic = false;
  FitState fit;

  // Logistic extras (ignored for regression archives).
  std::vector<double> deviance_trace;
  bool separation_warning = false;
  int irls_iterations = 0;

  bool tuned = false;
  TuneReport tuning;  // meaningful only when tuned

  std::uint64_t seed = 0;
  std::vector<std::string> covariate_names;
  std::string response_name;
};

void save_archive(const std::string &path, const ModelArchive &archive);

// Rejects unknown schema versions and archives whose kernel is not one of the
// built-in choices.
ModelArchive load_archive(const std::string &path);

}  // namespace cosso
