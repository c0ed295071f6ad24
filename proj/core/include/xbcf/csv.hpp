#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xbcf/simulation.hpp"
#include "xbcf/types.hpp"
#include "xbcf/xbcf.hpp"

namespace xbcf {

// Numeric table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  // Index of `name` in the header, or nullopt.
  std::optional<std::size_t> find(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
};

// Every cell must parse as a finite number; errors name the row and column.
Table read_table(std::istream& in, char delimiter = ',');
Table read_table_file(const std::string& path, char delimiter = ',');

struct CsvOptions {
  std::string outcome_col = "y";
  std::string treatment_col = "z";
  std::optional<std::string> propensity_col;
  // Columns dropped from X in addition to the named ones.
  std::vector<std::string> ignore_cols;
  char delimiter = ',';
};

// Outcome, treatment and optional propensity from named columns; every other
// column becomes a covariate, in header order.
Dataset dataset_from_table(const Table& table, const CsvOptions& options);
Dataset load_csv(const std::string& path, const CsvOptions& options);

// Covariate matrix made of the named columns, in the given order.
Matrix covariates_from_table(const Table& table, const std::vector<std::string>& names);

// Columns: row_id, cate_mean, cate_lo, cate_hi.
void write_cate_table(std::ostream& out, const CateSummary& summary);
std::vector<double> read_cate_means(const Table& table);

// Columns: y, z, x1..x5, pi_true, mu_true, tau_true.
void write_simulated(std::ostream& out, const sim::SimulatedData& data);

void write_benchmark_table(std::ostream& out, const std::vector<sim::BenchmarkRow>& rows);

// Full-precision rendering used by every table writer.
std::string format_double(double v);

}  // namespace xbcf
