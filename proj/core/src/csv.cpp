#include "xbcf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "xbcf/error.hpp"

namespace xbcf {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto pos = rest.find(delimiter);
    out.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

}  // namespace

std::optional<std::size_t> Table::find(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

const std::vector<double>& Table::column(const std::string& name) const {
  const auto idx = find(name);
  if (!idx) throw ValidationError("missing column '" + name + "'");
  return columns[*idx];
}

Table read_table(std::istream& in, char delimiter) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: empty input, header row expected");
  table.header = split(line, delimiter);
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j].empty()) {
      throw ValidationError("csv: empty column name at position " + std::to_string(j + 1));
    }
    if (std::count(table.header.begin(), table.header.end(), table.header[j]) > 1) {
      throw ValidationError("csv: duplicate column '" + table.header[j] + "'");
    }
  }
  table.columns.resize(table.header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, delimiter);
    if (cells.size() != table.header.size()) {
      throw ValidationError("csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(table.header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double value = 0.0;
      const char* begin = cells[j].data();
      const char* end = begin + cells[j].size();
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr != end || cells[j].empty() || !std::isfinite(value)) {
        throw ValidationError("csv: line " + std::to_string(line_no) + ", column '" +
                              table.header[j] + "': '" + cells[j] +
                              "' is not a finite number");
      }
      table.columns[j].push_back(value);
    }
  }
  return table;
}

Table read_table_file(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_table(in, delimiter);
}

Dataset dataset_from_table(const Table& table, const CsvOptions& options) {
  const auto y_idx = table.find(options.outcome_col);
  const auto z_idx = table.find(options.treatment_col);
  if (!y_idx) throw ValidationError("csv: outcome column '" + options.outcome_col + "' not found");
  if (!z_idx) throw ValidationError("csv: treatment column '" + options.treatment_col + "' not found");
  std::optional<std::size_t> pi_idx;
  if (options.propensity_col) {
    pi_idx = table.find(*options.propensity_col);
    if (!pi_idx) {
      throw ValidationError("csv: propensity column '" + *options.propensity_col + "' not found");
    }
  }

  Dataset d;
  const std::size_t n = table.rows();
  d.y = table.columns[*y_idx];
  d.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = table.columns[*z_idx][i];
    if (v != 0.0 && v != 1.0) {
      throw ValidationError("csv: data row " + std::to_string(i + 1) + ", column '" +
                            options.treatment_col + "': treatment must be 0 or 1, got " +
                            format_double(v));
    }
    d.z[i] = static_cast<int>(v);
  }
  if (pi_idx) d.pi_hat = table.columns[*pi_idx];

  std::vector<std::size_t> x_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == *y_idx || j == *z_idx || (pi_idx && j == *pi_idx)) continue;
    const auto& ignored = options.ignore_cols;
    if (std::find(ignored.begin(), ignored.end(), table.header[j]) != ignored.end()) continue;
    x_cols.push_back(j);
    d.covariate_names.push_back(table.header[j]);
  }
  d.X = Matrix(n, x_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < x_cols.size(); ++k) d.X(i, k) = table.columns[x_cols[k]][i];
  }
  d.validate(/*require_both_groups=*/false);
  return d;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  return dataset_from_table(read_table_file(path, options.delimiter), options);
}

Matrix covariates_from_table(const Table& table, const std::vector<std::string>& names) {
  Matrix X(table.rows(), names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto& col = table.column(names[k]);
    for (std::size_t i = 0; i < col.size(); ++i) X(i, k) = col[i];
  }
  return X;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_cate_table(std::ostream& out, const CateSummary& s) {
  out << "row_id,cate_mean,cate_lo,cate_hi\n";
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    out << i << ',' << format_double(s.mean[i]) << ',' << format_double(s.lo[i]) << ','
        << format_double(s.hi[i]) << '\n';
  }
}

std::vector<double> read_cate_means(const Table& table) {
  return table.column("cate_mean");
}

void write_simulated(std::ostream& out, const sim::SimulatedData& data) {
  const Dataset& d = data.data;
  out << "y,z";
  for (const auto& name : d.covariate_names) out << ',' << name;
  out << ",pi_true,mu_true,tau_true\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_double(d.y[i]) << ',' << d.z[i];
    for (double v : d.X.row(i)) out << ',' << format_double(v);
    out << ',' << format_double(data.pi_true[i]) << ',' << format_double(data.mu_true[i]) << ','
        << format_double(data.tau_true[i]) << '\n';
  }
}

void write_benchmark_table(std::ostream& out, const std::vector<sim::BenchmarkRow>& rows) {
  out << "config,method,ate_rmse,cate_rmse,ate_cover,cate_cover,ate_il,cate_il,seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    if (r.reps_ok == 0) {
      out << r.config << ',' << sim::to_string(r.method) << ",failed,failed,failed,failed,failed,failed,failed\n";
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f", r.ate_rmse, r.cate_rmse,
                  r.ate_cover, r.cate_cover, r.ate_il, r.cate_il, r.seconds);
    out << r.config << ',' << sim::to_string(r.method) << ',' << buf << '\n';
  }
}

}  // namespace xbcf
