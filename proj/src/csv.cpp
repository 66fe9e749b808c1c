#include "capit/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "capit/errors.hpp"

namespace capit::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, const std::string& path, long line, std::size_t column) {
  std::string cell = trim(raw);
  if (!cell.empty() && cell.front() == '+') cell.erase(0, 1);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  std::ostringstream msg;
  if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
    msg << path << ":" << line << ": column " << column + 1 << " is not a number: '" << trim(raw) << "'";
    throw DataError(line, msg.str());
  }
  if (!std::isfinite(v)) {
    msg << path << ":" << line << ": column " << column + 1 << " is not finite: '" << trim(raw) << "'";
    throw DataError(line, msg.str());
  }
  return v;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DataError(0, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string text;
  long line = 0;
  bool header_pending = has_header;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, path, line, row.size()));
    if (!text.empty() && text.back() == ',') row.push_back(parse_cell("", path, line, row.size()));
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << path << ":" << line << ": expected " << rows.front().size() << " columns, found " << row.size();
      throw DataError(line, msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(line, path + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

model::PairedDataset load_paired_csv(const std::string& x_path, const std::string& y_path, bool has_header) {
  model::PairedDataset d{read_csv_matrix(x_path, has_header), read_csv_matrix(y_path, has_header)};
  if (d.x.rows() != d.y.rows()) {
    std::ostringstream msg;
    msg << "row count mismatch: " << x_path << " has " << d.x.rows() << " rows, " << y_path << " has " << d.y.rows();
    throw DataError(0, msg.str());
  }
  return d;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_matrix_text(const Matrix& m, const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j) out += ',';
      out += header[j];
    }
    out += '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(0, "cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw DataError(0, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError(0, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

void write_csv_matrix(const std::string& path, const Matrix& m, const std::vector<std::string>& header) {
  write_atomic(path, csv_matrix_text(m, header));
}

}  // namespace capit::io
