#pragma once

#include <string>
#include <vector>

#include "capit/linalg.hpp"
#include "capit/model.hpp"

namespace capit::io {

/// Comma-separated numeric matrix; blank lines are skipped. Throws DataError
/// naming the 1-based line for ragged rows, non-numeric or non-finite cells.
Matrix read_csv_matrix(const std::string& path, bool has_header);

/// Both files must have the same number of data rows.
model::PairedDataset load_paired_csv(const std::string& x_path, const std::string& y_path, bool has_header);

/// %.17g, which round-trips every double.
std::string format_double(double v);

std::string csv_matrix_text(const Matrix& m, const std::vector<std::string>& header = {});

/// Writes to `path`.tmp in the same directory, then renames over `path`.
void write_atomic(const std::string& path, const std::string& content);

void write_csv_matrix(const std::string& path, const Matrix& m, const std::vector<std::string>& header = {});

}  // namespace capit::io
