#pragma once

#include <string>
#include <vector>

#include "capit/bench.hpp"
#include "capit/capit.hpp"

namespace capit::report {

/// {"spec": ..., "replicates": [...], "summary": {...}}; failed losses are null.
std::string report_json(const bench::ReplicateReport& report);
/// seed,method,loss,lambda_hat,runtime_ms,flags with flags joined by ';'.
std::string report_csv(const bench::ReplicateReport& report);
/// Writes <prefix>.json and <prefix>.csv atomically.
void write_report(const bench::ReplicateReport& report, const std::string& prefix);

/// Fit output: unit vectors, supports (zero-based), lambda_hat, trace, flags.
std::string estimate_json(const CcaEstimate& est, const std::string& precision_method);

/// s,p,n,median_sq_loss,predictor,ratio,failed
std::string rate_csv(const std::vector<bench::RateCell>& cells);

}  // namespace capit::report
