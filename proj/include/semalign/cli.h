// Copyright 2026 The semalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEMALIGN_CLI_H_
#define SEMALIGN_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "semalign/evaluation.h"

namespace semalign {

// Exit codes returned by dispatch().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;

// Runs one subcommand. Errors from the toolkit are printed to `err` as a
// single line "error: <kind>: <message>".
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

// Table of one metric: rows are model labels, columns are datasets in
// first-seen order, followed by the arithmetic mean over present columns.
struct ReportTable {
  std::string metric;
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  // values[m][d]; NaN where the record is missing.
  std::vector<std::vector<double>> values;
  std::vector<double> average;
};

// Later records for the same (metric, dataset, model) replace earlier ones.
std::vector<ReportTable> build_report(const std::vector<MetricRecord>& records);
std::string report_text(const std::vector<ReportTable>& tables);
nlohmann::ordered_json report_json(const std::vector<ReportTable>& tables);

// Reads run_dir/metrics.jsonl and writes report.txt and report.json next
// to it. Throws FormatError when there are no records.
std::vector<ReportTable> write_report(const std::string& run_dir);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace semalign

#endif  // SEMALIGN_CLI_H_
