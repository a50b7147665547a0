#pragma once

#include "varmarank/estimation.hpp"
#include "varmarank/portmanteau.hpp"
#include "varmarank/varma.hpp"

#include <iosfwd>
#include <string>

namespace varmarank {

struct McConfig;
struct McResult;

// VarmaSpec as {"d": 2, "p": 1, "q": 1, "A": [[[row], [row]]], "B": [...]},
// matrices written row by row.
VarmaSpec varma_spec_from_json(const std::string& text);
std::string varma_spec_to_json(const VarmaSpec& spec);
VarmaSpec read_varma_spec(const std::string& path);

// Series as CSV with header t,x1..xd; t counts from 1.
SeriesData read_series_csv(std::istream& is);
SeriesData read_series_csv(const std::string& path);
void write_series_csv(std::ostream& os, const SeriesData& series);

/// Fitted model in the VarmaSpec schema plus a "fit" metadata block.
std::string fit_to_json(const ThetaVector& theta, const Matrix& sigma, const std::string& method,
                        const std::string& scores, int iterations, bool converged, double gradient_norm,
                        double condition_number);

std::string test_report_to_json(const TestReport& report);
/// method,scores,m,df,stat,pvalue
std::string test_report_csv_header();
std::string test_report_csv_row(const TestReport& report);

/// Experiment configuration; keys absent from the text keep their defaults.
McConfig mc_config_from_json(const std::string& text, const McConfig& defaults);
std::string mc_config_to_json(const McConfig& config);

/// Config echo, rates, failure summary and the per-replication log.
std::string mc_result_to_json(const McResult& result);

}  // namespace varmarank
