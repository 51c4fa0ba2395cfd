#pragma once

#include "pbalm/outer_solver.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pbalm {

/// Reference values for the suboptimality gap |f1(x^k) - f1*| / |f1(x0) - f1*|.
struct Suboptimality {
    double f1_star = 0;
    double f1_x0 = 0;

    double operator()(double f1) const { return std::abs(f1 - f1_star) / std::abs(f1_x0 - f1_star); }
};

/// Fixed column order of the trace. `suboptimality` is appended only when the
/// optimal value is known.
std::vector<std::string> trace_columns(bool with_suboptimality);

/// 17 significant digits, '.' decimal separator.
std::string format_number(double v);

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace,
                     const std::optional<Suboptimality>& subopt = std::nullopt);

nlohmann::json trace_rows_json(const std::vector<IterationRecord>& trace,
                               const std::optional<Suboptimality>& subopt = std::nullopt);

/// Rebuilds the CSV text from the "rows" array of a JSON trace.
std::string csv_from_json_rows(const nlohmann::json& rows);

nlohmann::json config_to_json(const OuterConfig& cfg);

} // namespace pbalm
