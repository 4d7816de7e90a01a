#pragma once

#include <span>
#include <string>
#include <string_view>

#include "therasim/evaluation/analytics.hpp"

namespace therasim {

enum class ReportFormat { TableText, Csv, Json };
ReportFormat report_format_from_string(std::string_view s);  // "table-text" | "text" | "csv" | "json"

// Deterministic serializations. Table text mirrors the motivation/confidence
// table ("5.0 / 4.1" cells) and, when present, the five-dimension table and
// win rates. CSV is long format: section,model,difficulty,metric,value,count.
std::string render_report(const AggregateReport& report, ReportFormat format,
                          std::span<const WinRate> win_rates = {});

Json report_to_json(const AggregateReport& report, std::span<const WinRate> win_rates = {});
AggregateReport report_from_json(const Json& j);
AggregateReport report_from_csv(std::string_view csv);

}  // namespace therasim
