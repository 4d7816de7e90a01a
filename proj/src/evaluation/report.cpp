#include <cstdio>
#include <sstream>

#include "therasim/core/json_text.hpp"
#include "therasim/evaluation/report.hpp"

namespace therasim {
namespace {

constexpr std::array<std::string_view, 5> kDimensionColumns{"responsiveness", "empathy",
                                                            "persuasive_strategy_appropriateness",
                                                            "clinical_relevance", "behavioral_realism"};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string exact(double v) { return fmt("%.17g", v); }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string table_text(const AggregateReport& r, std::span<const WinRate> wins) {
  std::ostringstream out;
  std::size_t name_width = 16;
  for (const auto& m : r.models) name_width = std::max(name_width, m.model.size() + 2);
  out << pad("Model", name_width) << pad("Easy", 12) << pad("Medium", 12) << pad("Hard", 12) << "Average\n";
  for (const auto& m : r.models) {
    out << pad(m.model, name_width);
    for (auto d : kAllDifficulties) {
      auto it = m.cells.find(d);
      std::string cell = it == m.cells.end()
                             ? std::string("-")
                             : fmt("%.1f", it->second.motivation.value) + " / " + fmt("%.1f", it->second.confidence.value);
      out << pad(cell, 12);
    }
    out << fmt("%.2f", m.overall.motivation.value) << " / " << fmt("%.2f", m.overall.confidence.value) << '\n';
  }
  bool any_dims = std::any_of(r.models.begin(), r.models.end(), [](const auto& m) { return m.dimensions.has_value(); });
  if (any_dims) {
    out << '\n' << pad("Model", name_width);
    for (auto label : {"R", "E", "P", "C", "B"}) out << pad(label, 7);
    out << "Turns\n";
    for (const auto& m : r.models) {
      if (!m.dimensions) continue;
      out << pad(m.model, name_width);
      for (const auto& d : *m.dimensions) out << pad(fmt("%.2f", d.value), 7);
      out << fmt("%.2f", m.end_turn.value) << '\n';
    }
  }
  if (!wins.empty()) {
    out << '\n' << pad("Subject", name_width) << pad("Win rate", 10) << "W/L/T\n";
    for (const auto& w : wins) {
      out << pad(w.subject, name_width) << pad(w.fraction ? fmt("%.1f%%", *w.fraction * 100.0) : std::string("-"), 10)
          << w.wins << '/' << w.losses << '/' << w.ties << '\n';
    }
  }
  if (r.excluded > 0) out << "\nExcluded sessions without a final score: " << r.excluded << '\n';
  return out.str();
}

std::string csv(const AggregateReport& r, std::span<const WinRate> wins) {
  std::ostringstream out;
  out << "section,model,difficulty,metric,value,count\n";
  auto row = [&out](std::string_view section, std::string_view model, std::string_view difficulty,
                    std::string_view metric, double value, std::size_t count) {
    out << section << ',' << model << ',' << difficulty << ',' << metric << ',' << exact(value) << ',' << count << '\n';
  };
  for (const auto& m : r.models) {
    for (const auto& [d, c] : m.cells) {
      row("cell", m.model, to_string(d), "motivation", c.motivation.value, c.motivation.count);
      row("cell", m.model, to_string(d), "confidence", c.confidence.value, c.confidence.count);
    }
    row("overall", m.model, "all", "motivation", m.overall.motivation.value, m.overall.motivation.count);
    row("overall", m.model, "all", "confidence", m.overall.confidence.value, m.overall.confidence.count);
    row("overall", m.model, "all", "end_turn", m.end_turn.value, m.end_turn.count);
    if (m.dimensions) {
      for (std::size_t i = 0; i < 5; ++i) {
        row("dimension", m.model, "all", kDimensionColumns[i], (*m.dimensions)[i].value, (*m.dimensions)[i].count);
      }
    }
  }
  for (const auto& w : wins) {
    row("win", w.subject, "all", "wins", static_cast<double>(w.wins), w.wins);
    row("win", w.subject, "all", "losses", static_cast<double>(w.losses), w.losses);
    row("win", w.subject, "all", "ties", static_cast<double>(w.ties), w.ties);
  }
  if (r.excluded > 0) row("meta", "", "all", "excluded", static_cast<double>(r.excluded), r.excluded);
  return out.str();
}

Json mean_json(const Mean& m) { return Json{{"mean", m.value}, {"count", m.count}}; }
Mean mean_from(const Json& j) { return Mean{j.at("mean").get<double>(), j.at("count").get<std::size_t>()}; }

ModelAggregate& model_slot(AggregateReport& r, const std::string& name) {
  for (auto& m : r.models) {
    if (m.model == name) return m;
  }
  r.models.push_back(ModelAggregate{});
  r.models.back().model = name;
  return r.models.back();
}

}  // namespace

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "table-text" || s == "text" || s == "table") return ReportFormat::TableText;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw Error(Errc::InvalidArgument, "unknown report format '" + std::string(s) + "'");
}

Json report_to_json(const AggregateReport& r, std::span<const WinRate> wins) {
  Json models = Json::array();
  for (const auto& m : r.models) {
    Json cells = Json::object();
    for (const auto& [d, c] : m.cells) {
      cells[std::string(to_string(d))] = {{"motivation", mean_json(c.motivation)},
                                          {"confidence", mean_json(c.confidence)}};
    }
    Json entry{{"model", m.model},
               {"cells", cells},
               {"overall", {{"motivation", mean_json(m.overall.motivation)}, {"confidence", mean_json(m.overall.confidence)}}},
               {"end_turn", mean_json(m.end_turn)},
               {"dimensions", nullptr}};
    if (m.dimensions) {
      Json dims = Json::object();
      for (std::size_t i = 0; i < 5; ++i) dims[std::string(kDimensionColumns[i])] = mean_json((*m.dimensions)[i]);
      entry["dimensions"] = dims;
    }
    models.push_back(entry);
  }
  Json win_rates = Json::array();
  for (const auto& w : wins) win_rates.push_back(w);
  return Json{{"schema_version", kSchemaVersion}, {"models", models}, {"excluded", r.excluded}, {"win_rates", win_rates}};
}

AggregateReport report_from_json(const Json& j) {
  check_schema_version(j);
  AggregateReport r;
  r.excluded = j.value("excluded", std::size_t{0});
  for (const auto& e : j.at("models")) {
    ModelAggregate m;
    m.model = e.at("model").get<std::string>();
    for (const auto& [d, c] : e.at("cells").items()) {
      m.cells[difficulty_from_string(d)] = CellStats{mean_from(c.at("motivation")), mean_from(c.at("confidence"))};
    }
    m.overall = CellStats{mean_from(e.at("overall").at("motivation")), mean_from(e.at("overall").at("confidence"))};
    m.end_turn = mean_from(e.at("end_turn"));
    if (const auto& dims = e.at("dimensions"); !dims.is_null()) {
      std::array<Mean, 5> values;
      for (std::size_t i = 0; i < 5; ++i) values[i] = mean_from(dims.at(std::string(kDimensionColumns[i])));
      m.dimensions = values;
    }
    r.models.push_back(std::move(m));
  }
  return r;
}

AggregateReport report_from_csv(std::string_view text) {
  AggregateReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n++ == 0 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw Error(Errc::Corruption, "report CSV line " + std::to_string(n) + " has bad arity");
    auto value = json_decimal(Json(f[4]));
    if (!value) throw Error(Errc::Corruption, "report CSV line " + std::to_string(n) + " has a bad value");
    Mean mean{*value, static_cast<std::size_t>(std::stoull(f[5]))};
    const auto& section = f[0];
    if (section == "meta") {
      if (f[3] == "excluded") r.excluded = mean.count;
      continue;
    }
    if (section == "win") continue;
    auto& m = model_slot(r, f[1]);
    if (section == "cell") {
      auto& c = m.cells[difficulty_from_string(f[2])];
      (f[3] == "motivation" ? c.motivation : c.confidence) = mean;
    } else if (section == "overall") {
      if (f[3] == "motivation") m.overall.motivation = mean;
      if (f[3] == "confidence") m.overall.confidence = mean;
      if (f[3] == "end_turn") m.end_turn = mean;
    } else if (section == "dimension") {
      auto it = std::find(kDimensionColumns.begin(), kDimensionColumns.end(), f[3]);
      if (it == kDimensionColumns.end()) throw Error(Errc::Corruption, "unknown dimension '" + f[3] + "'");
      if (!m.dimensions) m.dimensions.emplace();
      (*m.dimensions)[static_cast<std::size_t>(it - kDimensionColumns.begin())] = mean;
    } else {
      throw Error(Errc::Corruption, "unknown report section '" + section + "'");
    }
  }
  return r;
}

std::string render_report(const AggregateReport& report, ReportFormat format, std::span<const WinRate> win_rates) {
  switch (format) {
    case ReportFormat::TableText: return table_text(report, win_rates);
    case ReportFormat::Csv: return csv(report, win_rates);
    case ReportFormat::Json: return report_to_json(report, win_rates).dump(2) + "\n";
  }
  return {};
}

}  // namespace therasim
