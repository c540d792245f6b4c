#pragma once

#include <filesystem>
#include <string>

#include "esiaudit/runner.hpp"
#include "json.hpp"

namespace esiaudit {

nlohmann::json metric_report_to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

nlohmann::json audit_report_to_json(const AuditReport& r);
std::string audit_report_json(const AuditReport& r);

// The CSV and markdown renderers read the serialized report so the `report`
// subcommand can re-render a saved analysis without re-running it.
std::string headline_csv(const nlohmann::json& report);
std::string calibration_csv(const nlohmann::json& report);
std::string intervals_csv(const nlohmann::json& report);
std::string pairwise_csv(const nlohmann::json& report);
std::string summary_markdown(const nlohmann::json& report);

// "json" writes audit.json, "csv" the four tables, "md" summary.md. Every
// format also exports the system prompts as plain-text files under prompts/.
void write_report_files(const nlohmann::json& report,
                        const std::filesystem::path& out_dir,
                        const std::string& format);

void export_prompts(const std::filesystem::path& dir);

}  // namespace esiaudit
