#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "coforget/simulation.hpp"

namespace coforget {

nlohmann::json to_json(const RunConfig& run);
nlohmann::json to_json(const SummaryMetrics& summary);
/// Epoch fields without the audit trail, which goes to audit.jsonl.
nlohmann::json to_json(const EpochReport& report, std::size_t baseline_footprint);
nlohmann::json to_json(const AuditEntry& entry);

/// `{"scenario", "epochs", "config", "summary", "epochs": [...]}`.
nlohmann::json report_document(const RunConfig& run, std::string_view scenario,
                               const RunResult& result);

void write_epochs_csv(std::ostream& out, const RunResult& result);
/// One JSON object per line, one line per audit entry, in epoch order.
void write_audit_jsonl(std::ostream& out, const RunResult& result);

/// Writes report.json, epochs.csv and audit.jsonl into dir, creating it.
/// Throws Error(Io) on any filesystem failure.
void write_outputs(const std::filesystem::path& dir, const RunConfig& run,
                   std::string_view scenario, const RunResult& result);

}  // namespace coforget
