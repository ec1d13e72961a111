#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "elstm_lab/elm.hpp"
#include "elstm_lab/trainer.hpp"

#include <json.hpp>

namespace elstm_lab {

inline constexpr int kCheckpointFormatVersion = 1;

// Checkpoints: {format_version, model, seed, dims{d,h,v}, vocab, params{...},
// egate{...}}. Matrices are nested row-major lists, vectors flat lists.
// Doubles are written in shortest round-trip form, so load(save(m)) == m
// bit for bit.
nlohmann::json model_to_json(const Model& model);
/// Throws InputError on a malformed or inconsistent document.
Model model_from_json(const nlohmann::json& doc);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

nlohmann::json elm_to_json(const ElmModel& model);
ElmModel elm_from_json(const nlohmann::json& doc);

inline constexpr const char* kMetricsCsvHeader = "epoch,model,loss,accuracy,seconds";

/// Rows "epoch,model,loss,accuracy,seconds" with 6 decimal places.
void write_metrics_rows(std::ostream& out, ModelKind kind,
                        const std::vector<EpochMetrics>& metrics);
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<ModelSeries>& series);

/// {models:{lstm:{...}, elstm:{...}}, overhead_pct, epochs_to_target:[...],
///  reference_overhead_pct, config}. Missing values are null.
nlohmann::json report_to_json(const ComparisonReport& report, const nlohmann::json& config);

}  // namespace elstm_lab
