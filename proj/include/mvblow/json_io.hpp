#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mvblow/cascade.hpp"
#include "mvblow/loss_path.hpp"
#include "mvblow/measure.hpp"

namespace mvblow {

// 17-significant-digit decimal form: round-trips every double and keeps
// emitted artifacts byte-stable across runs and thread counts.
std::string g17(double x);

// Writes content to <path>.tmp, then renames over the target, so readers
// never observe a half-written artifact.
void write_text_atomic(const std::string& path, const std::string& content);

nlohmann::json measure_to_json(const Measure1D& mu);
// Strict schema: objects may carry only the documented keys; anything else
// is rejected so config typos cannot silently change a run.
Measure1D measure_from_json(const nlohmann::json& j);
Measure1D load_measure_file(const std::string& path);
void save_measure_file(const Measure1D& mu, const std::string& path);

nlohmann::json report_to_json(const CascadeReport& rep);
nlohmann::json reports_to_json(const std::vector<CascadeReport>& reps);

// losses.csv body: t,L,L_prime,residual. L_prime is the forward interval
// slope (the last row repeats the one before it); the residual column is
// zero when no residuals are supplied.
std::string losses_csv(const LossPath& path,
                       const std::vector<double>* residuals = nullptr);

// heatmap.csv body: t,x,V in long form, row-major over snapshots.
std::string heatmap_csv(const std::vector<double>& ts,
                        const std::vector<double>& xs,
                        const std::vector<std::vector<double>>& rows);

// Space-time intensity plot: x across, t upward, brighter pixels for larger
// values, labeled axes. Columns are bucket-averaged down to at most
// max_cols; equal-gray runs within a row are merged into single rectangles.
std::string heatmap_svg(const std::vector<double>& ts,
                        const std::vector<double>& xs,
                        const std::vector<std::vector<double>>& rows,
                        std::size_t max_cols = 400);

}  // namespace mvblow
