#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace evseg {

// Renderers for ablation output. All of them are pure string builders so
// formatting is unit-testable; write_report ties them to the filesystem.

// Aligned text table of one row per run, sorted as stored.
std::string render_table(const nlohmann::json& results);

// Loss curves as a self-contained SVG; one polyline per named curve.
std::string render_loss_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& curves);

// Bar chart of mean IoU and 8-frame consistency per arrangement, averaged
// over seeds.
std::string render_metric_svg(const nlohmann::json& results);

// Loss column of a training log written by the train loop.
std::vector<double> read_loss_csv(const std::string& path);

// Reads results.json plus each run's CSV log and writes report.txt,
// loss_curves.svg and metrics.svg into out_dir. Returns the table text.
std::string write_report(const std::string& results_path, const std::string& out_dir);

}  // namespace evseg
