#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aobs/harness/scenario.hpp"
#include "aobs/harness/simulation.hpp"

namespace aobs::harness {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Throws IoError unless every configured output file can be created.
/// Missing directories are created; no probe file is left behind.
void check_output_paths(const Scenario& s);
void check_writable(const std::filesystem::path& file);

/// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string csv_text(const TrajectoryLog& log);
void write_csv(const std::filesystem::path& path, const TrajectoryLog& log);
/// Reads a file produced by write_csv. Throws IoError.
TrajectoryLog read_csv(const std::filesystem::path& path);

void write_metrics(const std::filesystem::path& path, const MetricsReport& m);

struct PlotSeries {
  std::string label;
  std::filesystem::path csv;
};
/// Standalone matplotlib script drawing log10|ω|, θ̂, ‖θ̃‖ and ‖x̃‖ for each
/// series. CSV paths are stored relative to the script.
std::string plot_script(const std::vector<PlotSeries>& series, const std::string& title);

/// Files written by emit_outputs.
struct Emitted {
  std::vector<std::filesystem::path> files;
};
/// Trajectory CSV, metrics CSV and plot script as configured.
Emitted emit_outputs(const RunResult& r, const Scenario& s);

struct SweepEntry {
  std::string value;
  bool ok = false;
  std::string error;  // fault text when !ok
  MetricsReport metrics;
  std::size_t stiff_steps = 0;
  std::filesystem::path csv;  // empty when no trajectory was written
};

/// Scenario with `param` set to `value` and per-run output paths.
Scenario sweep_variant(const Scenario& s, const std::string& param, const std::string& value);

/// Runs every value as an independent scenario on up to `threads` workers.
/// A failing run is reported in its entry and does not stop the others.
/// Results keep the order of `values`.
std::vector<SweepEntry> run_sweep(const Scenario& s, const std::string& param, const std::vector<std::string>& values,
                                  unsigned threads = 0);

std::string sweep_table(const std::string& param, const std::vector<SweepEntry>& entries);

}  // namespace aobs::harness
