#pragma once

#include "afem/adapt.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace afem {

/// Column names of the run CSV, in order. Wall times live in the timing CSV.
const std::vector<std::string>& run_csv_columns();

/// One row per level, values with 17 significant digits.
void write_run_csv(std::ostream& out, const AdaptiveRun& run);
/// Parses a run CSV back into level records (timing fields stay zero).
std::vector<LevelRecord> read_run_csv(std::istream& in);

/// level, wall_time, solve_time.
void write_timing_csv(std::ostream& out, const AdaptiveRun& run);

/// Fitted rates and measured constants of a run.
std::string run_summary_json(const AdaptiveRun& run);

/// run.csv, timing.csv and summary.json in `dir`.
void write_run_outputs(const std::filesystem::path& dir, const AdaptiveRun& run);

}  // namespace afem
