#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "bowg/database.hpp"
#include "bowg/detector.hpp"
#include "bowg/geometry.hpp"
#include "bowg/loop.hpp"

namespace bowg {

/// Everything a replay run needs. One flat key=value file maps onto this;
/// shared knobs (min_inliers, recent_exclusion) live in loop_config and are
/// propagated by the consumers.
struct run_settings {
    database_config database;
    scoring_config scoring;
    loop_config loop;
    match_options matching;
    ransac_config ransac;
    detector_config detector;
};

/// Applies one key=value pair. Unknown keys and malformed values throw
/// parse_error.
void apply_setting(run_settings& settings, std::string_view key, std::string_view value);

/// All recognized keys, in the canonical order format_config uses.
std::vector<std::string_view> config_keys();

/// Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
run_settings parse_config(std::istream& in, std::string_view origin, run_settings base = {});
run_settings load_config(const std::filesystem::path& path, run_settings base = {});

/// Canonical key=value rendering of every setting, one per line, in the
/// fixed key order (so runs can log the resolved config).
std::string format_config(const run_settings& settings);

}  // namespace bowg
