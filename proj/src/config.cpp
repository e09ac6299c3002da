#include "bowg/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include <fmt/format.h>

namespace bowg {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double to_double(std::string_view key, std::string_view value) {
    double out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw parse_error(fmt::format("{}: expected a number, got '{}'", key, value));
    return out;
}

template <typename T>
T to_unsigned(std::string_view key, std::string_view value) {
    T out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw parse_error(fmt::format("{}: expected a nonnegative integer, got '{}'", key, value));
    return out;
}

int to_int(std::string_view key, std::string_view value) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw parse_error(fmt::format("{}: expected an integer, got '{}'", key, value));
    return out;
}

bool to_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw parse_error(fmt::format("{}: expected true/false, got '{}'", key, value));
}

std::string from_bool(bool v) { return v ? "true" : "false"; }

struct key_entry {
    const char* name;
    void (*apply)(run_settings&, std::string_view);
    std::string (*format)(const run_settings&);
};

// One row per config key; apply and the resolved-config printer stay in sync.
constexpr auto k = [](const char* name, void (*apply)(run_settings&, std::string_view),
                      std::string (*format)(const run_settings&)) {
    return key_entry{name, apply, format};
};

const key_entry key_table[] = {
    k(
        "di_level", [](run_settings& s, std::string_view v) { s.database.di_level = to_unsigned<unsigned>("di_level", v); },
        [](const run_settings& s) { return fmt::format("{}", s.database.di_level); }),
    k(
        "m_batches", [](run_settings& s, std::string_view v) { s.database.m_batches = to_unsigned<unsigned>("m_batches", v); },
        [](const run_settings& s) { return fmt::format("{}", s.database.m_batches); }),
    k(
        "refresh_refined", [](run_settings& s, std::string_view v) { s.database.refresh_refined = to_bool("refresh_refined", v); },
        [](const run_settings& s) { return from_bool(s.database.refresh_refined); }),
    k(
        "lambda1", [](run_settings& s, std::string_view v) { s.scoring.lambda1 = to_double("lambda1", v); },
        [](const run_settings& s) { return fmt::format("{}", s.scoring.lambda1); }),
    k(
        "lambda2", [](run_settings& s, std::string_view v) { s.scoring.lambda2 = to_double("lambda2", v); },
        [](const run_settings& s) { return fmt::format("{}", s.scoring.lambda2); }),
    k(
        "use_distribution", [](run_settings& s, std::string_view v) { s.scoring.use_distribution = to_bool("use_distribution", v); },
        [](const run_settings& s) { return from_bool(s.scoring.use_distribution); }),
    k(
        "w_max", [](run_settings& s, std::string_view v) { s.scoring.w_max = to_double("w_max", v); },
        [](const run_settings& s) { return fmt::format("{}", s.scoring.w_max); }),
    k(
        "alpha_temporal", [](run_settings& s, std::string_view v) { s.scoring.alpha_temporal = to_double("alpha_temporal", v); },
        [](const run_settings& s) { return fmt::format("{}", s.scoring.alpha_temporal); }),
    k(
        "min_self_score", [](run_settings& s, std::string_view v) { s.scoring.min_self_score = to_double("min_self_score", v); },
        [](const run_settings& s) { return fmt::format("{}", s.scoring.min_self_score); }),
    k(
        "distribution_literal_max",
        [](run_settings& s, std::string_view v) { s.scoring.distribution_literal_max = to_bool("distribution_literal_max", v); },
        [](const run_settings& s) { return from_bool(s.scoring.distribution_literal_max); }),
    k(
        "alpha_threshold", [](run_settings& s, std::string_view v) { s.loop.alpha_threshold = to_double("alpha_threshold", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.alpha_threshold); }),
    k(
        "max_island_gap", [](run_settings& s, std::string_view v) { s.loop.max_island_gap = to_unsigned<unsigned>("max_island_gap", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.max_island_gap); }),
    k(
        "k_temporal", [](run_settings& s, std::string_view v) { s.loop.k_temporal = to_unsigned<unsigned>("k_temporal", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.k_temporal); }),
    k(
        "delta_t", [](run_settings& s, std::string_view v) { s.loop.delta_t = to_unsigned<unsigned>("delta_t", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.delta_t); }),
    k(
        "overlap_slack", [](run_settings& s, std::string_view v) { s.loop.overlap_slack = to_unsigned<unsigned>("overlap_slack", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.overlap_slack); }),
    k(
        "recent_exclusion", [](run_settings& s, std::string_view v) { s.loop.recent_exclusion = to_unsigned<unsigned>("recent_exclusion", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.recent_exclusion); }),
    k(
        "min_inliers", [](run_settings& s, std::string_view v) { s.loop.min_inliers = to_unsigned<unsigned>("min_inliers", v); },
        [](const run_settings& s) { return fmt::format("{}", s.loop.min_inliers); }),
    k(
        "use_geometric", [](run_settings& s, std::string_view v) { s.loop.use_geometric = to_bool("use_geometric", v); },
        [](const run_settings& s) { return from_bool(s.loop.use_geometric); }),
    k(
        "history_accepted_only",
        [](run_settings& s, std::string_view v) { s.loop.history_accepted_only = to_bool("history_accepted_only", v); },
        [](const run_settings& s) { return from_bool(s.loop.history_accepted_only); }),
    k(
        "max_hamming", [](run_settings& s, std::string_view v) { s.matching.max_hamming = to_unsigned<unsigned>("max_hamming", v); },
        [](const run_settings& s) { return fmt::format("{}", s.matching.max_hamming); }),
    k(
        "ratio", [](run_settings& s, std::string_view v) { s.matching.ratio = to_double("ratio", v); },
        [](const run_settings& s) { return fmt::format("{}", s.matching.ratio); }),
    k(
        "epi_threshold", [](run_settings& s, std::string_view v) { s.ransac.epi_threshold = to_double("epi_threshold", v); },
        [](const run_settings& s) { return fmt::format("{}", s.ransac.epi_threshold); }),
    k(
        "ransac_iters", [](run_settings& s, std::string_view v) { s.ransac.max_iters = to_unsigned<unsigned>("ransac_iters", v); },
        [](const run_settings& s) { return fmt::format("{}", s.ransac.max_iters); }),
    k(
        "ransac_seed", [](run_settings& s, std::string_view v) { s.ransac.seed = to_unsigned<std::uint64_t>("ransac_seed", v); },
        [](const run_settings& s) { return fmt::format("{}", s.ransac.seed); }),
    k(
        "max_features", [](run_settings& s, std::string_view v) { s.detector.max_features = to_int("max_features", v); },
        [](const run_settings& s) { return fmt::format("{}", s.detector.max_features); }),
    k(
        "n_levels", [](run_settings& s, std::string_view v) { s.detector.n_levels = to_int("n_levels", v); },
        [](const run_settings& s) { return fmt::format("{}", s.detector.n_levels); }),
    k(
        "scale_factor", [](run_settings& s, std::string_view v) { s.detector.scale_factor = to_double("scale_factor", v); },
        [](const run_settings& s) { return fmt::format("{}", s.detector.scale_factor); }),
    k(
        "fast_threshold", [](run_settings& s, std::string_view v) { s.detector.fast_threshold = to_int("fast_threshold", v); },
        [](const run_settings& s) { return fmt::format("{}", s.detector.fast_threshold); }),
    k(
        "patch_size", [](run_settings& s, std::string_view v) { s.detector.patch_size = to_int("patch_size", v); },
        [](const run_settings& s) { return fmt::format("{}", s.detector.patch_size); }),
};

}  // namespace

std::vector<std::string_view> config_keys() {
    std::vector<std::string_view> keys;
    for (const key_entry& entry : key_table) keys.push_back(entry.name);
    return keys;
}

void apply_setting(run_settings& settings, std::string_view key, std::string_view value) {
    for (const key_entry& entry : key_table) {
        if (key == entry.name) {
            entry.apply(settings, value);
            return;
        }
    }
    throw parse_error(fmt::format("unknown config key '{}'", key));
}

run_settings parse_config(std::istream& in, std::string_view origin, run_settings base) {
    std::string line;
    unsigned line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw parse_error(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
        try {
            apply_setting(base, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        } catch (const parse_error& e) {
            throw parse_error(fmt::format("{}:{}: {}", origin, line_no, e.what()));
        }
    }
    return base;
}

run_settings load_config(const std::filesystem::path& path, run_settings base) {
    std::ifstream in(path);
    if (!in) throw io_error(fmt::format("cannot open {}", path.string()));
    return parse_config(in, path.string(), base);
}

std::string format_config(const run_settings& settings) {
    std::string out;
    for (const key_entry& entry : key_table)
        out += fmt::format("{} = {}\n", entry.name, entry.format(settings));
    return out;
}

}  // namespace bowg
