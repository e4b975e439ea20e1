#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "arete/error.hpp"
#include "arete/geo.hpp"
#include "arete/occurrence.hpp"
#include "arete/svm.hpp"

namespace arete {

enum class OutlierMethod { geo, env, svm };

struct OutlierConfig {
    double quantile = 0.95;  // (0, 1]
    std::vector<OutlierMethod> methods = {OutlierMethod::geo, OutlierMethod::env,
                                          OutlierMethod::svm};
    int min_points = 5;
    double svm_c = 1.0;
    double svm_gamma = 0;            // 0 = 1 / n_features
    int pseudo_absence_count = 0;    // 0 = max(100, 2 * n_presence)
    std::uint32_t rng_seed = 0;

    bool has_method(OutlierMethod m) const {
        return std::find(methods.begin(), methods.end(), m) != methods.end();
    }

    void validate() const {
        if (!(quantile > 0.0 && quantile <= 1.0))
            throw Error(ErrorCode::invalid_argument, "quantile must be in (0, 1]");
        if (methods.empty())
            throw Error(ErrorCode::invalid_argument, "no outlier methods selected");
        if (min_points < 1)
            throw Error(ErrorCode::invalid_argument, "min_points must be >= 1");
    }
};

// Empirical quantile, linear interpolation between order statistics (the
// common spreadsheet/statistics-package convention).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty())
        throw Error(ErrorCode::empty_input, "quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0))
        throw Error(ErrorCode::invalid_argument, "quantile level must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

// Result of one method over one point list. Stats/flags are absent for
// points that could not be assessed (e.g. off-grid).
struct MethodResult {
    std::vector<std::optional<double>> stats;
    std::vector<std::optional<bool>> flags;
    std::optional<double> threshold;
    bool degenerate = false;  // fewer than min_points, flags forced off
    int warnings = 0;
};

namespace detail {

// flags = stat strictly above the configured quantile of present stats
inline void apply_threshold(MethodResult& result, const OutlierConfig& cfg,
                            std::size_t assessed_count) {
    if (assessed_count < static_cast<std::size_t>(cfg.min_points)) {
        result.degenerate = true;
        for (std::size_t i = 0; i < result.stats.size(); ++i)
            if (result.stats[i]) result.flags[i] = false;
        return;
    }
    std::vector<double> sample;
    for (const auto& s : result.stats)
        if (s) sample.push_back(*s);
    result.threshold = quantile(sample, cfg.quantile);
    for (std::size_t i = 0; i < result.stats.size(); ++i)
        if (result.stats[i]) result.flags[i] = *result.stats[i] > *result.threshold;
}

} // namespace detail

// Mean great-circle distance from each point to all others; flag points whose
// mean exceeds the quantile threshold.
inline MethodResult detect_outliers_geo(const std::vector<Coordinate>& points,
                                        const OutlierConfig& cfg) {
    cfg.validate();
    const std::size_t n = points.size();
    MethodResult result;
    result.stats.resize(n);
    result.flags.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (n == 1) {
            result.stats[i] = 0.0;
            continue;
        }
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sum += great_circle_km(points[i], points[j]);
        result.stats[i] = sum / static_cast<double>(n - 1);
    }
    detail::apply_threshold(result, cfg, n);
    return result;
}

// Same statistic in normalized feature space: mean euclidean distance between
// each point's environmental vector and the others'. Points the grid cannot
// resolve get absent stats and a warning, and do not affect the rest.
inline MethodResult detect_outliers_env(const std::vector<Coordinate>& points,
                                        const EnvFeatureGrid& grid,
                                        const OutlierConfig& cfg) {
    cfg.validate();
    const std::size_t n = points.size();
    MethodResult result;
    result.stats.resize(n);
    result.flags.resize(n);
    std::vector<const std::vector<double>*> vectors(n, nullptr);
    std::size_t resolved = 0;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            vectors[i] = &grid.env_vector_at(points[i]);
            ++resolved;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::outside_grid) throw;
            ++result.warnings;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!vectors[i]) continue;
        if (resolved == 1) {
            result.stats[i] = 0.0;
            continue;
        }
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && vectors[j]) sum += env_distance(*vectors[i], *vectors[j]);
        result.stats[i] = sum / static_cast<double>(resolved - 1);
    }
    detail::apply_threshold(result, cfg, resolved);
    return result;
}

// Environmental-envelope classification: presences against true absences when
// given, otherwise pseudo-absences sampled (seeded, with replacement) from
// populated cells that hold no presence point. A point classified with the
// absence class (decision < 0) is flagged.
inline MethodResult detect_outliers_svm(
    const std::vector<Coordinate>& points, const EnvFeatureGrid& grid,
    const OutlierConfig& cfg,
    const std::optional<std::vector<Coordinate>>& true_absences = std::nullopt) {
    cfg.validate();
    const std::size_t n = points.size();
    MethodResult result;
    result.stats.resize(n);  // svm has no distance statistic
    result.flags.resize(n);

    std::vector<std::vector<double>> presence;
    std::vector<std::size_t> presence_index;
    std::set<EnvFeatureGrid::CellKey> presence_cells;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            presence.push_back(grid.env_vector_at(points[i]));
            presence_index.push_back(i);
            presence_cells.insert(grid.cell_of(points[i]));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::outside_grid) throw;
            ++result.warnings;
        }
    }
    if (presence.size() < static_cast<std::size_t>(cfg.min_points))
        throw Error(ErrorCode::insufficient_points,
                    "svm outlier detection needs at least " +
                        std::to_string(cfg.min_points) +
                        " resolvable points, got " +
                        std::to_string(presence.size()));

    std::vector<std::vector<double>> absence;
    if (true_absences) {
        for (const auto& p : *true_absences) {
            try {
                absence.push_back(grid.env_vector_at(p));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::outside_grid) throw;
                ++result.warnings;
            }
        }
    } else {
        std::vector<EnvFeatureGrid::CellKey> candidates;
        for (const auto& [key, vec] : grid.cells())
            if (!presence_cells.count(key)) candidates.push_back(key);
        if (candidates.empty())
            throw Error(ErrorCode::degenerate_classes,
                        "no grid cells left for pseudo-absence sampling");
        const int count = cfg.pseudo_absence_count > 0
                              ? cfg.pseudo_absence_count
                              : std::max<int>(100, 2 * static_cast<int>(presence.size()));
        std::mt19937 rng(cfg.rng_seed);
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        for (int i = 0; i < count; ++i)
            absence.push_back(*grid.cell_features(candidates[pick(rng)]));
    }

    SvmParams params;
    params.c = cfg.svm_c;
    params.gamma = cfg.svm_gamma;
    params.rng_seed = cfg.rng_seed;
    const SvmModel model = train_svm(presence, absence, params);
    for (std::size_t k = 0; k < presence.size(); ++k)
        result.flags[presence_index[k]] = svm_decision(model, presence[k]) < 0;
    return result;
}

// One line of the merged report, parallel to the input record list.
struct OutlierRow {
    std::size_t record_index = 0;
    std::string species;
    std::optional<Coordinate> coordinate;
    std::optional<double> geo_stat, env_stat;
    std::optional<bool> geo_flag, env_flag, svm_flag;
    bool assessed = false;
};

struct SpeciesThresholds {
    std::optional<double> geo, env;
};

struct OutlierReport {
    std::vector<OutlierRow> rows;
    std::map<std::string, SpeciesThresholds> thresholds;
    std::vector<std::string> notices;
};

// Runs the requested methods per species, never touching the records
// themselves. Records without coordinates appear in the report unassessed.
inline OutlierReport detect_outliers(const std::vector<OccurrenceRecord>& records,
                                     const EnvFeatureGrid* grid,
                                     const OutlierConfig& cfg) {
    cfg.validate();
    const bool needs_grid =
        cfg.has_method(OutlierMethod::env) || cfg.has_method(OutlierMethod::svm);
    if (needs_grid && !grid)
        throw Error(ErrorCode::missing_grid,
                    "env/svm outlier methods need an environmental grid");

    OutlierReport report;
    report.rows.resize(records.size());
    // species in order of first appearance, with their assessable records
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& row = report.rows[i];
        row.record_index = i;
        row.species = records[i].species;
        row.coordinate = records[i].coordinate;
        if (!records[i].coordinate) continue;
        if (!groups.count(records[i].species)) order.push_back(records[i].species);
        groups[records[i].species].push_back(i);
    }

    for (const auto& species : order) {
        const auto& indices = groups[species];
        std::vector<Coordinate> points;
        for (std::size_t idx : indices) points.push_back(*records[idx].coordinate);
        auto& thresholds = report.thresholds[species];

        if (cfg.has_method(OutlierMethod::geo)) {
            const MethodResult r = detect_outliers_geo(points, cfg);
            thresholds.geo = r.threshold;
            if (r.degenerate)
                report.notices.push_back(species + ": fewer than " +
                                         std::to_string(cfg.min_points) +
                                         " points, geo flags disabled");
            for (std::size_t k = 0; k < indices.size(); ++k) {
                report.rows[indices[k]].geo_stat = r.stats[k];
                report.rows[indices[k]].geo_flag = r.flags[k];
            }
        }
        if (cfg.has_method(OutlierMethod::env)) {
            const MethodResult r = detect_outliers_env(points, *grid, cfg);
            thresholds.env = r.threshold;
            if (r.degenerate)
                report.notices.push_back(species + ": fewer than " +
                                         std::to_string(cfg.min_points) +
                                         " resolvable points, env flags disabled");
            if (r.warnings > 0)
                report.notices.push_back(species + ": " +
                                         std::to_string(r.warnings) +
                                         " point(s) outside the grid");
            for (std::size_t k = 0; k < indices.size(); ++k) {
                report.rows[indices[k]].env_stat = r.stats[k];
                report.rows[indices[k]].env_flag = r.flags[k];
            }
        }
        if (cfg.has_method(OutlierMethod::svm)) {
            try {
                const MethodResult r = detect_outliers_svm(points, *grid, cfg);
                for (std::size_t k = 0; k < indices.size(); ++k)
                    report.rows[indices[k]].svm_flag = r.flags[k];
            } catch (const Error& e) {
                if (e.code() != ErrorCode::insufficient_points &&
                    e.code() != ErrorCode::degenerate_classes)
                    throw;
                report.notices.push_back(species + ": svm skipped (" +
                                         e.what() + std::string(")"));
            }
        }
        for (std::size_t idx : indices) report.rows[idx].assessed = true;
    }
    return report;
}

inline constexpr std::string_view kOutlierCsvHeader =
    "species,latitude,longitude,geo_stat,geo_flag,env_stat,env_flag,svm_flag,assessed";

inline void write_outlier_csv(std::ostream& os, const OutlierReport& report) {
    os << kOutlierCsvHeader << '\n';
    auto opt_stat = [](const std::optional<double>& v) {
        return v ? csv::format_double(*v) : std::string();
    };
    auto opt_flag = [](const std::optional<bool>& v) {
        return v ? std::string(*v ? "true" : "false") : std::string();
    };
    for (const auto& row : report.rows) {
        csv::write_row(os, {row.species,
                            row.coordinate ? csv::format_double(row.coordinate->latitude)
                                           : std::string(),
                            row.coordinate ? csv::format_double(row.coordinate->longitude)
                                           : std::string(),
                            opt_stat(row.geo_stat), opt_flag(row.geo_flag),
                            opt_stat(row.env_stat), opt_flag(row.env_flag),
                            opt_flag(row.svm_flag),
                            row.assessed ? "true" : "false"});
    }
}

} // namespace arete
