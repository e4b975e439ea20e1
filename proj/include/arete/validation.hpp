#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "arete/error.hpp"
#include "arete/geo.hpp"
#include "arete/occurrence.hpp"
#include "arete/unicode.hpp"

namespace arete {

// Unit-cost edit distance over unicode codepoints. Case matters here;
// normalize beforehand if it should not.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    const std::u32string ua = to_u32(a);
    const std::u32string ub = to_u32(b);
    if (ua.empty()) return ub.size();
    if (ub.empty()) return ua.size();
    std::vector<std::size_t> prev(ub.size() + 1);
    std::vector<std::size_t> curr(ub.size() + 1);
    for (std::size_t j = 0; j <= ub.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= ua.size(); ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= ub.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[ub.size()];
}

// Locality-recovery score: for every reference term, the distance to its
// closest extracted term, averaged. An empty extraction costs each reference
// term its own length.
inline double mean_min_levenshtein(const std::vector<std::string>& reference_terms,
                                   const std::vector<std::string>& extracted_terms) {
    if (reference_terms.empty())
        throw Error(ErrorCode::empty_reference,
                    "mean minimum distance needs at least one reference term");
    double total = 0;
    for (const auto& ref : reference_terms) {
        std::size_t best = codepoint_count(ref);
        for (const auto& ext : extracted_terms)
            best = std::min(best, levenshtein(ref, ext));
        total += static_cast<double>(best);
    }
    return total / static_cast<double>(reference_terms.size());
}

// 1 - lev/maxlen over case-and-accent-folded strings; 0 when both empty so
// locality-free records fall through to the coordinate rule.
inline double locality_similarity(std::string_view a, std::string_view b) {
    const std::string fa = fold_for_match(a);
    const std::string fb = fold_for_match(b);
    const std::size_t len = std::max(codepoint_count(fa), codepoint_count(fb));
    if (len == 0) return 0.0;
    return 1.0 - static_cast<double>(levenshtein(fa, fb)) / static_cast<double>(len);
}

struct MatchedPair {
    std::size_t pred_index = 0;
    std::size_t obs_index = 0;
    std::optional<double> coordinate_error_km;  // absent when either side lacks coordinates
    std::size_t locality_distance = 0;          // folded levenshtein
};

struct MatchSet {
    std::vector<MatchedPair> pairs;
    std::vector<std::size_t> unmatched_pred;  // false positives
    std::vector<std::size_t> unmatched_obs;   // false negatives
};

// Greedy one-to-one matching. A pred/obs pair qualifies when species match
// and either the coordinates agree within the tolerance (Chebyshev degrees)
// or the localities are at least 80% similar. Best-looking pairs (smallest
// locality distance, then coordinate error) are taken first.
inline MatchSet match_records(const std::vector<OccurrenceRecord>& pred,
                              const std::vector<OccurrenceRecord>& obs,
                              double coord_tolerance_deg = 0.02,
                              double locality_threshold = 0.8) {
    struct Candidate {
        std::size_t locality_distance;
        double coordinate_error;  // km; +inf when not comparable
        std::size_t obs_index;
        std::size_t pred_index;
    };
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        for (std::size_t o = 0; o < obs.size(); ++o) {
            if (ascii_lower(pred[p].species) != ascii_lower(obs[o].species))
                continue;
            bool coord_ok = false;
            std::optional<double> err_km;
            if (pred[p].coordinate && obs[o].coordinate) {
                const double dlat = std::abs(pred[p].coordinate->latitude -
                                             obs[o].coordinate->latitude);
                const double dlon = std::abs(pred[p].coordinate->longitude -
                                             obs[o].coordinate->longitude);
                coord_ok = std::max(dlat, dlon) <= coord_tolerance_deg;
                err_km = great_circle_km(*pred[p].coordinate, *obs[o].coordinate);
            }
            const double sim = locality_similarity(pred[p].locality, obs[o].locality);
            if (!coord_ok && sim < locality_threshold) continue;
            candidates.push_back(Candidate{
                levenshtein(fold_for_match(pred[p].locality),
                            fold_for_match(obs[o].locality)),
                err_km.value_or(std::numeric_limits<double>::infinity()), o, p});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         return std::tie(a.locality_distance, a.coordinate_error,
                                         a.obs_index, a.pred_index) <
                                std::tie(b.locality_distance, b.coordinate_error,
                                         b.obs_index, b.pred_index);
                     });

    MatchSet out;
    std::vector<bool> pred_used(pred.size(), false), obs_used(obs.size(), false);
    for (const auto& c : candidates) {
        if (pred_used[c.pred_index] || obs_used[c.obs_index]) continue;
        pred_used[c.pred_index] = true;
        obs_used[c.obs_index] = true;
        MatchedPair pair;
        pair.pred_index = c.pred_index;
        pair.obs_index = c.obs_index;
        pair.locality_distance = c.locality_distance;
        if (std::isfinite(c.coordinate_error))
            pair.coordinate_error_km = c.coordinate_error;
        out.pairs.push_back(pair);
    }
    for (std::size_t p = 0; p < pred.size(); ++p)
        if (!pred_used[p]) out.unmatched_pred.push_back(p);
    for (std::size_t o = 0; o < obs.size(); ++o)
        if (!obs_used[o]) out.unmatched_obs.push_back(o);
    return out;
}

// Real-valued so the distance-weighted and score-weighted variants can reuse
// the same metric arithmetic.
struct ConfusionCounts {
    double tp = 0, fp = 0, fn = 0;
};

struct MetricSet {
    std::optional<double> accuracy, recall, precision, f1;
};

inline std::string metric_to_string(const std::optional<double>& m) {
    if (!m) return "n/a";
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << *m;
    return os.str();
}

// Precision, recall, F1, and the TN-less accuracy TP/(TP+FP+FN). A 0/0 is
// reported as undefined, never as 0.
inline MetricSet confusion_metrics(const ConfusionCounts& c) {
    auto ratio = [](double num, double den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return num / den;
    };
    MetricSet m;
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.accuracy = ratio(c.tp, c.tp + c.fp + c.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0)
        m.f1 = 2 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

// Coordinate-error weighting: a matched pair counts as w = 1/(1 + e/ē) of a
// true positive, where e is its error and ē the mean distance from the obs
// point to the other obs points; the shortfall 1-w shows up as both missed
// (FN) and spurious (FP) mass. Pairs without coordinates keep full weight.
inline std::pair<ConfusionCounts, MetricSet> distance_weighted_metrics(
    const MatchSet& matches, const std::vector<OccurrenceRecord>& pred,
    const std::vector<OccurrenceRecord>& obs) {
    bool pred_has = false, obs_has = false;
    for (const auto& r : pred) pred_has = pred_has || r.coordinate.has_value();
    for (const auto& r : obs) obs_has = obs_has || r.coordinate.has_value();
    if (!pred_has || !obs_has)
        throw Error(ErrorCode::no_coordinate_data,
                    "distance weighting needs coordinates on both sides");

    ConfusionCounts c;
    for (const auto& pair : matches.pairs) {
        double w = 1.0;
        if (pair.coordinate_error_km) {
            const double e = *pair.coordinate_error_km;
            double scale_sum = 0;
            std::size_t scale_n = 0;
            for (std::size_t o = 0; o < obs.size(); ++o) {
                if (o == pair.obs_index || !obs[o].coordinate) continue;
                scale_sum += great_circle_km(*obs[pair.obs_index].coordinate,
                                             *obs[o].coordinate);
                ++scale_n;
            }
            const double mean_dist = scale_n ? scale_sum / scale_n : 0.0;
            if (mean_dist > 0)
                w = 1.0 / (1.0 + e / mean_dist);
            else
                w = e == 0 ? 1.0 : 0.0;
        }
        c.tp += w;
        c.fp += 1.0 - w;
        c.fn += 1.0 - w;
    }
    c.fp += static_cast<double>(matches.unmatched_pred.size());
    c.fn += static_cast<double>(matches.unmatched_obs.size());
    return {c, confusion_metrics(c)};
}

enum class ScoreSide { obs, pred };

// Human-assigned proximity scores for one table row: x grades the locality
// match, y says whether coordinates were present.
struct ScoredRow {
    double loc_score = 0;    // one of 0, 0.25, 0.5, 0.75, 1
    double coord_score = 0;  // 0 or 1
    ScoreSide side = ScoreSide::obs;
    bool claimed = false;  // pred only: already credited to a TP on the obs side
};

enum class RowClass { tp, fp, fn };

struct ClassifiedRow {
    RowClass cls;
    double weight;
};

namespace detail {

inline void check_scores(const ScoredRow& row) {
    static constexpr double allowed[] = {0, 0.25, 0.5, 0.75, 1};
    bool ok = false;
    for (double a : allowed) ok = ok || row.loc_score == a;
    if (!ok || (row.coord_score != 0 && row.coord_score != 1))
        throw Error(ErrorCode::score_out_of_range,
                    "location score must be in {0,0.25,0.5,0.75,1} and "
                    "coordinate score in {0,1}");
}

} // namespace detail

inline ClassifiedRow classify_scored_row(const ScoredRow& row) {
    detail::check_scores(row);
    const double x = row.loc_score, y = row.coord_score;
    if (row.side == ScoreSide::obs) {
        if (x == 0 && y == 0) return {RowClass::fn, 1.0};
        return {RowClass::tp, (x + y) / 2.0};
    }
    if (row.claimed) return {RowClass::tp, 0.0};
    return {RowClass::fp, (2.0 - (x + y)) / 2.0};
}

// Score-weighted confusion counting over manually graded rows.
inline std::pair<ConfusionCounts, MetricSet> weighted_f1(
    const std::vector<ScoredRow>& obs_rows,
    const std::vector<ScoredRow>& pred_rows) {
    ConfusionCounts c;
    auto add = [&](const ScoredRow& row) {
        const ClassifiedRow cr = classify_scored_row(row);
        switch (cr.cls) {
            case RowClass::tp: c.tp += cr.weight; break;
            case RowClass::fp: c.fp += cr.weight; break;
            case RowClass::fn: c.fn += cr.weight; break;
        }
    };
    for (const auto& row : obs_rows) {
        if (row.side != ScoreSide::obs)
            throw Error(ErrorCode::invalid_argument,
                        "obs_rows contains a pred-side row");
        add(row);
    }
    for (const auto& row : pred_rows) {
        if (row.side != ScoreSide::pred)
            throw Error(ErrorCode::invalid_argument,
                        "pred_rows contains an obs-side row");
        add(row);
    }
    return {c, confusion_metrics(c)};
}

namespace detail {

inline void write_metric_table(std::ostream& os, const ConfusionCounts& c,
                               const MetricSet& m) {
    os << "| tp | fp | fn | accuracy | recall | precision | f1 |\n";
    os << "|---|---|---|---|---|---|---|\n";
    os << "| " << csv::format_double(c.tp) << " | " << csv::format_double(c.fp)
       << " | " << csv::format_double(c.fn) << " | " << metric_to_string(m.accuracy)
       << " | " << metric_to_string(m.recall) << " | "
       << metric_to_string(m.precision) << " | " << metric_to_string(m.f1)
       << " |\n";
}

inline void write_report_body(std::ostream& os, const std::string& title,
                              const std::vector<OccurrenceRecord>& pred,
                              const std::vector<OccurrenceRecord>& obs,
                              double coord_tolerance_deg) {
    const MatchSet matches = match_records(pred, obs, coord_tolerance_deg);
    const ConfusionCounts counts{static_cast<double>(matches.pairs.size()),
                                 static_cast<double>(matches.unmatched_pred.size()),
                                 static_cast<double>(matches.unmatched_obs.size())};
    os << "# " << title << "\n\n";
    os << "Records: " << pred.size() << " extracted, " << obs.size()
       << " reference.\n\n";
    os << "## Confusion metrics\n\n";
    write_metric_table(os, counts, confusion_metrics(counts));
    os << "\n## Distance-weighted metrics\n\n";
    try {
        const auto [wc, wm] = distance_weighted_metrics(matches, pred, obs);
        write_metric_table(os, wc, wm);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::no_coordinate_data) throw;
        os << "Not available: no coordinate data on one or both sides.\n";
    }
    os << "\n## Locality recovery\n\n";
    std::vector<std::string> ref_terms, ext_terms;
    for (const auto& r : obs)
        if (!r.locality.empty()) ref_terms.push_back(fold_for_match(r.locality));
    for (const auto& r : pred)
        if (!r.locality.empty()) ext_terms.push_back(fold_for_match(r.locality));
    if (ref_terms.empty()) {
        os << "Mean minimum edit distance: n/a (no reference localities).\n";
    } else {
        os << "Mean minimum edit distance: "
           << csv::format_double(mean_min_levenshtein(ref_terms, ext_terms))
           << "\n";
    }
}

} // namespace detail

// Writes one markdown report per species present in either dataset, plus a
// global one. Returns the written file paths, global report first.
inline std::vector<std::filesystem::path> performance_report(
    const std::vector<OccurrenceRecord>& pred,
    const std::vector<OccurrenceRecord>& obs,
    const std::filesystem::path& out_dir, double coord_tolerance_deg = 0.02) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir))
        throw Error(ErrorCode::io_error,
                    "cannot create report directory: " + out_dir.string());

    std::vector<std::string> species_order;
    std::set<std::string> seen;
    for (const auto& r : obs)
        if (seen.insert(r.species).second) species_order.push_back(r.species);
    for (const auto& r : pred)
        if (seen.insert(r.species).second) species_order.push_back(r.species);

    auto write_file = [&](const std::filesystem::path& path, const std::string& title,
                          const std::vector<OccurrenceRecord>& p,
                          const std::vector<OccurrenceRecord>& o) {
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw Error(ErrorCode::io_error, "cannot write report: " + path.string());
        detail::write_report_body(os, title, p, o, coord_tolerance_deg);
        if (!os)
            throw Error(ErrorCode::io_error, "write failed: " + path.string());
    };

    std::vector<std::filesystem::path> written;
    const auto global_path = out_dir / "global.md";
    write_file(global_path, "Validation report (all species)", pred, obs);
    written.push_back(global_path);

    for (const auto& species : species_order) {
        std::vector<OccurrenceRecord> p, o;
        for (const auto& r : pred)
            if (r.species == species) p.push_back(r);
        for (const auto& r : obs)
            if (r.species == species) o.push_back(r);
        const auto path = out_dir / (species_slug(species) + ".md");
        write_file(path, "Validation report: " + species, p, o);
        written.push_back(path);
    }
    return written;
}

} // namespace arete
