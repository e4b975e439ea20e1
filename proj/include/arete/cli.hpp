#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "arete/error.hpp"
#include "arete/extraction.hpp"
#include "arete/gbif.hpp"
#include "arete/geo.hpp"
#include "arete/ingest.hpp"
#include "arete/llm.hpp"
#include "arete/occurrence.hpp"
#include "arete/outlier.hpp"
#include "arete/validation.hpp"

namespace arete {

// 0 success, 2 bad input, 3 network or auth trouble, 4 ran fine but the model
// produced no data
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNetworkError = 3;
inline constexpr int kExitNoData = 4;

namespace cli_detail {

inline int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::network_error:
        case ErrorCode::auth_error:
        case ErrorCode::api_error:
        case ErrorCode::timeout:
        case ErrorCode::rate_limit_exhausted:
            return kExitNetworkError;
        default:
            return kExitInputError;
    }
}

// Flat key=value config files. CLI11 only applies a config option on the top
// level app, not on subcommands, so the file is read by hand and applied to
// whichever options the command line left untouched (flag > file > env).
inline std::map<std::string, std::string> read_flat_config(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorCode::file_not_found, "config file not found: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::invalid_argument,
                        path + ":" + std::to_string(line_no) +
                            ": expected key=value");
        entries[std::string(trim(t.substr(0, eq)))] =
            std::string(trim(t.substr(eq + 1)));
    }
    return entries;
}

inline int config_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument,
                "config key " + key + " needs an integer, got \"" + value + "\"");
}

inline double config_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument,
                "config key " + key + " needs a number, got \"" + value + "\"");
}

inline unsigned config_unsigned(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(value, &pos);
        if (pos == value.size() && v <= std::numeric_limits<unsigned>::max())
            return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument,
                "config key " + key + " needs an unsigned integer, got \"" +
                    value + "\"");
}

inline bool config_bool(const std::string& key, const std::string& value) {
    const std::string v = ascii_lower(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::invalid_argument,
                "config key " + key + " needs true or false, got \"" + value +
                    "\"");
}

using ConfigSetters = std::map<std::string, std::function<void(const std::string&)>>;

inline void apply_flat_config(const CLI::App& sub, const std::string& path,
                              const ConfigSetters& setters) {
    if (path.empty()) return;
    for (const auto& [key, value] : read_flat_config(path)) {
        const auto it = setters.find(key);
        if (it == setters.end())
            throw Error(ErrorCode::invalid_argument,
                        "unknown config key \"" + key + "\" in " + path);
        if (sub.count("--" + key) > 0) continue;  // command line wins
        it->second(value);
    }
}

struct SharedOptions {
    std::string config_path;
    bool verbose = false;
};

struct ExtractOptions : SharedOptions {
    std::vector<std::string> inputs;
    std::string tax;
    std::string key;
    std::string tier = "free";
    std::string service = "openai";
    std::string model = "gpt-3.5-turbo-1106";
    std::string endpoint = "https://api.openai.com/v1";
    std::string out_path;
    std::string replay_dir;
    std::string pdf_extractor_cmd = IngestOptions{}.pdf_extractor_cmd;
    int token_budget = kDefaultTokenBudget;
    int jobs = 1;
    int rpm = 0;
    int max_retries = 3;
    double timeout_seconds = 30.0;
};

struct OutlierOptions : SharedOptions {
    std::string records_path;
    std::string grid_path;
    std::string methods;  // comma-separated; empty = geo, or all with a grid
    std::string out_path;
    double quantile = 0.95;
    int min_points = 5;
    unsigned seed = 0;
};

struct ReportOptions : SharedOptions {
    std::string pred_path;
    std::string obs_path;
    std::string out_dir = "reports";
    double tolerance_deg = 0.02;
};

struct CompareOptions : SharedOptions {
    std::string extracted_path;
    std::vector<std::string> species;
    std::string gbif_fixture_dir;
    std::string gbif_endpoint = "https://api.gbif.org/v1";
    std::string boundaries_path;
    std::string out_prefix;
    int limit = 300;
};

struct DocumentResult {
    std::vector<OccurrenceRecord> records;
    ParseStats stats;
    int no_table_chunks = 0;
    int chunk_count = 0;
    std::string document_id;
};

inline DocumentResult process_document(const std::string& path,
                                       const ExtractOptions& opts,
                                       const FixtureStore* store,
                                       LlmClient* client, std::ostream& err,
                                       std::mutex& err_mutex) {
    DocumentResult result;
    const Document doc = load_document(path, IngestOptions{opts.pdf_extractor_cmd});
    result.document_id = doc.id;
    const auto chunks = chunk_document(doc, opts.token_budget);
    result.chunk_count = static_cast<int>(chunks.size());
    if (opts.verbose) {
        std::lock_guard lk(err_mutex);
        err << doc.id << ": " << chunks.size() << " chunk(s), "
            << codepoint_count(doc.sanitized_text) << " codepoints\n";
    }
    std::vector<RawRow> rows;
    for (const auto& chunk : chunks) {
        const PromptText prompt = build_prompt(chunk);
        const CompletionResult completion =
            store ? store->replay_completion(prompt)
                  : client->request_completion(prompt);
        try {
            auto parsed = parse_response_table(
                completion.text, ChunkRef{doc.id, chunk.index}, &result.stats);
            if (opts.verbose) {
                std::lock_guard lk(err_mutex);
                err << doc.id << "#" << chunk.index << ": " << parsed.size()
                    << " row(s), attempts=" << completion.attempts << "\n";
            }
            rows.insert(rows.end(), parsed.begin(), parsed.end());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::no_table_found) throw;
            ++result.no_table_chunks;
            if (opts.verbose) {
                std::lock_guard lk(err_mutex);
                err << doc.id << "#" << chunk.index << ": no table in reply\n";
            }
        }
    }
    std::optional<std::string> tax;
    if (!opts.tax.empty()) tax = opts.tax;
    result.records = assemble_records(rows, tax, &result.stats);
    return result;
}

inline int cmd_extract(const ExtractOptions& opts, std::ostream& out,
                       std::ostream& err) {
    std::optional<FixtureStore> store;
    std::optional<LlmClient> client;
    std::mutex err_mutex;
    if (!opts.replay_dir.empty()) {
        store.emplace(opts.replay_dir);
    } else {
        if (opts.service != "openai")
            throw Error(ErrorCode::invalid_argument,
                        "unsupported service \"" + opts.service +
                            "\" (only \"openai\"-compatible endpoints for now)");
        LlmConfig cfg;
        cfg.endpoint_url = opts.endpoint;
        cfg.api_key = opts.key;
        if (cfg.api_key.empty())
            if (const char* env = std::getenv("ARETE_API_KEY")) cfg.api_key = env;
        if (cfg.api_key.empty())
            throw Error(ErrorCode::invalid_argument,
                        "no API key: pass --key, set it in the config file, or "
                        "export ARETE_API_KEY");
        cfg.model_name = opts.model;
        cfg.tier = opts.tier == "premium" ? Tier::premium : Tier::free;
        cfg.requests_per_minute = opts.rpm;
        cfg.max_retries = opts.max_retries;
        cfg.timeout_seconds = opts.timeout_seconds;
        LlmHooks hooks;
        if (opts.verbose)
            hooks.log = [&err, &err_mutex](std::string_view line) {
                std::lock_guard lk(err_mutex);
                err << line << "\n";
            };
        client.emplace(cfg, hooks);
    }

    std::vector<DocumentResult> results(opts.inputs.size());
    std::vector<std::exception_ptr> failures(opts.inputs.size());
    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1 || opts.inputs.size() <= 1) {
        for (std::size_t i = 0; i < opts.inputs.size(); ++i)
            results[i] = process_document(opts.inputs[i], opts,
                                          store ? &*store : nullptr,
                                          client ? &*client : nullptr, err,
                                          err_mutex);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= opts.inputs.size()) return;
                try {
                    results[i] = process_document(opts.inputs[i], opts,
                                                  store ? &*store : nullptr,
                                                  client ? &*client : nullptr,
                                                  err, err_mutex);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(jobs, opts.inputs.size()); ++t)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (const auto& f : failures)
            if (f) std::rethrow_exception(f);
    }

    // merge in input order so output does not depend on scheduling
    std::vector<OccurrenceRecord> records;
    ParseStats stats;
    int no_table_chunks = 0;
    for (const auto& r : results) {
        records.insert(records.end(), r.records.begin(), r.records.end());
        stats += r.stats;
        no_table_chunks += r.no_table_chunks;
    }

    if (opts.out_path.empty()) {
        write_records_csv(out, records);
    } else {
        std::ofstream os(opts.out_path, std::ios::binary);
        if (!os)
            throw Error(ErrorCode::io_error, "cannot write " + opts.out_path);
        write_records_csv(os, records);
    }
    if (opts.verbose) {
        err << records.size() << " record(s); skipped rows " << stats.skipped_rows
            << ", dropped rows " << stats.dropped_rows << ", duplicates "
            << stats.duplicate_rows << ", unparsed coordinates "
            << stats.unparsed_coordinates << ", out-of-range coordinates "
            << stats.invalid_coordinates << ", hemisphere conflicts "
            << stats.hemisphere_conflicts << "\n";
    }
    if (records.empty() && no_table_chunks > 0) return kExitNoData;
    return kExitOk;
}

inline int cmd_outliers(const OutlierOptions& opts, std::ostream& out,
                        std::ostream& err) {
    const auto records = read_records_csv_file(opts.records_path);
    OutlierConfig cfg;
    cfg.quantile = opts.quantile;
    cfg.min_points = opts.min_points;
    cfg.rng_seed = opts.seed;
    cfg.methods.clear();
    std::string methods = opts.methods;
    if (methods.empty())
        methods = opts.grid_path.empty() ? "geo" : "geo,env,svm";
    std::stringstream ss(methods);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item == "geo")
            cfg.methods.push_back(OutlierMethod::geo);
        else if (item == "env")
            cfg.methods.push_back(OutlierMethod::env);
        else if (item == "svm")
            cfg.methods.push_back(OutlierMethod::svm);
        else if (!item.empty())
            throw Error(ErrorCode::invalid_argument,
                        "unknown outlier method \"" + item + "\"");
    }

    std::optional<EnvFeatureGrid> grid;
    if (!opts.grid_path.empty())
        grid = EnvFeatureGrid::from_csv(opts.grid_path).normalize_features();

    const OutlierReport report =
        detect_outliers(records, grid ? &*grid : nullptr, cfg);

    if (opts.out_path.empty()) {
        write_outlier_csv(out, report);
    } else {
        std::ofstream os(opts.out_path, std::ios::binary);
        if (!os)
            throw Error(ErrorCode::io_error, "cannot write " + opts.out_path);
        write_outlier_csv(os, report);
    }
    if (opts.verbose) {
        std::map<std::string, int> flag_counts;
        for (const auto& row : report.rows) {
            int f = 0;
            f += row.geo_flag.value_or(false) ? 1 : 0;
            f += row.env_flag.value_or(false) ? 1 : 0;
            f += row.svm_flag.value_or(false) ? 1 : 0;
            if (f > 0) ++flag_counts[row.species];
        }
        for (const auto& [species, count] : flag_counts)
            err << species << ": " << count << " flagged record(s)\n";
        for (const auto& notice : report.notices) err << notice << "\n";
    }
    return kExitOk;
}

inline int cmd_report(const ReportOptions& opts, std::ostream& out,
                      std::ostream& err) {
    const auto pred = read_records_csv_file(opts.pred_path);
    const auto obs = read_records_csv_file(opts.obs_path);
    const auto written =
        performance_report(pred, obs, opts.out_dir, opts.tolerance_deg);

    const MatchSet matches = match_records(pred, obs, opts.tolerance_deg);
    const ConfusionCounts counts{static_cast<double>(matches.pairs.size()),
                                 static_cast<double>(matches.unmatched_pred.size()),
                                 static_cast<double>(matches.unmatched_obs.size())};
    const MetricSet m = confusion_metrics(counts);
    out << "tp=" << csv::format_double(counts.tp)
        << " fp=" << csv::format_double(counts.fp)
        << " fn=" << csv::format_double(counts.fn)
        << " accuracy=" << metric_to_string(m.accuracy)
        << " recall=" << metric_to_string(m.recall)
        << " precision=" << metric_to_string(m.precision)
        << " f1=" << metric_to_string(m.f1) << "\n";
    if (opts.verbose)
        err << "wrote " << written.size() << " report(s) to " << opts.out_dir
            << "\n";
    return kExitOk;
}

inline int cmd_compare(const CompareOptions& opts, std::ostream& out,
                       std::ostream& err) {
    const auto extracted = read_records_csv_file(opts.extracted_path);

    std::vector<std::string> species = opts.species;
    if (species.empty()) {
        std::set<std::string> seen;
        for (const auto& r : extracted)
            if (seen.insert(r.species).second) species.push_back(r.species);
    }

    GbifConfig gbif_cfg;
    gbif_cfg.endpoint_url = opts.gbif_endpoint;
    if (!opts.gbif_fixture_dir.empty()) {
        gbif_cfg.backend = GbifBackend::fixture;
        gbif_cfg.fixture_dir = opts.gbif_fixture_dir;
    }

    std::vector<OccurrenceRecord> gbif;
    for (const auto& s : species) {
        auto batch = fetch_occurrences(s, opts.limit, gbif_cfg);
        if (opts.verbose)
            err << s << ": " << batch.size() << " GBIF record(s)\n";
        gbif.insert(gbif.end(), batch.begin(), batch.end());
    }

    std::optional<std::vector<NamedPolygon>> boundaries;
    if (!opts.boundaries_path.empty())
        boundaries = load_boundaries_json(opts.boundaries_path);

    const ComparisonSummary summary = compare_datasets(
        extracted, gbif, boundaries ? &*boundaries : nullptr);
    const nlohmann::json j = comparison_to_json(summary);
    if (opts.out_prefix.empty()) {
        out << j.dump(2) << "\n";
    } else {
        std::ofstream js(opts.out_prefix + ".json", std::ios::binary);
        std::ofstream md(opts.out_prefix + ".md", std::ios::binary);
        if (!js || !md)
            throw Error(ErrorCode::io_error,
                        "cannot write " + opts.out_prefix + ".json/.md");
        js << j.dump(2) << "\n";
        md << comparison_to_markdown(summary);
    }
    return kExitOk;
}

} // namespace cli_detail

// Parses and runs one invocation. `args` holds the arguments without the
// program name; streams are injectable for tests.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Species occurrence extraction and screening"};
    app.require_subcommand(1);

    ExtractOptions ex;
    auto* extract = app.add_subcommand(
        "extract", "Extract occurrence records from documents");
    extract->add_option("inputs", ex.inputs, "Input .txt or .pdf files")
        ->required();
    extract->add_option("--tax", ex.tax, "Keep only this species");
    extract->add_option("--key", ex.key, "API key (or ARETE_API_KEY)");
    extract->add_option("--tier", ex.tier, "Rate tier: free or premium")
        ->check(CLI::IsMember({"free", "premium"}));
    extract->add_option("--service", ex.service, "Completion service name");
    extract->add_option("--model", ex.model, "Model name");
    extract->add_option("--endpoint", ex.endpoint, "Chat-completions base URL");
    extract->add_option("--out", ex.out_path, "Output CSV path (default stdout)");
    extract->add_option("--replay", ex.replay_dir,
                        "Replay recorded responses from this directory");
    extract->add_option("--budget", ex.token_budget, "Token budget per chunk");
    extract->add_option("--jobs", ex.jobs, "Documents processed in parallel");
    extract->add_option("--rpm", ex.rpm, "Requests per minute (0 = per tier)");
    extract->add_option("--max-retries", ex.max_retries, "Retries on 429/5xx");
    extract->add_option("--timeout", ex.timeout_seconds, "HTTP timeout seconds");
    extract->add_option("--pdf-extractor-cmd", ex.pdf_extractor_cmd,
                        "Command producing text for .pdf input ({} = path)");
    extract->add_flag("--verbose", ex.verbose, "Progress to stderr");
    extract->add_option("--config", ex.config_path, "Flat key=value config file");

    OutlierOptions ol;
    auto* outliers =
        app.add_subcommand("outliers", "Flag suspect records in a CSV");
    outliers->add_option("records", ol.records_path, "Records CSV")->required();
    outliers->add_option("--grid", ol.grid_path, "Environmental grid CSV");
    outliers->add_option("--methods", ol.methods,
                         "Comma list of geo,env,svm (default geo, or all "
                         "when --grid is given)");
    outliers->add_option("--quantile", ol.quantile, "Flagging quantile");
    outliers->add_option("--min-points", ol.min_points,
                         "Minimum points per species");
    outliers->add_option("--seed", ol.seed, "RNG seed");
    outliers->add_option("--out", ol.out_path, "Output CSV path (default stdout)");
    outliers->add_flag("--verbose", ol.verbose, "Summary to stderr");
    outliers->add_option("--config", ol.config_path, "Flat key=value config file");

    ReportOptions rp;
    auto* report = app.add_subcommand(
        "report", "Validate extracted records against a reference");
    report->add_option("pred", rp.pred_path, "Extracted records CSV")->required();
    report->add_option("obs", rp.obs_path, "Reference records CSV")->required();
    report->add_option("--out-dir", rp.out_dir, "Report directory");
    report->add_option("--tolerance", rp.tolerance_deg,
                       "Coordinate tolerance, degrees");
    report->add_flag("--verbose", rp.verbose, "Progress to stderr");
    report->add_option("--config", rp.config_path, "Flat key=value config file");

    CompareOptions cp;
    auto* compare =
        app.add_subcommand("compare", "Compare extracted records with GBIF");
    compare->add_option("extracted", cp.extracted_path, "Extracted records CSV")
        ->required();
    compare->add_option("--species", cp.species,
                        "Species to fetch (default: all in the CSV)");
    compare->add_option("--gbif-fixtures", cp.gbif_fixture_dir,
                        "Recorded GBIF pages directory (offline)");
    compare->add_option("--gbif-endpoint", cp.gbif_endpoint, "GBIF API base URL");
    compare->add_option("--boundaries", cp.boundaries_path,
                        "Country polygons JSON for per-country tallies");
    compare->add_option("--limit", cp.limit, "Max records per species");
    compare->add_option("--out", cp.out_prefix,
                        "Write <prefix>.json and <prefix>.md (default: JSON "
                        "to stdout)");
    compare->add_flag("--verbose", cp.verbose, "Progress to stderr");
    compare->add_option("--config", cp.config_path, "Flat key=value config file");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        // prints help or the parse error as appropriate
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (extract->parsed()) {
            apply_flat_config(
                *extract, ex.config_path,
                {{"tax", [&](const std::string& v) { ex.tax = v; }},
                 {"key", [&](const std::string& v) { ex.key = v; }},
                 {"tier",
                  [&](const std::string& v) {
                      if (v != "free" && v != "premium")
                          throw Error(ErrorCode::invalid_argument,
                                      "tier must be free or premium, got \"" +
                                          v + "\"");
                      ex.tier = v;
                  }},
                 {"service", [&](const std::string& v) { ex.service = v; }},
                 {"model", [&](const std::string& v) { ex.model = v; }},
                 {"endpoint", [&](const std::string& v) { ex.endpoint = v; }},
                 {"out", [&](const std::string& v) { ex.out_path = v; }},
                 {"replay", [&](const std::string& v) { ex.replay_dir = v; }},
                 {"pdf-extractor-cmd",
                  [&](const std::string& v) { ex.pdf_extractor_cmd = v; }},
                 {"budget",
                  [&](const std::string& v) { ex.token_budget = config_int("budget", v); }},
                 {"jobs", [&](const std::string& v) { ex.jobs = config_int("jobs", v); }},
                 {"rpm", [&](const std::string& v) { ex.rpm = config_int("rpm", v); }},
                 {"max-retries",
                  [&](const std::string& v) { ex.max_retries = config_int("max-retries", v); }},
                 {"timeout",
                  [&](const std::string& v) { ex.timeout_seconds = config_double("timeout", v); }},
                 {"verbose",
                  [&](const std::string& v) { ex.verbose = config_bool("verbose", v); }}});
            return cmd_extract(ex, out, err);
        }
        if (outliers->parsed()) {
            apply_flat_config(
                *outliers, ol.config_path,
                {{"grid", [&](const std::string& v) { ol.grid_path = v; }},
                 {"methods", [&](const std::string& v) { ol.methods = v; }},
                 {"quantile",
                  [&](const std::string& v) { ol.quantile = config_double("quantile", v); }},
                 {"min-points",
                  [&](const std::string& v) { ol.min_points = config_int("min-points", v); }},
                 {"seed",
                  [&](const std::string& v) { ol.seed = config_unsigned("seed", v); }},
                 {"out", [&](const std::string& v) { ol.out_path = v; }},
                 {"verbose",
                  [&](const std::string& v) { ol.verbose = config_bool("verbose", v); }}});
            return cmd_outliers(ol, out, err);
        }
        if (report->parsed()) {
            apply_flat_config(
                *report, rp.config_path,
                {{"out-dir", [&](const std::string& v) { rp.out_dir = v; }},
                 {"tolerance",
                  [&](const std::string& v) { rp.tolerance_deg = config_double("tolerance", v); }},
                 {"verbose",
                  [&](const std::string& v) { rp.verbose = config_bool("verbose", v); }}});
            return cmd_report(rp, out, err);
        }
        if (compare->parsed()) {
            apply_flat_config(
                *compare, cp.config_path,
                {{"species",
                  [&](const std::string& v) {
                      cp.species.clear();
                      std::stringstream ss(v);
                      std::string item;
                      while (std::getline(ss, item, ','))
                          if (const std::string t{trim(item)}; !t.empty())
                              cp.species.push_back(t);
                  }},
                 {"gbif-fixtures",
                  [&](const std::string& v) { cp.gbif_fixture_dir = v; }},
                 {"gbif-endpoint",
                  [&](const std::string& v) { cp.gbif_endpoint = v; }},
                 {"boundaries",
                  [&](const std::string& v) { cp.boundaries_path = v; }},
                 {"limit",
                  [&](const std::string& v) { cp.limit = config_int("limit", v); }},
                 {"out", [&](const std::string& v) { cp.out_prefix = v; }},
                 {"verbose",
                  [&](const std::string& v) { cp.verbose = config_bool("verbose", v); }}});
            return cmd_compare(cp, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;  // unreachable with require_subcommand(1)
}

} // namespace arete
