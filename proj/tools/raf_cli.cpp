#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <optional>

#include "raf/harness.hpp"
#include "raf/pipeline.hpp"
#include "raf/protocol.hpp"
#include "raf/synthetic.hpp"

using namespace raf;

namespace {

struct Overrides {
    std::string config;
    std::string csv;
    std::optional<Eigen::Index> lookback;
    std::vector<Eigen::Index> horizons;
    std::string retriever;
    std::string strategy;
    std::optional<std::size_t> top_k;
    std::string forecaster;
    std::string endpoint;
    std::optional<double> coverage;
    std::string out;
    std::optional<unsigned> workers;
};

void add_overrides(CLI::App& app, Overrides& o) {
    app.add_option("--config", o.config, "INI config file")->envname("RAF_CONFIG");
    app.add_option("--csv", o.csv, "Input CSV (overrides [data] csv)");
    app.add_option("--lookback", o.lookback, "Lookback window length l");
    app.add_option("--horizons", o.horizons, "Forecast horizons, comma separated")->delimiter(',');
    app.add_option("--retriever", o.retriever, "sim|mi")->check(CLI::IsMember({"sim", "mi"}));
    app.add_option("--strategy", o.strategy, "a|b|c")->check(CLI::IsMember({"a", "b", "c"}));
    app.add_option("--top-k", o.top_k, "Number of retrieved contexts k");
    app.add_option("--forecaster", o.forecaster, "persistence|seasonal|ar|external")
        ->check(CLI::IsMember({"persistence", "seasonal", "ar", "external"}));
    app.add_option("--endpoint", o.endpoint, "External forecaster: URL or exec:COMMAND");
    app.add_option("--coverage", o.coverage, "Retrieval pool coverage (0 disables retrieval)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--workers", o.workers, "Concurrent workers per cell");
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
    if (!o.csv.empty()) c.ingest.csv_path = o.csv;
    if (o.lookback) c.lookback = *o.lookback;
    if (!o.horizons.empty()) c.horizons = o.horizons;
    if (!o.retriever.empty()) c.retrievers = {parse_retriever(o.retriever)};
    if (!o.strategy.empty()) c.strategies = {parse_strategy(o.strategy)};
    if (o.top_k) c.top_k = *o.top_k;
    if (!o.forecaster.empty()) c.forecaster.kind = parse_forecaster(o.forecaster);
    if (!o.endpoint.empty()) {
        c.forecaster.endpoint = o.endpoint;
        if (o.forecaster.empty()) c.forecaster.kind = ForecasterKind::External;
    }
    if (o.coverage) c.coverages = {*o.coverage};
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    if (c.ingest.csv_path.empty()) throw ConfigError("no input CSV: set [data] csv in the config or pass --csv");
    return c;
}

std::shared_ptr<const Embedder> make_embedder(const ExperimentConfig& c) {
    if (!c.embedder_endpoint.empty()) {
        return std::make_shared<ExternalEmbedder>(make_transport(c.embedder_endpoint), c.embedding_size);
    }
    return std::make_shared<BuiltinEmbedder>(c.embedding_size);
}

Eigen::Index resolve_origin(const MultivariateSeries& series, const std::string& date, std::optional<Eigen::Index> row) {
    if (row) {
        if (*row < 0 || *row >= series.rows()) {
            throw BoundsError(fmt::format("origin row {} outside [0, {})", *row, series.rows()));
        }
        return *row;
    }
    if (date.empty()) return series.rows() - 1;
    const Date d = parse_date(date, "%Y-%m-%d");
    const auto& dates = series.dates();
    const auto it = std::find(dates.begin(), dates.end(), d);
    if (it == dates.end()) throw ConfigError(fmt::format("date {} is not in the series", date));
    return static_cast<Eigen::Index>(it - dates.begin());
}

/// Query window ending at `origin`; future rows past the series end are zero.
WindowPair query_at(const MultivariateSeries& series, Eigen::Index origin, Eigen::Index l, Eigen::Index h,
                    bool& has_truth) {
    if (origin - l + 1 < 0) throw BoundsError(fmt::format("origin {} leaves fewer than {} lookback rows", origin, l));
    has_truth = origin + h <= series.rows() - 1;
    if (has_truth) return window_at(series, origin, l, h);
    return {series.values().middleRows(origin - l + 1, l), Matrix::Zero(h, series.cols()), origin};
}

KnowledgeBase pool_for(const ExperimentConfig& c, const MultivariateSeries& series, Eigen::Index h,
                       const std::string& kb_path) {
    KnowledgeBase kb = kb_path.empty()
                           ? KnowledgeBase::from_series(series, c.train_fraction, c.lookback, h, c.stride)
                           : KnowledgeBase::load(std::filesystem::path(kb_path));
    if (kb.lookback() != c.lookback || kb.horizon() != h || kb.width() != series.cols()) {
        throw ConfigError(fmt::format("knowledge base holds l={}, h={}, m={} but the query needs l={}, h={}, m={}",
                                      kb.lookback(), kb.horizon(), kb.width(), c.lookback, h, series.cols()));
    }
    return restrict_pool(kb, c.coverages.front(), c.train_fraction, c.pool_order);
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw ConfigError(fmt::format("cannot write '{}'", path));
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented forecasting toolkit"};
    app.require_subcommand(1);
    Overrides o;

    auto* synth = app.add_subcommand("synthesize", "Write the synthetic benchmark dataset as CSV");
    std::string synth_out;
    SyntheticSpec spec;
    synth->add_option("-o,--output", synth_out, "Output CSV (default stdout)");
    synth->add_option("--days", spec.days, "Number of daily rows");
    synth->add_option("--seed", spec.seed, "Generator seed");

    auto* ingest = app.add_subcommand("ingest", "Load, adjust and gap-fill the input CSV");
    std::string ingest_out;
    ingest->add_option("-o,--output", ingest_out, "Write the cleaned series to this CSV");

    auto* build = app.add_subcommand("build-kb", "Build the retrieval knowledge base from the training span");
    std::string kb_out;
    build->add_option("-o,--output", kb_out, "Knowledge base file")->required();

    auto* retrieve = app.add_subcommand("retrieve", "Show the context set retrieved for one query");
    auto* forecast = app.add_subcommand("forecast", "Forecast from one query window");
    std::string query_date;
    std::optional<Eigen::Index> query_row;
    std::string kb_in;
    for (auto* sub : {retrieve, forecast}) {
        sub->add_option("--date", query_date, "Date of the last lookback day (default: last row)");
        sub->add_option("--origin", query_row, "Row index of the last lookback day");
        sub->add_option("--kb", kb_in, "Knowledge base file from build-kb");
    }

    auto* evaluate = app.add_subcommand("evaluate", "Run the full evaluation grid");
    auto* sweep = app.add_subcommand("sweep-pool", "MAE as a function of retrieval pool coverage");
    std::vector<double> sweep_coverages{0.0, 0.25, 0.45, 0.65, 0.85};
    sweep->add_option("--coverages", sweep_coverages, "Pool coverages, comma separated")->delimiter(',');

    auto* traj = app.add_subcommand("trajectories", "Truth and prediction series for one station and lead time");
    std::string archive_path;
    std::string station;
    Eigen::Index traj_horizon = 0;
    std::string traj_out;
    traj->add_option("--archive", archive_path, "forecasts.json written by evaluate")->required();
    traj->add_option("--station", station, "Station name")->required();
    traj->add_option("--horizon", traj_horizon, "Lead time in days")->required();
    traj->add_option("-o,--output", traj_out, "Output CSV (default stdout)");

    for (auto* sub : {ingest, build, retrieve, forecast, evaluate, sweep}) add_overrides(*sub, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            std::ofstream file;
            write_csv(open_output(synth_out, file), make_synthetic_dataset(spec).series);
            return 0;
        }
        if (traj->parsed()) {
            std::ifstream in(archive_path);
            if (!in) throw ConfigError(fmt::format("cannot open archive '{}'", archive_path));
            nlohmann::json archive;
            try {
                archive = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(fmt::format("archive '{}': {}", archive_path, e.what()));
            }
            std::ofstream file;
            emit_trajectories(archive_from_json(archive), station, traj_horizon, open_output(traj_out, file));
            return 0;
        }

        const ExperimentConfig config = resolve(o);
        const MultivariateSeries series = prepare_series(config.ingest);

        if (ingest->parsed()) {
            const auto split = chronological_split(series, config.train_fraction);
            fmt::print(stderr, "{} rows x {} variables, {} to {}\n", series.rows(), series.cols(),
                       format_date(series.dates().front()), format_date(series.dates().back()));
            fmt::print(stderr, "train rows [{}, {}), test rows [{}, {})\n", split.train.begin, split.train.end,
                       split.test.begin, split.test.end);
            std::string targets;
            for (int t : series.target_indices()) {
                targets += (targets.empty() ? "" : ", ") + series.variables()[static_cast<std::size_t>(t)].name;
            }
            fmt::print(stderr, "targets: {}\n", targets);
            if (!ingest_out.empty()) {
                std::ofstream file;
                write_csv(open_output(ingest_out, file), series, config.ingest.date_column);
            }
            return 0;
        }

        if (build->parsed()) {
            const Eigen::Index h = config.horizons.front();
            const auto kb = KnowledgeBase::from_series(series, config.train_fraction, config.lookback, h, config.stride);
            kb.save(std::filesystem::path(kb_out));
            fmt::print(stderr, "wrote {} samples (l={}, h={}, m={}) to {}\n", kb.size(), kb.lookback(), kb.horizon(),
                       kb.width(), kb_out);
            return 0;
        }

        if (retrieve->parsed() || forecast->parsed()) {
            const Eigen::Index h = config.horizons.front();
            const Eigen::Index origin = resolve_origin(series, query_date, query_row);
            bool has_truth = false;
            const WindowPair query = query_at(series, origin, config.lookback, h, has_truth);
            const KnowledgeBase pool = pool_for(config, series, h, kb_in);
            PipelineConfig pc;
            pc.retriever = config.retrievers.front();
            pc.strategy = config.strategies.front();
            pc.k = config.top_k;
            pc.mi_bins = config.mi_bins;
            pc.embedder = make_embedder(config);
            const auto forecaster = make_forecaster(config.forecaster);
            std::vector<std::string> names;
            for (const auto& v : series.variables()) names.push_back(v.name);
            const RafPipeline pipeline(pool, pc, *forecaster, series.target_indices(), names);

            if (retrieve->parsed()) {
                const auto ctx = pipeline.retrieve(query);
                if (!ctx) {
                    fmt::print(stderr, "pool is empty; forecasts use the bare lookback\n");
                    return 0;
                }
                fmt::print("rank,origin,date,score\n");
                for (std::size_t i = 0; i < ctx->size(); ++i) {
                    const auto& e = ctx->entries[i];
                    fmt::print("{},{},{},{:.10g}\n", i + 1, e.pair.origin,
                               format_date(series.dates()[static_cast<std::size_t>(e.pair.origin)]), e.score);
                }
                if (ctx->truncated) fmt::print(stderr, "only {} of k={} contexts available\n", ctx->size(), ctx->k);
                return 0;
            }

            const auto result = pipeline.run(query);
            fmt::print("date");
            for (int t : series.target_indices()) {
                const auto& name = series.variables()[static_cast<std::size_t>(t)].name;
                fmt::print(",{}", name);
                if (has_truth) fmt::print(",{}_truth", name);
            }
            fmt::print("\n");
            const Date start = series.dates()[static_cast<std::size_t>(origin)];
            for (Eigen::Index i = 0; i < h; ++i) {
                fmt::print("{}", format_date(start + std::chrono::days{i + 1}));
                for (Eigen::Index j = 0; j < result.values.cols(); ++j) {
                    fmt::print(",{:.10g}", result.values(i, j));
                    if (has_truth) {
                        fmt::print(",{:.10g}", query.future(i, series.target_indices()[static_cast<std::size_t>(j)]));
                    }
                }
                fmt::print("\n");
            }
            fmt::print(stderr, "forecaster: {}\n", result.forecaster_id);
            return 0;
        }

        if (evaluate->parsed() || sweep->parsed()) {
            ExperimentResult result;
            if (sweep->parsed()) {
                const auto rows = sweep_pool_size(config, series, sweep_coverages, &result);
                std::filesystem::create_directories(config.output_dir);
                std::ofstream out(config.output_dir / "sweep.csv");
                write_sweep_csv(out, rows);
            } else {
                result = run_experiment(config, series);
            }
            write_experiment(result, config.output_dir);
            fmt::print(stderr, "{} cells, {} report rows written to {}\n", result.cells.size(),
                       result.report.rows.size(), config.output_dir.string());
            for (const auto& f : result.failures) fmt::print(stderr, "FAILED {}: {}\n", f.cell, f.message);
            return result.failures.empty() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
