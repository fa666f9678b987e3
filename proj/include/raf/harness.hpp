#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "raf/augment.hpp"
#include "raf/forecast.hpp"
#include "raf/ingest.hpp"
#include "raf/knowledge_base.hpp"
#include "raf/retrieval.hpp"

namespace raf {

struct ExperimentConfig {
    IngestConfig ingest;
    Eigen::Index lookback = 100;
    std::vector<Eigen::Index> horizons{7, 14, 21, 28};
    double train_fraction = 0.85;
    std::vector<RetrieverKind> retrievers{RetrieverKind::Similarity, RetrieverKind::MutualInformation};
    std::vector<Strategy> strategies{Strategy::B};
    std::size_t top_k = 3;
    ForecasterSpec forecaster;
    std::vector<double> coverages{0.85};
    PoolOrder pool_order = PoolOrder::MostRecent;
    Eigen::Index stride = 1;
    int mi_bins = 0;
    Eigen::Index embedding_size = kDefaultEmbeddingSize;
    std::string embedder_endpoint;  // empty = builtin pooled
    double sedi_low = 0.1;
    double sedi_high = 0.9;
    std::filesystem::path output_dir = "results";
    unsigned workers = 1;
    std::uint64_t seed = 0;

    ExperimentConfig() { ingest.target_station_names = {"NP205", "P33", "G620", "NESRS1", "NESRS2"}; }

    void validate() const;
};

/// Reads an INI-style config ([data], [adjustments], [experiment],
/// [forecaster], [retrieval], [metrics] sections).
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig load_experiment_config(std::istream& in);

/// Loads the CSV, applies datum adjustments and fills gaps.
MultivariateSeries prepare_series(const IngestConfig& config);

struct ReportRow {
    std::string station;  // "Overall" for the unweighted station mean
    Eigen::Index lead_time = 0;
    std::string retriever;
    std::string strategy;
    std::string forecaster;
    double coverage = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> sedi;
    std::size_t n_samples = 0;
};

struct EvalReport {
    std::vector<ReportRow> rows;

    static constexpr const char* kHeader =
        "station,lead_time,retriever,strategy,forecaster,coverage,mae,rmse,sedi,n_samples";
    void write_csv(std::ostream& out) const;
};

struct SampleForecast {
    Eigen::Index origin = 0;
    Date origin_date;
    Matrix truth;       // h x n
    Matrix prediction;  // h x n
};

struct CellResult {
    Eigen::Index lead_time = 0;
    std::string retriever;
    std::string strategy;
    std::string forecaster;
    double coverage = 0.0;
    std::vector<std::string> stations;
    std::vector<SampleForecast> samples;  // ascending origin

    std::string label() const;
};

struct CellFailure {
    std::string cell;
    std::string message;
};

struct ExperimentResult {
    EvalReport report;
    std::vector<CellResult> cells;
    std::vector<CellFailure> failures;
};

/// Scores one cell's forecasts per station plus the Overall row.
std::vector<ReportRow> score_cell(const CellResult& cell, double sedi_low, double sedi_high);

/// Runs every (horizon, coverage, retriever, strategy) cell. Coverage 0 runs
/// a single no-retrieval cell per horizon. Failed cells are recorded and skipped.
ExperimentResult run_experiment(const ExperimentConfig& config, const MultivariateSeries& series);

/// Writes report.csv and forecasts.json under `dir`.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

nlohmann::json archive_to_json(const std::vector<CellResult>& cells);
std::vector<CellResult> archive_from_json(const nlohmann::json& archive);

struct PoolSweepRow {
    double coverage = 0.0;
    Eigen::Index lead_time = 0;
    std::string retriever;
    std::string strategy;
    double mae = 0.0;
};

/// Overall MAE per (coverage, horizon, retriever, strategy).
std::vector<PoolSweepRow> sweep_pool_size(const ExperimentConfig& config, const MultivariateSeries& series,
                                          const std::vector<double>& coverages,
                                          ExperimentResult* full_result = nullptr);
void write_sweep_csv(std::ostream& out, const std::vector<PoolSweepRow>& rows);

/// CSV of date, truth and one prediction column per archived method for one
/// station at one lead time. Each row is the forecast made h days earlier.
void emit_trajectories(const std::vector<CellResult>& archive, const std::string& station,
                       Eigen::Index horizon, std::ostream& out);

}  // namespace raf
