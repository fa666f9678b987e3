#include "raf/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "raf/metrics.hpp"
#include "raf/pipeline.hpp"
#include "raf/protocol.hpp"

namespace raf {
namespace {

using nlohmann::json;
namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
    }
    return value;
}

std::string fmt_number(double x) { return fmt::format("{:.10g}", x); }

const char* kNone = "none";

}  // namespace

void ExperimentConfig::validate() const {
    if (lookback < 1) throw ConfigError("lookback must be >= 1");
    if (horizons.empty()) throw ConfigError("no horizons configured");
    for (auto h : horizons) {
        if (h < 1) throw ConfigError(fmt::format("horizon {} must be positive", h));
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    if (coverages.empty()) throw ConfigError("no pool coverages configured");
    for (double c : coverages) {
        if (c < 0.0 || c > train_fraction + 1e-9) {
            throw ConfigError(fmt::format("coverage {} outside [0, {}]", c, train_fraction));
        }
    }
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    if (retrievers.empty() || strategies.empty()) throw ConfigError("need at least one retriever and strategy");
    if (ingest.target_station_names.empty()) throw ConfigError("no target stations configured");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

ExperimentConfig load_experiment_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(fmt::format("config: {}", e.what()));
    }
    ExperimentConfig c;
    const auto get = [&](const std::string& key) { return tree.get_optional<std::string>(key); };

    if (auto v = get("data.csv")) c.ingest.csv_path = *v;
    if (auto v = get("data.date_column")) c.ingest.date_column = *v;
    if (auto v = get("data.date_format")) c.ingest.date_format = *v;
    if (auto v = get("data.stations")) c.ingest.target_station_names = split_list(*v);
    if (auto section = tree.get_child_optional("adjustments")) {
        for (const auto& [name, node] : *section) {
            c.ingest.adjustments.push_back({name, parse_number<double>(node.data(), "adjustments." + name)});
        }
    }
    if (auto section = tree.get_child_optional("units")) {
        for (const auto& [name, node] : *section) c.ingest.units.push_back({name, node.data()});
    }

    if (auto v = get("experiment.lookback")) c.lookback = parse_number<Eigen::Index>(*v, "experiment.lookback");
    if (auto v = get("experiment.horizons")) {
        c.horizons.clear();
        for (const auto& h : split_list(*v)) c.horizons.push_back(parse_number<Eigen::Index>(h, "experiment.horizons"));
    }
    if (auto v = get("experiment.train_fraction")) c.train_fraction = parse_number<double>(*v, "experiment.train_fraction");
    if (auto v = get("experiment.retrievers")) {
        c.retrievers.clear();
        for (const auto& r : split_list(*v)) c.retrievers.push_back(parse_retriever(r));
    }
    if (auto v = get("experiment.strategies")) {
        c.strategies.clear();
        for (const auto& s : split_list(*v)) c.strategies.push_back(parse_strategy(s));
    }
    if (auto v = get("experiment.top_k")) c.top_k = parse_number<std::size_t>(*v, "experiment.top_k");
    if (auto v = get("experiment.coverages")) {
        c.coverages.clear();
        for (const auto& x : split_list(*v)) c.coverages.push_back(parse_number<double>(x, "experiment.coverages"));
    }
    if (auto v = get("experiment.stride")) c.stride = parse_number<Eigen::Index>(*v, "experiment.stride");
    if (auto v = get("experiment.pool_order")) {
        if (*v == "recent") c.pool_order = PoolOrder::MostRecent;
        else if (*v == "oldest") c.pool_order = PoolOrder::Oldest;
        else throw ConfigError(fmt::format("pool_order must be recent or oldest, got '{}'", *v));
    }
    if (auto v = get("experiment.out")) c.output_dir = *v;
    if (auto v = get("experiment.workers")) c.workers = parse_number<unsigned>(*v, "experiment.workers");
    if (auto v = get("experiment.seed")) c.seed = parse_number<std::uint64_t>(*v, "experiment.seed");

    if (auto v = get("forecaster.kind")) c.forecaster.kind = parse_forecaster(*v);
    if (auto v = get("forecaster.order")) c.forecaster.ar_order = parse_number<Eigen::Index>(*v, "forecaster.order");
    if (auto v = get("forecaster.ridge")) c.forecaster.ridge = parse_number<double>(*v, "forecaster.ridge");
    if (auto v = get("forecaster.season")) c.forecaster.season = parse_number<Eigen::Index>(*v, "forecaster.season");
    if (auto v = get("forecaster.endpoint")) c.forecaster.endpoint = *v;
    if (auto v = get("forecaster.max_rows")) c.forecaster.max_rows = parse_number<Eigen::Index>(*v, "forecaster.max_rows");

    if (auto v = get("retrieval.mi_bins")) c.mi_bins = parse_number<int>(*v, "retrieval.mi_bins");
    if (auto v = get("retrieval.embedding_size")) c.embedding_size = parse_number<Eigen::Index>(*v, "retrieval.embedding_size");
    if (auto v = get("retrieval.embedder")) c.embedder_endpoint = *v;

    if (auto v = get("metrics.sedi_low")) c.sedi_low = parse_number<double>(*v, "metrics.sedi_low");
    if (auto v = get("metrics.sedi_high")) c.sedi_high = parse_number<double>(*v, "metrics.sedi_high");
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    auto config = load_experiment_config(in);
    // Relative data paths resolve against the config file's directory.
    if (!config.ingest.csv_path.empty() && config.ingest.csv_path.is_relative()) {
        const auto candidate = path.parent_path() / config.ingest.csv_path;
        if (std::filesystem::exists(candidate)) config.ingest.csv_path = candidate;
    }
    return config;
}

MultivariateSeries prepare_series(const IngestConfig& config) {
    auto series = load_csv(config);
    series = apply_datum_adjustments(series, config.adjustments);
    return interpolate_gaps(series);
}

void EvalReport::write_csv(std::ostream& out) const {
    out << kHeader << '\n';
    for (const auto& r : rows) {
        out << r.station << ',' << r.lead_time << ',' << r.retriever << ',' << r.strategy << ','
            << r.forecaster << ',' << fmt_number(r.coverage) << ',' << fmt_number(r.mae) << ','
            << fmt_number(r.rmse) << ',' << (r.sedi ? fmt_number(*r.sedi) : std::string()) << ','
            << r.n_samples << '\n';
    }
}

std::string CellResult::label() const {
    return fmt::format("h={} coverage={} retriever={} strategy={} forecaster={}", lead_time,
                       fmt_number(coverage), retriever, strategy, forecaster);
}

std::vector<ReportRow> score_cell(const CellResult& cell, double sedi_low, double sedi_high) {
    if (cell.samples.empty()) throw ConfigError("cell has no forecasts to score");
    const Eigen::Index h = cell.lead_time;
    const auto t = static_cast<Eigen::Index>(cell.samples.size());
    std::vector<ReportRow> rows;
    double mae_sum = 0.0;
    double rmse_sum = 0.0;
    double sedi_sum = 0.0;
    int sedi_count = 0;
    for (std::size_t s = 0; s < cell.stations.size(); ++s) {
        Vector truth(t * h);
        Vector pred(t * h);
        for (Eigen::Index i = 0; i < t; ++i) {
            const auto& sample = cell.samples[static_cast<std::size_t>(i)];
            truth.segment(i * h, h) = sample.truth.col(static_cast<Eigen::Index>(s));
            pred.segment(i * h, h) = sample.prediction.col(static_cast<Eigen::Index>(s));
        }
        ReportRow row{cell.stations[s], h, cell.retriever, cell.strategy, cell.forecaster, cell.coverage,
                      mae(truth, pred), rmse(truth, pred), std::nullopt, static_cast<std::size_t>(t)};
        if (static_cast<std::size_t>(truth.size()) >= kMinSediSamples) {
            row.sedi = sedi(truth, pred, sedi_thresholds(truth, sedi_low, sedi_high));
        }
        mae_sum += row.mae;
        rmse_sum += row.rmse;
        if (row.sedi) {
            sedi_sum += *row.sedi;
            ++sedi_count;
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<double>(cell.stations.size());
    ReportRow overall{"Overall", h, cell.retriever, cell.strategy, cell.forecaster, cell.coverage,
                      mae_sum / n, rmse_sum / n, std::nullopt, static_cast<std::size_t>(t)};
    if (sedi_count > 0) overall.sedi = sedi_sum / sedi_count;
    rows.push_back(std::move(overall));
    return rows;
}

namespace {

CellResult evaluate_cell(const ExperimentConfig& config, const MultivariateSeries& series,
                         const KnowledgeBase& pool, const TestSet& test, const Forecaster& forecaster,
                         std::optional<RetrieverKind> retriever, std::optional<Strategy> strategy,
                         double coverage, const std::shared_ptr<const Embedder>& embedder) {
    std::vector<std::string> variables;
    for (const auto& v : series.variables()) variables.push_back(v.name);
    const auto& targets = series.target_indices();

    PipelineConfig pc;
    pc.retriever = retriever.value_or(RetrieverKind::Similarity);
    pc.strategy = strategy.value_or(Strategy::B);
    pc.k = config.top_k;
    pc.mi_bins = config.mi_bins;
    pc.embedder = embedder;
    const KnowledgeBase empty_pool({}, pool.lookback(), pool.horizon(), pool.width(), pool.source_span());
    const RafPipeline pipeline(retriever ? pool : empty_pool, pc, forecaster, targets, variables);

    CellResult cell;
    cell.lead_time = test.h;
    cell.retriever = retriever ? to_string(*retriever) : kNone;
    cell.strategy = strategy ? to_string(*strategy) : kNone;
    cell.forecaster = to_string(config.forecaster.kind);
    cell.coverage = coverage;
    for (int t : targets) cell.stations.push_back(series.variables()[static_cast<std::size_t>(t)].name);
    cell.samples.resize(test.samples.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto work = [&] {
        for (std::size_t i = next++; i < test.samples.size(); i = next++) {
            try {
                const auto& query = test.samples[i];
                auto result = pipeline.run(query);
                Matrix truth(query.future.rows(), static_cast<Eigen::Index>(targets.size()));
                for (std::size_t j = 0; j < targets.size(); ++j) {
                    truth.col(static_cast<Eigen::Index>(j)) = query.future.col(targets[j]);
                }
                cell.samples[i] = {query.origin, series.dates()[static_cast<std::size_t>(query.origin)],
                                   std::move(truth), std::move(result.values)};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = test.samples.size();
            }
        }
    };
    const unsigned workers = std::min<unsigned>(config.workers, static_cast<unsigned>(test.samples.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool_threads;
        for (unsigned w = 0; w < workers; ++w) pool_threads.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return cell;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const MultivariateSeries& series) {
    config.validate();
    if (series.target_indices().empty()) throw ConfigError("series has no target columns");
    const auto forecaster = make_forecaster(config.forecaster);
    std::shared_ptr<const Embedder> embedder;
    if (!config.embedder_endpoint.empty()) {
        embedder = std::make_shared<ExternalEmbedder>(make_transport(config.embedder_endpoint),
                                                      config.embedding_size);
    } else {
        embedder = std::make_shared<BuiltinEmbedder>(config.embedding_size);
    }

    ExperimentResult result;
    for (const auto h : config.horizons) {
        std::optional<KnowledgeBase> base;
        std::optional<TestSet> test;
        try {
            base = KnowledgeBase::from_series(series, config.train_fraction, config.lookback, h, config.stride);
            test = TestSet::from_series(series, config.train_fraction, config.lookback, h);
        } catch (const std::exception& e) {
            result.failures.push_back({fmt::format("h={}", h), e.what()});
            continue;
        }
        for (const double coverage : config.coverages) {
            const auto run_cell = [&](std::optional<RetrieverKind> r, std::optional<Strategy> s) {
                CellResult cell;
                cell.lead_time = h;
                cell.retriever = r ? to_string(*r) : kNone;
                cell.strategy = s ? to_string(*s) : kNone;
                cell.forecaster = to_string(config.forecaster.kind);
                cell.coverage = coverage;
                try {
                    const auto pool = restrict_pool(*base, coverage, config.train_fraction, config.pool_order);
                    cell = evaluate_cell(config, series, pool, *test, *forecaster, pool.empty() ? std::nullopt : r,
                                         pool.empty() ? std::nullopt : s, coverage, embedder);
                    auto rows = score_cell(cell, config.sedi_low, config.sedi_high);
                    result.report.rows.insert(result.report.rows.end(), rows.begin(), rows.end());
                    result.cells.push_back(std::move(cell));
                } catch (const std::exception& e) {
                    result.failures.push_back({cell.label(), e.what()});
                }
            };
            if (coverage <= 0.0) {
                run_cell(std::nullopt, std::nullopt);
                continue;
            }
            for (const auto r : config.retrievers) {
                for (const auto s : config.strategies) run_cell(r, s);
            }
        }
    }
    return result;
}

json archive_to_json(const std::vector<CellResult>& cells) {
    const auto matrix = [](const Matrix& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json out;
    out["cells"] = json::array();
    for (const auto& cell : cells) {
        json c;
        c["lead_time"] = cell.lead_time;
        c["retriever"] = cell.retriever;
        c["strategy"] = cell.strategy;
        c["forecaster"] = cell.forecaster;
        c["coverage"] = cell.coverage;
        c["stations"] = cell.stations;
        c["samples"] = json::array();
        for (const auto& s : cell.samples) {
            c["samples"].push_back({{"origin", s.origin},
                                    {"date", format_date(s.origin_date)},
                                    {"truth", matrix(s.truth)},
                                    {"prediction", matrix(s.prediction)}});
        }
        out["cells"].push_back(std::move(c));
    }
    return out;
}

std::vector<CellResult> archive_from_json(const json& archive) {
    const auto matrix = [](const json& rows) {
        const auto r = static_cast<Eigen::Index>(rows.size());
        const Eigen::Index c = r == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
        }
        return m;
    };
    std::vector<CellResult> cells;
    try {
        for (const auto& c : archive.at("cells")) {
            CellResult cell;
            cell.lead_time = c.at("lead_time").get<Eigen::Index>();
            cell.retriever = c.at("retriever").get<std::string>();
            cell.strategy = c.at("strategy").get<std::string>();
            cell.forecaster = c.at("forecaster").get<std::string>();
            cell.coverage = c.at("coverage").get<double>();
            cell.stations = c.at("stations").get<std::vector<std::string>>();
            for (const auto& s : c.at("samples")) {
                cell.samples.push_back({s.at("origin").get<Eigen::Index>(),
                                        parse_date(s.at("date").get<std::string>(), "%Y-%m-%d"),
                                        matrix(s.at("truth")), matrix(s.at("prediction"))});
            }
            cells.push_back(std::move(cell));
        }
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("forecast archive: {}", e.what()));
    }
    return cells;
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.csv");
        if (!out) throw ConfigError(fmt::format("cannot write '{}'", (dir / "report.csv").string()));
        result.report.write_csv(out);
    }
    {
        std::ofstream out(dir / "forecasts.json");
        if (!out) throw ConfigError(fmt::format("cannot write '{}'", (dir / "forecasts.json").string()));
        out << archive_to_json(result.cells).dump() << '\n';
    }
}

std::vector<PoolSweepRow> sweep_pool_size(const ExperimentConfig& config, const MultivariateSeries& series,
                                          const std::vector<double>& coverages, ExperimentResult* full_result) {
    ExperimentConfig sweep = config;
    sweep.coverages = coverages;
    auto result = run_experiment(sweep, series);
    std::vector<PoolSweepRow> rows;
    for (const auto& r : result.report.rows) {
        if (r.station != "Overall") continue;
        rows.push_back({r.coverage, r.lead_time, r.retriever, r.strategy, r.mae});
    }
    if (full_result) *full_result = std::move(result);
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<PoolSweepRow>& rows) {
    out << "coverage,lead_time,retriever,strategy,mae\n";
    for (const auto& r : rows) {
        out << fmt_number(r.coverage) << ',' << r.lead_time << ',' << r.retriever << ',' << r.strategy << ','
            << fmt_number(r.mae) << '\n';
    }
}

void emit_trajectories(const std::vector<CellResult>& archive, const std::string& station, Eigen::Index horizon,
                       std::ostream& out) {
    if (archive.empty()) throw ConfigError("forecast archive is empty");
    std::vector<const CellResult*> slice;
    std::vector<Eigen::Index> station_col;
    for (const auto& cell : archive) {
        if (cell.lead_time != horizon) continue;
        const auto it = std::find(cell.stations.begin(), cell.stations.end(), station);
        if (it == cell.stations.end()) continue;
        slice.push_back(&cell);
        station_col.push_back(static_cast<Eigen::Index>(it - cell.stations.begin()));
    }
    if (slice.empty()) {
        std::string available;
        std::map<std::pair<std::string, Eigen::Index>, bool> seen;
        for (const auto& cell : archive) {
            for (const auto& s : cell.stations) {
                if (seen.emplace(std::pair{s, cell.lead_time}, true).second) {
                    available += fmt::format("{}{}@h={}", available.empty() ? "" : ", ", s, cell.lead_time);
                }
            }
        }
        throw ConfigError(fmt::format("no archived forecasts for {} at h={} (available: {})", station, horizon,
                                      available));
    }

    // truth by target date from the first cell; every cell shares the test windows
    std::map<Date, double> truth;
    std::vector<std::map<Date, double>> predictions(slice.size());
    for (std::size_t c = 0; c < slice.size(); ++c) {
        for (const auto& s : slice[c]->samples) {
            const Date target = s.origin_date + std::chrono::days{horizon};
            truth.emplace(target, s.truth(horizon - 1, station_col[c]));
            predictions[c][target] = s.prediction(horizon - 1, station_col[c]);
        }
    }

    out << "date,truth";
    if (slice.size() == 1) {
        out << ",prediction";
    } else {
        for (const auto* cell : slice) {
            out << ",prediction_" << cell->retriever << '_' << cell->strategy << '_' << cell->forecaster << "_cov"
                << fmt_number(cell->coverage);
        }
    }
    out << '\n';
    for (const auto& [date, value] : truth) {
        out << format_date(date) << ',' << fmt::format("{:.17g}", value);
        for (const auto& p : predictions) {
            const auto it = p.find(date);
            out << ',';
            if (it != p.end()) out << fmt::format("{:.17g}", it->second);
        }
        out << '\n';
    }
}

}  // namespace raf
