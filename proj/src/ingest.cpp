#include "raf/ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace raf {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace

Date parse_date(const std::string& text, const std::string& format) {
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) throw ParseError(fmt::format("cannot parse '{}' with format '{}'", text, format));
    in >> std::ws;
    if (!in.eof()) throw ParseError(fmt::format("trailing characters in date '{}'", text));
    const std::chrono::year_month_day ymd{std::chrono::year{tm.tm_year + 1900},
                                          std::chrono::month{static_cast<unsigned>(tm.tm_mon + 1)},
                                          std::chrono::day{static_cast<unsigned>(tm.tm_mday)}};
    if (!ymd.ok()) throw ParseError(fmt::format("invalid calendar date '{}'", text));
    return Date{ymd};
}

MultivariateSeries load_csv(const IngestConfig& config) {
    std::ifstream in(config.csv_path);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", config.csv_path.string()));
    return load_csv(in, config);
}

MultivariateSeries load_csv(std::istream& in, const IngestConfig& config) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV: missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_row(line);

    const auto date_it = std::find(header.begin(), header.end(), config.date_column);
    if (date_it == header.end()) {
        throw ConfigError(fmt::format("date column '{}' not found in header", config.date_column));
    }
    const auto date_col = static_cast<std::size_t>(date_it - header.begin());

    std::vector<Variable> variables;
    std::vector<std::size_t> value_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == date_col) continue;
        Variable v{header[c], ""};
        for (const auto& u : config.units) {
            if (u.name == v.name) v.unit = u.unit;
        }
        variables.push_back(std::move(v));
        value_cols.push_back(c);
    }

    std::map<Date, std::vector<double>> rows;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size()) {
            throw ParseError(fmt::format("row {}: expected {} cells, found {}", row_number,
                                         header.size(), cells.size()));
        }
        Date date;
        try {
            date = parse_date(cells[date_col], config.date_format);
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("row {}: {}", row_number, e.what()));
        }
        std::vector<double> values(value_cols.size(), kMissing);
        for (std::size_t j = 0; j < value_cols.size(); ++j) {
            const std::string& cell = cells[value_cols[j]];
            if (cell.empty()) continue;
            double x = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(x)) {
                throw ParseError(fmt::format("row {}, column '{}': non-numeric cell '{}'", row_number,
                                             header[value_cols[j]], cell));
            }
            values[j] = x;
        }
        if (!rows.emplace(date, std::move(values)).second) {
            throw ParseError(fmt::format("row {}: duplicate date {}", row_number, format_date(date)));
        }
    }
    if (rows.empty()) throw ParseError("CSV has a header but no data rows");

    const Date first = rows.begin()->first;
    const Date last = rows.rbegin()->first;
    const auto T = static_cast<Eigen::Index>((last - first).count() + 1);
    Matrix values = Matrix::Constant(T, static_cast<Eigen::Index>(variables.size()), kMissing);
    std::vector<Date> dates(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) dates[static_cast<std::size_t>(t)] = first + std::chrono::days{t};
    for (const auto& [date, row] : rows) {
        const auto t = static_cast<Eigen::Index>((date - first).count());
        for (std::size_t j = 0; j < row.size(); ++j) values(t, static_cast<Eigen::Index>(j)) = row[j];
    }

    MultivariateSeries series(std::move(dates), std::move(values), std::move(variables));
    std::vector<int> targets;
    for (const auto& name : config.target_station_names) targets.push_back(series.column(name));
    return series.with_targets(std::move(targets));
}

MultivariateSeries apply_datum_adjustments(const MultivariateSeries& series,
                                           const std::vector<DatumAdjustment>& adjustments) {
    Matrix values = series.values();
    for (const auto& adj : adjustments) {
        const int c = series.column(adj.variable_name);
        values.col(c).array() += adj.offset;
    }
    return series.with_values(std::move(values));
}

MultivariateSeries interpolate_gaps(const MultivariateSeries& series) {
    Matrix values = series.values();
    const Eigen::Index T = values.rows();
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        auto col = values.col(c);
        Eigen::Index prev = -1;
        for (Eigen::Index t = 0; t < T; ++t) {
            if (std::isnan(col(t))) continue;
            if (prev < 0) {
                for (Eigen::Index s = 0; s < t; ++s) col(s) = col(t);
            } else if (t - prev > 1) {
                const double y0 = col(prev);
                const double y1 = col(t);
                const double span = static_cast<double>(t - prev);
                for (Eigen::Index s = prev + 1; s < t; ++s) {
                    col(s) = y0 + (y1 - y0) * static_cast<double>(s - prev) / span;
                }
            }
            prev = t;
        }
        if (prev < 0) {
            throw ParseError(fmt::format("column '{}' has no observed values",
                                         series.variables()[static_cast<std::size_t>(c)].name));
        }
        for (Eigen::Index s = prev + 1; s < T; ++s) col(s) = col(prev);
    }
    return series.with_values(std::move(values));
}

void write_csv(std::ostream& out, const MultivariateSeries& series, const std::string& date_column) {
    out << date_column;
    for (const auto& v : series.variables()) out << ',' << v.name;
    out << '\n';
    for (Eigen::Index t = 0; t < series.rows(); ++t) {
        out << format_date(series.dates()[static_cast<std::size_t>(t)]);
        for (Eigen::Index c = 0; c < series.cols(); ++c) {
            const double x = series.values()(t, c);
            out << ',';
            if (!std::isnan(x)) out << fmt::format("{:.17g}", x);
        }
        out << '\n';
    }
}

}  // namespace raf
