#include "raf/synthetic.hpp"

#include <fmt/format.h>

#include <numbers>
#include <random>

namespace raf {
namespace {

double episode_shape(int template_id, double u) {
    using std::numbers::pi;
    switch (template_id % 3) {
        case 0: return std::sin(pi * u);                                       // rise and recede
        case 1: return u < 0.2 ? -u / 0.2 : -std::exp(-(u - 0.2) * 5.0);      // sharp drop, slow recovery
        default: return std::sin(2.0 * pi * 3.0 * u) * (1.0 - u);             // damped oscillation
    }
}

Variable variable_for(Eigen::Index index, Eigen::Index stations) {
    static const char* kStations[] = {"NP205", "P33", "G620", "NESRS1", "NESRS2"};
    if (index < stations) {
        if (stations <= 5) return {kStations[index], "ft"};
        return {fmt::format("WL{}", index + 1), "ft"};
    }
    switch ((index - stations) % 3) {
        case 0: return {fmt::format("RAIN{}", index - stations + 1), "inches"};
        case 1: return {fmt::format("PET{}", index - stations + 1), "mm"};
        default: return {fmt::format("FLOW{}", index - stations + 1), "cfs"};
    }
}

}  // namespace

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec) {
    if (spec.days < 2 || spec.variables < 1 || spec.stations < 1 || spec.stations > spec.variables) {
        throw ConfigError("invalid synthetic dataset dimensions");
    }
    if (spec.templates < 1 || spec.episode_length < 2 || spec.min_gap < spec.episode_length ||
        spec.max_gap < spec.min_gap) {
        throw ConfigError("invalid synthetic episode schedule");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const Eigen::Index T = spec.days;
    const Eigen::Index m = spec.variables;
    Vector level(m), amplitude(m), phase(m), scale(m);
    for (Eigen::Index v = 0; v < m; ++v) {
        const bool station = v < spec.stations;
        scale(v) = station ? 1.0 : 0.5 + unit(rng);
        level(v) = station ? 5.0 + 2.0 * unit(rng) : 2.0 * scale(v);
        amplitude(v) = (station ? 0.6 + 0.4 * unit(rng) : 0.5) * scale(v);
        phase(v) = 2.0 * std::numbers::pi * (station ? 0.1 * unit(rng) : unit(rng));
    }
    Matrix loading(spec.templates, m);
    for (int k = 0; k < spec.templates; ++k) {
        for (Eigen::Index v = 0; v < m; ++v) loading(k, v) = (1.0 + 0.5 * unit(rng)) * scale(v);
    }

    std::vector<SyntheticEpisode> episodes;
    std::uniform_int_distribution<Eigen::Index> gap(spec.min_gap, spec.max_gap);
    std::uniform_int_distribution<int> pick(0, spec.templates - 1);
    for (Eigen::Index start = gap(rng) / 2; start + spec.episode_length <= T; start += gap(rng)) {
        episodes.push_back({start, pick(rng)});
    }

    Matrix values(T, m);
    for (Eigen::Index t = 0; t < T; ++t) {
        const double season = 2.0 * std::numbers::pi * static_cast<double>(t) / 365.25;
        for (Eigen::Index v = 0; v < m; ++v) {
            values(t, v) = level(v) + amplitude(v) * std::sin(season + phase(v)) +
                           spec.noise * scale(v) * gauss(rng);
        }
    }
    for (const auto& e : episodes) {
        for (Eigen::Index tau = 0; tau < spec.episode_length; ++tau) {
            const double u = static_cast<double>(tau) / static_cast<double>(spec.episode_length);
            const double shape = episode_shape(e.template_id, u);
            for (Eigen::Index v = 0; v < m; ++v) values(e.start + tau, v) += loading(e.template_id, v) * shape;
        }
    }

    std::vector<Date> dates(static_cast<std::size_t>(T));
    const Date first{std::chrono::year{2020} / std::chrono::October / 16};
    for (Eigen::Index t = 0; t < T; ++t) dates[static_cast<std::size_t>(t)] = first + std::chrono::days{t};
    std::vector<Variable> variables;
    std::vector<int> targets;
    for (Eigen::Index v = 0; v < m; ++v) {
        variables.push_back(variable_for(v, spec.stations));
        if (v < spec.stations) targets.push_back(static_cast<int>(v));
    }
    return {MultivariateSeries(std::move(dates), std::move(values), std::move(variables), std::move(targets)),
            std::move(episodes)};
}

}  // namespace raf
