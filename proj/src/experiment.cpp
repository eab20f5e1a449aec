#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "kabc/harness.hpp"

#ifndef KABC_VERSION
#define KABC_VERSION "0.0.0"
#endif

namespace kabc {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool parse_value(std::string_view s, double& out)
{
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

ModelSpec model_for(const ExperimentConfig& c, std::size_t n_obs)
{
    return c.experiment == Experiment::toy ? make_toy_model(n_obs) : make_blowfly_model(n_obs);
}

} // namespace

TimeSeries load_series_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open series file '{}'", path.string()));
    TimeSeries series;
    std::string line;
    std::size_t lineno = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto s = trim(line);
        if (s.empty()) continue;
        double v = 0.0;
        if (!parse_value(s, v)) {
            if (!seen_content) {
                seen_content = true;  // header line
                continue;
            }
            throw std::runtime_error(fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, s));
        }
        seen_content = true;
        if (!std::isfinite(v) || v < 0.0)
            throw std::runtime_error(fmt::format("{}:{}: population count must be finite and nonnegative", path.string(), lineno));
        series.values.push_back(v);
    }
    if (series.values.empty()) throw std::runtime_error(fmt::format("series file '{}' has no values", path.string()));
    return series;
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& series)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << "population\n";
    for (double v : series.values) out << fmt::format("{:.17g}\n", v);
}

ObservedData load_observed(const ExperimentConfig& c)
{
    ObservedData d;
    if (c.experiment == Experiment::toy) {
        const std::size_t n = c.n_observations.value_or(400);
        auto rng = make_stream(c.seed, {0xDA7Aull});
        d.samples = simulate_uniform_mixture(MixtureParams{kToyTruePi}, n, rng);
        d.source = "synthetic uniform mixture";
        return d;
    }
    TimeSeries series;
    if (c.data_path) {
        series = load_series_csv(*c.data_path);
        d.source = "file:" + *c.data_path;
    } else {
        series = blowfly_standin_series(c.n_observations.value_or(kBlowflySeriesLength));
        d.source = "synthetic stand-in (simulated blowfly series, not field data)";
    }
    if (series.size() < 5) throw ConfigError("blowfly series must have at least 5 values");
    d.samples = series.as_samples();
    d.series = std::move(series);
    return d;
}

ExperimentReport run_experiment(const ExperimentConfig& config)
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig c = resolve_config(config);
    const ObservedData observed = load_observed(c);
    const std::size_t n_obs = observed.samples.size();
    const ModelSpec model = model_for(c, n_obs);
    const MethodSettings settings = method_settings(c);

    const auto post = run_method(c.method, observed.samples, model, settings, derive_seed(c.seed, {1}));

    ExperimentReport r;
    r.library_version = KABC_VERSION;
    r.seed = c.seed;
    r.config = c;
    r.data_source = observed.source;
    r.parameter_names = model.parameter_names;
    r.flags = post.diagnostics.flags;
    r.diagnostics = post.diagnostics.scalars;
    r.diagnostic_series = post.diagnostics.series;
    r.particles = post.particles;
    r.weights = post.weights;
    if (c.experiment == Experiment::toy) r.true_theta = kToyTruePi;

    if (post.empty()) {
        r.exit_code = kExitEmptyPosterior;
    } else {
        r.posterior_mean = posterior_mean(post);
        r.posterior_q05 = posterior_quantile(post, 0.05);
        r.posterior_q50 = posterior_quantile(post, 0.50);
        r.posterior_q95 = posterior_quantile(post, 0.95);
        if (c.experiment == Experiment::toy) {
            r.metrics["rmse"] = rmse(kToyTruePi, r.posterior_mean);
        } else {
            auto regen_rng = make_stream(c.seed, {2});
            const auto series = model.simulate(r.posterior_mean, n_obs, regen_rng);
            double rho = std::numeric_limits<double>::quiet_NaN();
            if (series) {
                try {
                    rho = cross_correlation(observed.series->values, series->column(0));
                } catch (const std::invalid_argument&) {
                }
            }
            r.metrics["rho"] = rho;
        }
    }
    r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace kabc
