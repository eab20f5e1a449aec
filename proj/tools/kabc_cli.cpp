// Command-line front end: run, sweep, rho-protocol, bandwidth, standin.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "kabc/harness.hpp"

using namespace kabc;

namespace {

// Each flag is stored as raw text and applied through set_config_value, so a
// flag and its config key always mean the same thing.
struct Overrides {
    std::string config_path;
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help)
    {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }

    ExperimentConfig build() const
    {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config_file(config_path);
        for (const auto& [k, v] : values) set_config_value(c, k, v);
        return resolve_config(c);
    }
};

void add_common(CLI::App* app, Overrides& o)
{
    app->add_option("--config", o.config_path, "Config file (key = value lines)");
    o.add(app, "--seed", "seed", "Master seed");
    o.add(app, "--out", "output_path", "Output directory");
    o.add(app, "--threads", "threads", "Worker threads");
    o.add(app, "--experiment", "experiment", "toy | blowfly");
    o.add(app, "--method", "method", "abc | k2abc | pabc | abc-smc | k2abc-smc | pabc-smc");
    o.add(app, "--n-observations", "n_observations", "Observation count, or 'auto'");
    o.add(app, "--n-sims", "n_sims", "Simulations per run");
    o.add(app, "--epsilon", "epsilon", "ABC threshold or soft-kernel scale, or 'auto'");
    o.add(app, "--epsilon-quantile", "epsilon_quantile", "Quantile of distances used when epsilon is auto");
    o.add(app, "--epsilon-schedule", "epsilon_schedule", "Comma-separated decreasing SMC thresholds");
    o.add(app, "--n-particles", "n_particles", "SMC particles per generation");
    o.add(app, "--perturb-variance", "perturb_variance", "SMC Gaussian perturbation variance");
    o.add(app, "--data", "data_path", "Observed blowfly series CSV");
}

std::filesystem::path prepare_out(const ExperimentConfig& c)
{
    const std::filesystem::path out = c.output_path;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", out.string(), ec.message()));
    return out;
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
    return os;
}

nlohmann::json json_num(double x)
{
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

int cmd_run(const Overrides& o)
{
    const ExperimentConfig c = o.build();
    const ExperimentReport r = run_experiment(c);
    write_report(r, prepare_out(c));

    fmt::print("experiment {} method {} seed {}\n", to_string(c.experiment), to_string(c.method), c.seed);
    fmt::print("data: {}\n", r.data_source);
    if (r.exit_code == kExitEmptyPosterior) {
        std::fflush(stdout);
        fmt::print(stderr, "empty posterior: no simulation was accepted\n");
    } else {
        for (std::size_t i = 0; i < r.parameter_names.size(); ++i)
            fmt::print("  {:>8} mean {:.6g}  [q05 {:.6g}, q95 {:.6g}]\n", r.parameter_names[i], r.posterior_mean[i],
                       r.posterior_q05[i], r.posterior_q95[i]);
        for (const auto& [k, v] : r.metrics) fmt::print("{} {:.6g}\n", k, v);
    }
    for (const auto& f : r.flags) fmt::print("flag: {}\n", f);
    fmt::print("wrote {}\n", c.output_path);
    return r.exit_code;
}

int cmd_sweep(const Overrides& o)
{
    const ExperimentConfig c = o.build();
    if (c.experiment != Experiment::toy) throw ConfigError("sweep runs the toy experiment only");
    SweepConfig sc;
    sc.start = c.sweep_start;
    sc.stop = c.sweep_stop;
    sc.step = c.sweep_step;
    sc.settings = method_settings(c);
    const SweepResult res = observation_sweep(sc, c.sweep_methods, c.seed);

    const auto out = prepare_out(c);
    {
        auto os = open_out(out / "sweep.csv");
        write_sweep_csv(os, res);
    }
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [name, s] : res.summary) {
        summary[name] = {{"mean_rmse", json_num(s.mean)}, {"sd_rmse", json_num(s.stddev)}, {"n_ok", s.n_ok},
                         {"n_cells", res.observation_counts.size()}};
        fmt::print("{:>10}  mean RMSE {:.6g}  sd {:.6g}  ({} of {} cells ok)\n", name, s.mean, s.stddev, s.n_ok,
                   res.observation_counts.size());
    }
    nlohmann::json doc = {{"seed", c.seed}, {"n_sims", c.n_sims}, {"summary", summary}};
    open_out(out / "sweep_summary.json") << doc.dump(2) << '\n';
    return kExitOk;
}

int cmd_rho(const Overrides& o)
{
    const ExperimentConfig c = o.build();
    if (c.experiment != Experiment::blowfly) throw ConfigError("rho-protocol requires experiment = blowfly");
    const ObservedData data = load_observed(c);
    const ModelSpec model = make_blowfly_model(data.series->size());
    const RhoProtocolResult res =
        top_k_rho_protocol(*data.series, model, c.method, method_settings(c), c.rho_draws, c.rho_keep, c.seed);

    const auto out = prepare_out(c);
    {
        auto os = open_out(out / "rho.csv");
        write_rho_csv(os, res);
    }
    nlohmann::json doc = {{"seed", c.seed},
                          {"method", std::string(to_string(c.method))},
                          {"data_source", data.source},
                          {"draws", c.rho_draws},
                          {"keep", c.rho_keep},
                          {"median", json_num(res.median)},
                          {"q25", json_num(res.q25)},
                          {"q75", json_num(res.q75)},
                          {"shortfall", res.shortfall}};
    open_out(out / "rho_summary.json") << doc.dump(2) << '\n';
    fmt::print("data: {}\n", data.source);
    fmt::print("top-{} of {} rho: median {:.6g} [q25 {:.6g}, q75 {:.6g}]{}\n", c.rho_keep, c.rho_draws, res.median,
               res.q25, res.q75, res.shortfall ? " (shortfall: too few valid draws)" : "");
    return kExitOk;
}

int cmd_bandwidth(const Overrides& o)
{
    const ExperimentConfig c = o.build();
    const ObservedData data = load_observed(c);
    const double h = select_bandwidth_mise(data.samples);
    fmt::print("{:.17g}\n", h);
    if (data.samples.dim() == 1) {
        const auto col = data.samples.column(0);
        const BandwidthProfile p = mise_bandwidth_profile(col);
        auto os = open_out(prepare_out(c) / "bandwidth.csv");
        os << "bandwidth,cost\n";
        for (std::size_t i = 0; i < p.candidates.size(); ++i)
            fmt::print(os, "{:.17g},{:.17g}\n", p.candidates[i], p.costs[i]);
    }
    return kExitOk;
}

int cmd_standin(const Overrides& o)
{
    ExperimentConfig c = o.build();
    const TimeSeries s = blowfly_standin_series(c.n_observations.value_or(kBlowflySeriesLength));
    const auto path = prepare_out(c) / "blowfly_synthetic.csv";
    write_series_csv(path, s);
    fmt::print("wrote {} ({} values)\n", path.string(), s.size());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Kernel-based approximate Bayesian computation experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(KABC_CLI_VERSION));

    Overrides o;
    auto* run = app.add_subcommand("run", "Run one experiment and write report.json, particles.csv, metrics.csv");
    auto* sweep = app.add_subcommand("sweep", "Toy RMSE sweep over observation counts");
    auto* rho = app.add_subcommand("rho-protocol", "Blowfly top-k correlation protocol");
    auto* bw = app.add_subcommand("bandwidth", "MISE bandwidth of the observed data");
    auto* standin = app.add_subcommand("standin", "Write the synthetic blowfly stand-in series");
    for (auto* sub : {run, sweep, rho, bw, standin}) add_common(sub, o);
    for (auto [flag, key] : {std::pair{"--sweep-start", "sweep.start"}, {"--sweep-stop", "sweep.stop"},
                             {"--sweep-step", "sweep.step"}, {"--sweep-methods", "sweep.methods"}})
        o.add(sweep, flag, key, std::string("Config key ") + key);
    o.add(rho, "--draws", "rho.draws", "Number of independent runs");
    o.add(rho, "--keep", "rho.keep", "Number of top correlations kept");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (*run) return cmd_run(o);
        if (*sweep) return cmd_sweep(o);
        if (*rho) return cmd_rho(o);
        if (*bw) return cmd_bandwidth(o);
        if (*standin) return cmd_standin(o);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitRuntimeError;
    }
    return kExitConfigError;
}
