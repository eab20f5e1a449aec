#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kabc/engines.hpp"
#include "kabc/evaluation.hpp"
#include "kabc/models.hpp"

namespace kabc {

/// Raised for invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Experiment { toy, blowfly };

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view name);

enum ExitCode : int { kExitOk = 0, kExitConfigError = 1, kExitEmptyPosterior = 2, kExitRuntimeError = 3 };

struct ExperimentConfig {
    Experiment experiment = Experiment::toy;
    Method method = Method::pabc;
    std::optional<std::size_t> n_observations;  // default: 400 (toy), series length (blowfly)
    std::size_t n_sims = 1000;
    std::optional<double> epsilon;              // abc threshold, or soft-kernel scale; unset = auto
    double epsilon_quantile = 0.5;
    std::vector<double> epsilon_schedule;       // SMC methods only
    std::size_t n_particles = 1000;
    double perturb_variance = 1e-4;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::optional<std::string> data_path;
    std::string output_path = "out";

    std::size_t sweep_start = 40;
    std::size_t sweep_stop = 400;
    std::size_t sweep_step = 5;
    std::vector<Method> sweep_methods{Method::abc, Method::k2abc, Method::pabc};

    std::size_t rho_draws = 100;
    std::size_t rho_keep = 50;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Set one field from its dotted key, e.g. "sweep.start". Throws ConfigError
/// for unknown keys or unparsable values.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment; blank lines ignored.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Fill experiment-dependent defaults and check cross-field invariants.
/// Throws ConfigError.
ExperimentConfig resolve_config(ExperimentConfig config);

/// Engine settings derived from a resolved configuration.
MethodSettings method_settings(const ExperimentConfig& config);

struct ExperimentReport {
    std::string library_version;
    std::uint64_t seed = 0;
    ExperimentConfig config;
    std::string data_source;

    std::vector<std::string> parameter_names;
    std::vector<double> posterior_mean;
    std::vector<double> posterior_q05;
    std::vector<double> posterior_q50;
    std::vector<double> posterior_q95;
    std::vector<double> true_theta;             // toy only
    std::map<std::string, double> metrics;      // rmse (toy), rho (blowfly)

    std::map<std::string, double> diagnostics;
    std::map<std::string, std::vector<double>> diagnostic_series;
    std::vector<std::string> flags;
    double wall_time_seconds = 0.0;
    int exit_code = kExitOk;

    std::vector<Theta> particles;
    std::vector<double> weights;

    bool operator==(const ExperimentReport&) const;
};

/// Observed blowfly population counts, one value per line with an optional
/// header line. Throws std::runtime_error naming the offending line.
TimeSeries load_series_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series);

/// Observed data for a resolved config and a description of where it came from.
struct ObservedData {
    SampleSet samples;
    std::optional<TimeSeries> series;
    std::string source;
};
ObservedData load_observed(const ExperimentConfig& config);

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes report.json, particles.csv and metrics.csv into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);
ExperimentReport read_report(const std::filesystem::path& dir);

void write_particles_csv(std::ostream& os, const std::vector<std::string>& names, const std::vector<Theta>& particles,
                         const std::vector<double>& weights);

std::string config_to_text(const ExperimentConfig& config);

} // namespace kabc
