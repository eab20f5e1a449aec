#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kabc/engines.hpp"
#include "kabc/models.hpp"

namespace kabc {

enum class Method { abc, k2abc, pabc, abc_smc, k2abc_smc, pabc_smc };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);
bool is_smc(Method m);
const std::vector<Method>& all_methods();

/// Engine knobs shared by every method; each method reads the subset it needs.
struct MethodSettings {
    std::size_t n_sims = 1000;
    double abc_epsilon = 0.002;
    std::optional<double> kernel_epsilon;  // unset: quantile heuristic
    double epsilon_quantile = 0.5;
    std::vector<double> schedule;
    std::size_t n_particles = 1000;
    double perturb_variance = 1e-4;
    std::size_t threads = 1;
};

/// Kernel distance for a kernel method: sigma = h_p = h_q = MISE bandwidth of
/// the observed data. abc and abc-smc get the summary distance.
DistanceSpec method_distance(Method m, const SampleSet& observed, const MethodSettings& settings);

WeightedPosterior run_method(Method m, const SampleSet& observed, const ModelSpec& model,
                             const MethodSettings& settings, std::uint64_t seed);

double rmse(std::span<const double> truth, std::span<const double> estimate);

/// Zero-lag Pearson correlation. Throws on length mismatch, length < 2 or a
/// constant series.
double cross_correlation(std::span<const double> a, std::span<const double> b);

/// Weighted Gaussian KDE evaluated on `grid`. Without an explicit bandwidth
/// the MISE selector runs on the particles; if they are all identical the
/// bandwidth falls back to twice the grid spacing.
std::vector<double> weighted_kde_posterior(std::span<const double> particles, std::span<const double> weights,
                                           std::span<const double> grid,
                                           std::optional<double> bandwidth = std::nullopt);

/// Type-7 quantile.
double quantile(std::vector<double> values, double q);

struct SweepConfig {
    std::size_t start = 40;
    std::size_t stop = 400;
    std::size_t step = 5;
    MethodSettings settings;
    std::vector<double> true_pi = kToyTruePi;
    double dirichlet_alpha = 1.0;

    std::vector<std::size_t> counts() const;
};

struct SweepStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n_ok = 0;
};

struct SweepResult {
    std::vector<std::size_t> observation_counts;
    std::vector<std::string> methods;
    /// Per method, one RMSE per observation count; NaN where the cell failed.
    std::map<std::string, std::vector<double>> rmse;
    /// Per method, a failure note per count; empty string means success.
    std::map<std::string, std::vector<std::string>> failures;
    std::map<std::string, SweepStats> summary;
};

/// For each observation count, draws one observed toy dataset, runs every
/// method on it with a shared seed and records the RMSE of the posterior mean
/// against the true mixing weights.
SweepResult observation_sweep(const SweepConfig& config, const std::vector<Method>& methods, std::uint64_t seed);

void write_sweep_csv(std::ostream& os, const SweepResult& result);

struct RhoProtocolResult {
    std::vector<double> rho;        // per draw, NaN when the regenerated series was invalid
    std::vector<bool> kept;         // per draw, true if among the top-k
    std::vector<double> top_k;      // sorted descending
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    bool shortfall = false;         // fewer than k valid draws
};

/// Runs `method` n_draws times with independent seeds, regenerates a series
/// at each posterior mean with fresh noise, correlates it with `observed` and
/// keeps the k largest correlations.
RhoProtocolResult top_k_rho_protocol(const TimeSeries& observed, const ModelSpec& model, Method method,
                                     const MethodSettings& settings, std::size_t n_draws, std::size_t k,
                                     std::uint64_t seed);

void write_rho_csv(std::ostream& os, const RhoProtocolResult& result);

} // namespace kabc
