#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kabc/distance.hpp"
#include "kabc/random.hpp"
#include "kabc/sample_set.hpp"

namespace kabc {

enum class Coordinate { real, positive, nonnegative_integer };

/// Where parameter vectors live; used by the SMC perturbation step.
struct ParameterSupport {
    bool simplex = false;                 // whole vector on the probability simplex
    std::vector<Coordinate> coordinates;  // empty means every coordinate is real
};

/// Prior, likelihood-free simulator and optional summary statistics.
struct ModelSpec {
    std::size_t theta_dim = 0;
    std::vector<std::string> parameter_names;
    ParameterSupport support;
    /// Observations per simulated dataset (series length for time-series models).
    std::size_t n_observations = 0;

    std::function<Theta(Rng&)> prior_sample;
    std::function<double(const Theta&)> prior_density;
    /// Returns nullopt when the simulation is numerically invalid (treated as
    /// infinitely far from the observed data).
    std::function<std::optional<SampleSet>(const Theta&, std::size_t, Rng&)> simulate;
    SummaryFn summary;
};

/// Run statistics. Scalars and per-particle series are keyed by name; flags
/// mark exceptional outcomes ("empty_posterior", "uniform_fallback", ...).
struct Diagnostics {
    std::map<std::string, double> scalars;
    std::map<std::string, std::vector<double>> series;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
    void flag(const std::string& f);
};

struct WeightedPosterior {
    std::vector<Theta> particles;
    std::vector<double> weights;
    Diagnostics diagnostics;

    bool empty() const { return particles.empty(); }
    std::size_t size() const { return particles.size(); }
};

struct SmcSchedule {
    std::vector<double> thresholds;
    std::size_t n_particles = 1000;
    double perturb_variance = 1e-4;
    /// Proposals per generation before giving up, as a multiple of n_particles.
    std::size_t budget_factor = 100;
    std::size_t max_support_retries = 100;

    /// Throws std::invalid_argument on an empty, non-positive or non-decreasing schedule.
    void validate() const;
};

struct EngineOptions {
    std::size_t threads = 1;
};

/// Stream addresses. Simulation i of a one-pass engine uses
/// make_stream(seed, {i}); SMC attempt a of generation g uses
/// make_stream(seed, {g, a}).
Rng simulation_stream(std::uint64_t seed, std::size_t index);
Rng smc_stream(std::uint64_t seed, std::size_t generation, std::size_t attempt);

/// Classic rejection ABC on Euclidean summary distance. Accepted particles get
/// uniform weights; zero acceptances yield an empty posterior flagged
/// "empty_posterior".
WeightedPosterior abc_rejection(const SampleSet& observed, const ModelSpec& model, double epsilon,
                                std::size_t n_sims, std::uint64_t seed, EngineOptions options = {});

/// Soft-weighted ABC: every simulation is kept with weight exp(-gamma/eps),
/// negative gammas clamped to zero, weights normalized.
WeightedPosterior abc_weighted(const SampleSet& observed, const ModelSpec& model, const DistanceSpec& distance,
                               std::size_t n_sims, std::uint64_t seed, EngineOptions options = {});

/// Population Monte Carlo ABC over a decreasing threshold schedule. A
/// generation that exhausts its proposal budget stops the run; the returned
/// posterior is the last completed generation, flagged "aborted".
WeightedPosterior abc_smc(const SampleSet& observed, const ModelSpec& model, const DistanceSpec& distance,
                          const SmcSchedule& schedule, std::uint64_t seed, EngineOptions options = {});

/// Isotropic Gaussian move followed by projection onto the support: simplex
/// vectors are clipped at zero and renormalized, integer coordinates rounded
/// to the nearest nonnegative integer.
Theta perturb(const Theta& theta, double variance, const ParameterSupport& support, Rng& rng);

Theta posterior_mean(const WeightedPosterior& posterior);

/// Weighted quantile per coordinate (lower interpolation-free inverse CDF).
std::vector<double> posterior_quantile(const WeightedPosterior& posterior, double q);

} // namespace kabc
