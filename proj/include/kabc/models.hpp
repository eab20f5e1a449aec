#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kabc/engines.hpp"
#include "kabc/random.hpp"
#include "kabc/sample_set.hpp"

namespace kabc {

// ---------------------------------------------------------------------------
// Uniform mixture toy problem: component k is uniform on [k-1, k).
// ---------------------------------------------------------------------------

struct MixtureParams {
    std::vector<double> pi;

    std::size_t k() const { return pi.size(); }
    /// Throws std::invalid_argument unless pi is on the simplex (tolerance 1e-9).
    void validate() const;
};

/// Mixing coefficients used for the synthetic toy dataset.
inline const std::vector<double> kToyTruePi{0.25, 0.04, 0.33, 0.04, 0.34};

std::vector<double> sample_dirichlet(double alpha, std::size_t k, Rng& rng);
double dirichlet_density(std::span<const double> pi, double alpha);

SampleSet simulate_uniform_mixture(const MixtureParams& params, std::size_t n, Rng& rng);

/// (sample mean, sample standard deviation with the n-1 divisor).
std::vector<double> toy_summaries(const SampleSet& samples);

/// Symmetric Dirichlet(alpha) prior over K mixing weights; simulated sets
/// contain n_observations draws.
ModelSpec make_toy_model(std::size_t n_observations, std::size_t k = 5, double alpha = 1.0);

// ---------------------------------------------------------------------------
// Noisy blowfly population dynamics.
// ---------------------------------------------------------------------------

struct BlowflyParams {
    double p = 0.0;        // reproduction rate
    double n0 = 0.0;       // population scale
    double delta = 0.0;    // death-rate factor
    int tau = 0;           // delay in time steps
    double sigma_p = 0.0;  // birth noise scale
    double sigma_d = 0.0;  // death noise scale

    Theta to_theta() const;
    /// tau is rounded to the nearest integer.
    static BlowflyParams from_theta(const Theta& theta);
};

/// Prior: log P ~ N(3, 0.2), log N0 ~ N(6, 0.2), log delta ~ N(-1.5, 0.1),
/// log sigma_p ~ N(0.1, 0.01), log sigma_d ~ N(-0.1, 0.01) (second argument
/// is the variance), tau ~ Poisson(6).
struct BlowflyPrior {
    double log_p_mean = 3.0, log_p_var = 0.2;
    double log_n0_mean = 6.0, log_n0_var = 0.2;
    double log_delta_mean = -1.5, log_delta_var = 0.1;
    double log_sigma_p_mean = 0.1, log_sigma_p_var = 0.01;
    double log_sigma_d_mean = -0.1, log_sigma_d_var = 0.01;
    double tau_rate = 6.0;
};

BlowflyParams sample_blowfly_prior(Rng& rng, const BlowflyPrior& prior = {});
double blowfly_prior_density(const BlowflyParams& params, const BlowflyPrior& prior = {});
/// Zero unless theta[3] is an exact nonnegative integer and the rest are positive.
double blowfly_prior_density(const Theta& theta, const BlowflyPrior& prior = {});

struct TimeSeries {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    SampleSet as_samples() const { return SampleSet::from_scalars(values); }
};

inline constexpr std::size_t kBlowflyBurnIn = 50;
inline constexpr double kBlowflyOverflow = 1e12;
inline constexpr std::size_t kBlowflySeriesLength = 180;

/// N_{t+1} = P N_{t-tau} exp(-N_{t-tau}/N0) e_t + N_t exp(-delta eps_t), with
/// e_t ~ Gamma(1/sigma_p^2, rate 1/sigma_p^2) and eps_t ~ Gamma(1/sigma_d^2,
/// rate 1/sigma_d^2). History slots start at N0; the first burn_in steps are
/// discarded. Returns nullopt if the population exceeds kBlowflyOverflow or
/// becomes non-finite.
std::optional<TimeSeries> simulate_blowfly(const BlowflyParams& params, std::size_t length, Rng& rng,
                                           std::size_t burn_in = kBlowflyBurnIn);

/// Ten statistics of s_t = N_t / 1000: log of the mean of each quartile rank
/// band of s (4), mean of each quartile rank band of the first differences
/// (4), max(s), min(s).
std::vector<double> blowfly_summaries(std::span<const double> series);
std::vector<double> blowfly_summaries(const SampleSet& series);

ModelSpec make_blowfly_model(std::size_t series_length = kBlowflySeriesLength, const BlowflyPrior& prior = {});

/// Parameters of the shipped synthetic stand-in series: the componentwise
/// prior medians, tau = 6.
BlowflyParams blowfly_standin_params();
inline constexpr std::uint64_t kBlowflyStandinSeed = 0;

/// The synthetic stand-in for the observed blowfly series (deterministic).
TimeSeries blowfly_standin_series(std::size_t length = kBlowflySeriesLength);

} // namespace kabc
