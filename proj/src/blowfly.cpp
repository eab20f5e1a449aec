#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "kabc/models.hpp"

namespace kabc {

namespace {

double log_normal_pdf(double x, double mean, double var)
{
    if (!(x > 0.0)) return 0.0;
    const double z = std::log(x) - mean;
    return std::exp(-0.5 * z * z / var) / (x * std::sqrt(2.0 * std::numbers::pi * var));
}

double poisson_pmf(int k, double rate)
{
    if (k < 0) return 0.0;
    return std::exp(static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0));
}

double draw_log_normal(Rng& rng, double mean, double var)
{
    std::normal_distribution<double> normal(mean, std::sqrt(var));
    return std::exp(normal(rng));
}

// Band b covers 0-based ranks [ceil(b n / 4), ceil((b+1) n / 4)).
std::size_t band_edge(std::size_t b, std::size_t n)
{
    return (b * n + 3) / 4;
}

std::vector<double> band_means(std::vector<double> v)
{
    std::stable_sort(v.begin(), v.end());
    std::vector<double> means(4);
    for (std::size_t b = 0; b < 4; ++b) {
        const std::size_t lo = band_edge(b, v.size());
        const std::size_t hi = band_edge(b + 1, v.size());
        means[b] = std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(lo),
                                   v.begin() + static_cast<std::ptrdiff_t>(hi), 0.0)
                   / static_cast<double>(hi - lo);
    }
    return means;
}

} // namespace

Theta BlowflyParams::to_theta() const
{
    return {p, n0, delta, static_cast<double>(tau), sigma_p, sigma_d};
}

BlowflyParams BlowflyParams::from_theta(const Theta& theta)
{
    if (theta.size() != 6) throw std::invalid_argument("BlowflyParams: theta must have 6 components");
    return {theta[0], theta[1], theta[2], static_cast<int>(std::lround(theta[3])), theta[4], theta[5]};
}

BlowflyParams sample_blowfly_prior(Rng& rng, const BlowflyPrior& prior)
{
    BlowflyParams b;
    b.p = draw_log_normal(rng, prior.log_p_mean, prior.log_p_var);
    b.n0 = draw_log_normal(rng, prior.log_n0_mean, prior.log_n0_var);
    b.delta = draw_log_normal(rng, prior.log_delta_mean, prior.log_delta_var);
    b.tau = std::poisson_distribution<int>(prior.tau_rate)(rng);
    b.sigma_p = draw_log_normal(rng, prior.log_sigma_p_mean, prior.log_sigma_p_var);
    b.sigma_d = draw_log_normal(rng, prior.log_sigma_d_mean, prior.log_sigma_d_var);
    return b;
}

double blowfly_prior_density(const BlowflyParams& b, const BlowflyPrior& prior)
{
    return log_normal_pdf(b.p, prior.log_p_mean, prior.log_p_var)
           * log_normal_pdf(b.n0, prior.log_n0_mean, prior.log_n0_var)
           * log_normal_pdf(b.delta, prior.log_delta_mean, prior.log_delta_var)
           * poisson_pmf(b.tau, prior.tau_rate)
           * log_normal_pdf(b.sigma_p, prior.log_sigma_p_mean, prior.log_sigma_p_var)
           * log_normal_pdf(b.sigma_d, prior.log_sigma_d_mean, prior.log_sigma_d_var);
}

double blowfly_prior_density(const Theta& theta, const BlowflyPrior& prior)
{
    if (theta.size() != 6) return 0.0;
    if (theta[3] != std::floor(theta[3]) || theta[3] < 0.0) return 0.0;
    return blowfly_prior_density(BlowflyParams::from_theta(theta), prior);
}

std::optional<TimeSeries> simulate_blowfly(const BlowflyParams& b, std::size_t length, Rng& rng,
                                           std::size_t burn_in)
{
    if (length < 1) throw std::invalid_argument("simulate_blowfly: length must be >= 1");
    if (!(b.p > 0.0 && b.n0 > 0.0 && b.delta > 0.0 && b.sigma_p > 0.0 && b.sigma_d > 0.0) || b.tau < 0)
        throw std::invalid_argument("simulate_blowfly: parameters out of support");

    const double shape_p = 1.0 / (b.sigma_p * b.sigma_p);
    const double shape_d = 1.0 / (b.sigma_d * b.sigma_d);
    // std::gamma_distribution takes (shape, scale); rate = shape gives mean 1.
    std::gamma_distribution<double> birth_noise(shape_p, 1.0 / shape_p);
    std::gamma_distribution<double> death_noise(shape_d, 1.0 / shape_d);

    const auto tau = static_cast<std::size_t>(b.tau);
    const std::size_t steps = burn_in + length;
    // history[t] holds N at time t - tau; index tau is time 0.
    std::vector<double> n(tau + 1 + steps, b.n0);
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t now = tau + t;
        const double lagged = n[now - tau];
        const double e = birth_noise(rng);
        const double eps = death_noise(rng);
        const double next = b.p * lagged * std::exp(-lagged / b.n0) * e + n[now] * std::exp(-b.delta * eps);
        if (!std::isfinite(next) || next > kBlowflyOverflow) return std::nullopt;
        n[now + 1] = next;
    }
    TimeSeries out;
    out.values.assign(n.end() - static_cast<std::ptrdiff_t>(length), n.end());
    return out;
}

std::vector<double> blowfly_summaries(std::span<const double> series)
{
    if (series.size() < 5) throw std::invalid_argument("blowfly_summaries: series must have at least 5 points");
    std::vector<double> s(series.size());
    std::transform(series.begin(), series.end(), s.begin(), [](double v) { return v / 1000.0; });
    std::vector<double> diffs(s.size() - 1);
    for (std::size_t t = 0; t + 1 < s.size(); ++t) diffs[t] = s[t + 1] - s[t];

    std::vector<double> out;
    out.reserve(10);
    for (double m : band_means(s)) out.push_back(std::log(m));
    for (double m : band_means(diffs)) out.push_back(m);
    out.push_back(*std::max_element(s.begin(), s.end()));
    out.push_back(*std::min_element(s.begin(), s.end()));
    return out;
}

std::vector<double> blowfly_summaries(const SampleSet& series)
{
    const auto col = series.column(0);
    return blowfly_summaries(std::span<const double>(col));
}

ModelSpec make_blowfly_model(std::size_t series_length, const BlowflyPrior& prior)
{
    ModelSpec m;
    m.theta_dim = 6;
    m.parameter_names = {"P", "N0", "delta", "tau", "sigma_p", "sigma_d"};
    m.support.coordinates = {Coordinate::positive, Coordinate::positive, Coordinate::positive,
                             Coordinate::nonnegative_integer, Coordinate::positive, Coordinate::positive};
    m.n_observations = series_length;
    m.prior_sample = [prior](Rng& rng) { return sample_blowfly_prior(rng, prior).to_theta(); };
    m.prior_density = [prior](const Theta& theta) { return blowfly_prior_density(theta, prior); };
    m.simulate = [](const Theta& theta, std::size_t n, Rng& rng) -> std::optional<SampleSet> {
        auto series = simulate_blowfly(BlowflyParams::from_theta(theta), n, rng);
        if (!series) return std::nullopt;
        return series->as_samples();
    };
    m.summary = [](const SampleSet& s) { return blowfly_summaries(s); };
    return m;
}

BlowflyParams blowfly_standin_params()
{
    return {std::exp(3.0), std::exp(6.0), std::exp(-1.5), 6, std::exp(0.1), std::exp(-0.1)};
}

TimeSeries blowfly_standin_series(std::size_t length)
{
    Rng rng(kBlowflyStandinSeed);
    auto series = simulate_blowfly(blowfly_standin_params(), length, rng);
    if (!series) throw std::logic_error("blowfly_standin_series: stand-in parameters overflowed");
    return *std::move(series);
}

} // namespace kabc
