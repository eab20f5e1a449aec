#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kabc/models.hpp"

namespace kabc {

void MixtureParams::validate() const
{
    if (pi.empty()) throw std::invalid_argument("MixtureParams: no components");
    double total = 0.0;
    for (double p : pi) {
        if (!(p >= 0.0)) throw std::invalid_argument("MixtureParams: negative or NaN mixing weight");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("MixtureParams: weights do not sum to 1");
}

std::vector<double> sample_dirichlet(double alpha, std::size_t k, Rng& rng)
{
    if (!(alpha > 0.0)) throw std::invalid_argument("sample_dirichlet: alpha must be positive");
    if (k < 1) throw std::invalid_argument("sample_dirichlet: K must be >= 1");
    if (k == 1) return {1.0};
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> v(k);
    double total = 0.0;
    for (double& x : v) {
        x = gamma(rng);
        total += x;
    }
    if (!(total > 0.0)) {
        // Only reachable for tiny alpha where every gamma draw underflows.
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::fill(v.begin(), v.end(), 0.0);
        v[pick(rng)] = 1.0;
        return v;
    }
    for (double& x : v) x /= total;
    return v;
}

double dirichlet_density(std::span<const double> pi, double alpha)
{
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_density: alpha must be positive");
    if (pi.empty()) return 0.0;
    double total = 0.0;
    for (double p : pi) {
        if (!(p >= 0.0)) return 0.0;
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) return 0.0;
    const double k = static_cast<double>(pi.size());
    double log_d = std::lgamma(k * alpha) - k * std::lgamma(alpha);
    if (alpha != 1.0)
        for (double p : pi) log_d += (alpha - 1.0) * std::log(p);
    return std::exp(log_d);
}

SampleSet simulate_uniform_mixture(const MixtureParams& params, std::size_t n, Rng& rng)
{
    params.validate();
    if (n == 0) throw std::invalid_argument("simulate_uniform_mixture: n must be >= 1");
    std::vector<double> cumulative(params.k());
    std::partial_sum(params.pi.begin(), params.pi.end(), cumulative.begin());
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Eigen::MatrixXd points(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = u01(rng) * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        auto comp = static_cast<std::size_t>(it - cumulative.begin());
        comp = std::min(comp, params.k() - 1);
        // A zero-weight component can only be hit through rounding at the
        // boundary; step back to the last component with mass.
        while (comp > 0 && params.pi[comp] == 0.0) --comp;
        points(static_cast<Eigen::Index>(i), 0) = static_cast<double>(comp) + u01(rng);
    }
    return SampleSet(std::move(points));
}

std::vector<double> toy_summaries(const SampleSet& samples)
{
    if (samples.size() < 2) throw std::invalid_argument("toy_summaries: need at least 2 samples");
    const auto col = samples.column(0);
    const double n = static_cast<double>(col.size());
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : col) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

ModelSpec make_toy_model(std::size_t n_observations, std::size_t k, double alpha)
{
    if (k < 1) throw std::invalid_argument("make_toy_model: K must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("make_toy_model: alpha must be positive");
    ModelSpec m;
    m.theta_dim = k;
    for (std::size_t i = 0; i < k; ++i) m.parameter_names.push_back("pi" + std::to_string(i + 1));
    m.support.simplex = true;
    m.support.coordinates.assign(k, Coordinate::positive);
    m.n_observations = n_observations;
    m.prior_sample = [alpha, k](Rng& rng) { return sample_dirichlet(alpha, k, rng); };
    m.prior_density = [alpha](const Theta& theta) { return dirichlet_density(theta, alpha); };
    m.simulate = [](const Theta& theta, std::size_t n, Rng& rng) -> std::optional<SampleSet> {
        return simulate_uniform_mixture(MixtureParams{theta}, n, rng);
    };
    m.summary = toy_summaries;
    return m;
}

} // namespace kabc
