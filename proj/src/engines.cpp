#include "kabc/engines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "kabc/detail/summation.hpp"
#include "kabc/parallel.hpp"

namespace kabc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Proposal {
    Theta theta;
    double distance = kInf;
    bool valid = false;
};

double simulate_distance(const ModelSpec& model, const ObservedDistance& distance, const Theta& theta, Rng& rng,
                         bool& valid)
{
    const auto sim = model.simulate(theta, model.n_observations, rng);
    valid = sim.has_value();
    if (!valid) return kInf;
    const double d = distance(*sim);
    if (std::isnan(d)) {
        valid = false;
        return kInf;
    }
    return d;
}

void require_model(const ModelSpec& model, const char* what)
{
    if (!model.prior_sample || !model.simulate)
        throw std::invalid_argument(std::string(what) + ": model needs prior_sample and simulate");
    if (model.n_observations == 0) throw std::invalid_argument(std::string(what) + ": model.n_observations is zero");
}

// Type-7 quantile of an unsorted copy.
double quantile_of(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void normalize(std::vector<double>& w)
{
    const double total = detail::pairwise_sum(w);
    for (double& x : w) x /= total;
}

double log_sum_exp(const std::vector<double>& v)
{
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

void record_distance_summary(Diagnostics& diag, const std::string& prefix, const std::vector<double>& d)
{
    std::vector<double> finite;
    for (double x : d)
        if (std::isfinite(x)) finite.push_back(x);
    if (finite.empty()) return;
    diag.scalars[prefix + "_min"] = *std::min_element(finite.begin(), finite.end());
    diag.scalars[prefix + "_median"] = quantile_of(finite, 0.5);
    diag.scalars[prefix + "_max"] = *std::max_element(finite.begin(), finite.end());
}

} // namespace

bool Diagnostics::has_flag(const std::string& f) const
{
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void Diagnostics::flag(const std::string& f)
{
    if (!has_flag(f)) flags.push_back(f);
}

void SmcSchedule::validate() const
{
    if (thresholds.empty()) throw std::invalid_argument("SmcSchedule: empty threshold schedule");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0)) throw std::invalid_argument("SmcSchedule: thresholds must be positive");
        if (i > 0 && !(thresholds[i] < thresholds[i - 1]))
            throw std::invalid_argument("SmcSchedule: thresholds must be strictly decreasing");
    }
    if (n_particles < 2) throw std::invalid_argument("SmcSchedule: n_particles must be >= 2");
    if (!(perturb_variance > 0.0)) throw std::invalid_argument("SmcSchedule: perturb_variance must be positive");
    if (budget_factor == 0) throw std::invalid_argument("SmcSchedule: budget_factor must be >= 1");
}

Rng simulation_stream(std::uint64_t seed, std::size_t index)
{
    return make_stream(seed, {static_cast<std::uint64_t>(index)});
}

Rng smc_stream(std::uint64_t seed, std::size_t generation, std::size_t attempt)
{
    return make_stream(seed, {static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(attempt)});
}

WeightedPosterior abc_rejection(const SampleSet& observed, const ModelSpec& model, double epsilon,
                                std::size_t n_sims, std::uint64_t seed, EngineOptions options)
{
    require_model(model, "abc_rejection");
    if (!model.summary) throw std::invalid_argument("abc_rejection: model has no summary statistics");
    if (n_sims == 0) throw std::invalid_argument("abc_rejection: n_sims must be >= 1");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("abc_rejection: epsilon must be nonnegative");

    DistanceSpec spec;
    spec.kind = DistanceKind::summary_euclidean;
    const ObservedDistance distance(observed, spec, model.summary);
    std::vector<Proposal> props(n_sims);
    parallel_for(n_sims, options.threads, [&](std::size_t i) {
        auto rng = simulation_stream(seed, i);
        auto& p = props[i];
        p.theta = model.prior_sample(rng);
        p.distance = simulate_distance(model, distance, p.theta, rng, p.valid);
    });

    WeightedPosterior post;
    std::vector<double> all_d;
    all_d.reserve(n_sims);
    std::size_t invalid = 0;
    for (auto& p : props) {
        all_d.push_back(p.distance);
        if (!p.valid) ++invalid;
        if (p.valid && p.distance <= epsilon) {
            post.particles.push_back(std::move(p.theta));
            post.diagnostics.series["distance"].push_back(p.distance);
        }
    }
    auto& diag = post.diagnostics;
    diag.scalars["epsilon"] = epsilon;
    diag.scalars["n_sims"] = static_cast<double>(n_sims);
    diag.scalars["n_accepted"] = static_cast<double>(post.particles.size());
    diag.scalars["acceptance_rate"] = static_cast<double>(post.particles.size()) / static_cast<double>(n_sims);
    diag.scalars["n_invalid"] = static_cast<double>(invalid);
    record_distance_summary(diag, "distance", all_d);
    if (post.particles.empty()) {
        diag.flag("empty_posterior");
        return post;
    }
    post.weights.assign(post.particles.size(), 1.0 / static_cast<double>(post.particles.size()));
    return post;
}

WeightedPosterior abc_weighted(const SampleSet& observed, const ModelSpec& model, const DistanceSpec& spec,
                               std::size_t n_sims, std::uint64_t seed, EngineOptions options)
{
    require_model(model, "abc_weighted");
    if (n_sims == 0) throw std::invalid_argument("abc_weighted: n_sims must be >= 1");
    if (spec.kind == DistanceKind::summary_euclidean && !model.summary)
        throw std::invalid_argument("abc_weighted: summary distance requested but model has no summary");
    if (spec.epsilon && !(*spec.epsilon > 0.0)) throw std::invalid_argument("abc_weighted: epsilon must be positive");
    if (!(spec.epsilon_quantile > 0.0 && spec.epsilon_quantile <= 1.0))
        throw std::invalid_argument("abc_weighted: epsilon_quantile must lie in (0, 1]");

    const ObservedDistance distance(observed, spec, model.summary);
    std::vector<Proposal> props(n_sims);
    parallel_for(n_sims, options.threads, [&](std::size_t i) {
        auto rng = simulation_stream(seed, i);
        auto& p = props[i];
        p.theta = model.prior_sample(rng);
        p.distance = simulate_distance(model, distance, p.theta, rng, p.valid);
    });

    WeightedPosterior post;
    auto& diag = post.diagnostics;
    std::vector<double> gamma(n_sims);
    std::vector<double> finite;
    std::size_t clamped = 0;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < n_sims; ++i) {
        double g = props[i].distance;
        if (!props[i].valid) ++invalid;
        if (g < 0.0) {
            g = 0.0;
            ++clamped;
        }
        gamma[i] = g;
        if (std::isfinite(g)) finite.push_back(g);
        post.particles.push_back(std::move(props[i].theta));
    }
    diag.series["gamma"] = gamma;
    diag.scalars["n_sims"] = static_cast<double>(n_sims);
    diag.scalars["n_clamped"] = static_cast<double>(clamped);
    diag.scalars["n_invalid"] = static_cast<double>(invalid);
    record_distance_summary(diag, "gamma", gamma);

    if (finite.empty()) {
        diag.flag("uniform_fallback");
        post.weights.assign(n_sims, 1.0 / static_cast<double>(n_sims));
        return post;
    }

    double eps = 0.0;
    if (spec.epsilon) {
        eps = *spec.epsilon;
    } else {
        eps = quantile_of(finite, spec.epsilon_quantile);
        diag.scalars["epsilon_quantile"] = spec.epsilon_quantile;
        if (!(eps > 0.0)) {
            // More than the requested fraction of distances are exactly zero.
            double smallest_positive = kInf;
            for (double g : finite)
                if (g > 0.0) smallest_positive = std::min(smallest_positive, g);
            eps = std::isfinite(smallest_positive) ? smallest_positive : 1.0;
            diag.flag("epsilon_degenerate_quantile");
        }
    }
    diag.scalars["epsilon"] = eps;

    // Shifting by the smallest gamma leaves normalized weights unchanged and
    // keeps the best particle at weight 1 before normalization.
    const double gmin = *std::min_element(finite.begin(), finite.end());
    post.weights.resize(n_sims);
    for (std::size_t i = 0; i < n_sims; ++i)
        post.weights[i] = std::isfinite(gamma[i]) ? std::exp(-(gamma[i] - gmin) / eps) : 0.0;
    normalize(post.weights);

    double ess_den = 0.0;
    for (double w : post.weights) ess_den += w * w;
    diag.scalars["effective_sample_size"] = 1.0 / ess_den;
    return post;
}

Theta perturb(const Theta& theta, double variance, const ParameterSupport& support, Rng& rng)
{
    if (!(variance > 0.0)) throw std::invalid_argument("perturb: variance must be positive");
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    Theta out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] + noise(rng);

    if (support.simplex) {
        double total = 0.0;
        for (double& x : out) {
            x = std::max(0.0, x);
            total += x;
        }
        if (total > 0.0) {
            for (double& x : out) x /= total;
        } else {
            out.assign(out.size(), 1.0 / static_cast<double>(out.size()));
        }
    }
    for (std::size_t i = 0; i < support.coordinates.size() && i < out.size(); ++i) {
        if (support.coordinates[i] == Coordinate::nonnegative_integer) out[i] = std::max(0.0, std::round(out[i]));
    }
    return out;
}

WeightedPosterior abc_smc(const SampleSet& observed, const ModelSpec& model, const DistanceSpec& spec,
                          const SmcSchedule& schedule, std::uint64_t seed, EngineOptions options)
{
    require_model(model, "abc_smc");
    schedule.validate();
    if (!model.prior_density) throw std::invalid_argument("abc_smc: model needs prior_density");
    if (spec.kind == DistanceKind::summary_euclidean && !model.summary)
        throw std::invalid_argument("abc_smc: summary distance requested but model has no summary");

    const ObservedDistance distance(observed, spec, model.summary);
    const std::size_t n = schedule.n_particles;
    const std::size_t budget = schedule.budget_factor * n;
    const double inv_two_var = 1.0 / (2.0 * schedule.perturb_variance);

    WeightedPosterior current;
    Diagnostics diag;
    std::size_t total_sims = 0;

    for (std::size_t g = 0; g < schedule.thresholds.size(); ++g) {
        const double eps = schedule.thresholds[g];
        std::vector<double> cumulative;
        if (g > 0) {
            cumulative.resize(current.weights.size());
            std::partial_sum(current.weights.begin(), current.weights.end(), cumulative.begin());
        }

        std::vector<Theta> accepted;
        std::vector<double> accepted_d;
        std::size_t attempts = 0;
        for (std::size_t start = 0; accepted.size() < n && start < budget;) {
            const std::size_t batch = std::min(n, budget - start);
            std::vector<Proposal> props(batch);
            parallel_for(batch, options.threads, [&](std::size_t k) {
                auto rng = smc_stream(seed, g, start + k);
                auto& p = props[k];
                if (g == 0) {
                    p.theta = model.prior_sample(rng);
                } else {
                    std::uniform_real_distribution<double> u01(0.0, cumulative.back());
                    const double u = u01(rng);
                    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                    const auto j = static_cast<std::size_t>(
                        std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(n) - 1));
                    std::size_t tries = 0;
                    do {
                        if (tries++ > schedule.max_support_retries)
                            throw std::runtime_error(
                                "abc_smc: perturbation kept leaving the prior support; retries exhausted");
                        p.theta = perturb(current.particles[j], schedule.perturb_variance, model.support, rng);
                    } while (!(model.prior_density(p.theta) > 0.0));
                }
                p.distance = simulate_distance(model, distance, p.theta, rng, p.valid);
            });
            for (std::size_t k = 0; k < batch && accepted.size() < n; ++k) {
                attempts = start + k + 1;
                if (props[k].valid && props[k].distance <= eps) {
                    accepted.push_back(std::move(props[k].theta));
                    accepted_d.push_back(props[k].distance);
                }
            }
            if (accepted.size() < n) attempts = start + batch;
            start += batch;
        }

        total_sims += attempts;
        const std::string key = fmt::format("gen.{}", g);
        diag.scalars[key + ".epsilon"] = eps;
        diag.scalars[key + ".attempts"] = static_cast<double>(attempts);
        diag.scalars[key + ".accepted"] = static_cast<double>(accepted.size());
        diag.scalars[key + ".acceptance_rate"] =
            static_cast<double>(accepted.size()) / static_cast<double>(std::max<std::size_t>(attempts, 1));

        if (accepted.size() < n) {
            diag.flag("aborted");
            diag.scalars["aborted_generation"] = static_cast<double>(g);
            if (g == 0) diag.flag("empty_posterior");
            break;
        }

        std::vector<double> weights(n);
        if (g == 0) {
            weights.assign(n, 1.0 / static_cast<double>(n));
        } else {
            std::vector<double> log_prev(n);
            for (std::size_t j = 0; j < n; ++j) log_prev[j] = std::log(current.weights[j]);
            std::vector<double> log_w(n);
            parallel_for(n, options.threads, [&](std::size_t i) {
                std::vector<double> terms(n);
                for (std::size_t j = 0; j < n; ++j) {
                    double d2 = 0.0;
                    for (std::size_t c = 0; c < accepted[i].size(); ++c) {
                        const double t = accepted[i][c] - current.particles[j][c];
                        d2 += t * t;
                    }
                    terms[j] = log_prev[j] - d2 * inv_two_var;
                }
                log_w[i] = std::log(model.prior_density(accepted[i])) - log_sum_exp(terms);
            });
            const double m = *std::max_element(log_w.begin(), log_w.end());
            for (std::size_t i = 0; i < n; ++i) weights[i] = std::exp(log_w[i] - m);
            normalize(weights);
        }

        diag.series[key + ".distances"] = accepted_d;
        diag.scalars["generations_completed"] = static_cast<double>(g + 1);
        current.particles = std::move(accepted);
        current.weights = std::move(weights);
        diag.series["distance"] = accepted_d;
    }

    diag.scalars["n_sims"] = static_cast<double>(total_sims);
    diag.scalars["n_particles"] = static_cast<double>(n);
    diag.scalars["perturb_variance"] = schedule.perturb_variance;
    current.diagnostics = std::move(diag);
    return current;
}

Theta posterior_mean(const WeightedPosterior& posterior)
{
    if (posterior.empty()) throw std::invalid_argument("posterior_mean: empty posterior");
    if (posterior.weights.size() != posterior.particles.size())
        throw std::invalid_argument("posterior_mean: particles and weights differ in length");
    const std::size_t dim = posterior.particles.front().size();
    Theta mean(dim, 0.0);
    std::vector<double> terms(posterior.size());
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < posterior.size(); ++i) terms[i] = posterior.weights[i] * posterior.particles[i][c];
        mean[c] = detail::pairwise_sum(terms);
    }
    return mean;
}

std::vector<double> posterior_quantile(const WeightedPosterior& posterior, double q)
{
    if (posterior.empty()) throw std::invalid_argument("posterior_quantile: empty posterior");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("posterior_quantile: q must lie in [0, 1]");
    const std::size_t dim = posterior.particles.front().size();
    std::vector<double> out(dim);
    std::vector<std::size_t> order(posterior.size());
    for (std::size_t c = 0; c < dim; ++c) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return posterior.particles[a][c] < posterior.particles[b][c];
        });
        double cum = 0.0;
        out[c] = posterior.particles[order.back()][c];
        for (std::size_t idx : order) {
            cum += posterior.weights[idx];
            if (cum >= q) {
                out[c] = posterior.particles[idx][c];
                break;
            }
        }
    }
    return out;
}

} // namespace kabc
