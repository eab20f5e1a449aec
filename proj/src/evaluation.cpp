#include "kabc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "kabc/kernel.hpp"

namespace kabc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SweepStats stats_of(const std::vector<double>& v)
{
    SweepStats s;
    double sum = 0.0;
    for (double x : v)
        if (std::isfinite(x)) {
            sum += x;
            ++s.n_ok;
        }
    if (s.n_ok == 0) {
        s.mean = s.stddev = kNaN;
        return s;
    }
    s.mean = sum / static_cast<double>(s.n_ok);
    double ss = 0.0;
    for (double x : v)
        if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
    s.stddev = s.n_ok > 1 ? std::sqrt(ss / static_cast<double>(s.n_ok - 1)) : 0.0;
    return s;
}

} // namespace

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::abc: return "abc";
    case Method::k2abc: return "k2abc";
    case Method::pabc: return "pabc";
    case Method::abc_smc: return "abc-smc";
    case Method::k2abc_smc: return "k2abc-smc";
    case Method::pabc_smc: return "pabc-smc";
    }
    return "unknown";
}

const std::vector<Method>& all_methods()
{
    static const std::vector<Method> methods{Method::abc,     Method::k2abc,     Method::pabc,
                                             Method::abc_smc, Method::k2abc_smc, Method::pabc_smc};
    return methods;
}

Method parse_method(std::string_view name)
{
    for (auto m : all_methods())
        if (to_string(m) == name) return m;
    throw std::invalid_argument(fmt::format("unknown method '{}'", name));
}

bool is_smc(Method m)
{
    return m == Method::abc_smc || m == Method::k2abc_smc || m == Method::pabc_smc;
}

DistanceSpec method_distance(Method m, const SampleSet& observed, const MethodSettings& settings)
{
    DistanceSpec spec;
    spec.epsilon = settings.kernel_epsilon;
    spec.epsilon_quantile = settings.epsilon_quantile;
    switch (m) {
    case Method::abc:
    case Method::abc_smc:
        spec.kind = DistanceKind::summary_euclidean;
        return spec;
    case Method::k2abc:
    case Method::k2abc_smc:
        spec.kind = DistanceKind::mmd_unbiased;
        break;
    case Method::pabc:
    case Method::pabc_smc:
        spec.kind = DistanceKind::parzen;
        break;
    }
    const double h = select_bandwidth_mise(observed);
    spec.kernel = KernelConfig::isotropic(observed.dim(), h, h, h);
    return spec;
}

WeightedPosterior run_method(Method m, const SampleSet& observed, const ModelSpec& model,
                             const MethodSettings& settings, std::uint64_t seed)
{
    const EngineOptions opts{settings.threads};
    const DistanceSpec spec = method_distance(m, observed, settings);
    WeightedPosterior post;
    if (m == Method::abc) {
        post = abc_rejection(observed, model, settings.abc_epsilon, settings.n_sims, seed, opts);
    } else if (!is_smc(m)) {
        post = abc_weighted(observed, model, spec, settings.n_sims, seed, opts);
    } else {
        SmcSchedule schedule;
        schedule.thresholds = settings.schedule;
        schedule.n_particles = settings.n_particles;
        schedule.perturb_variance = settings.perturb_variance;
        post = abc_smc(observed, model, spec, schedule, seed, opts);
    }
    if (spec.kind != DistanceKind::summary_euclidean) {
        post.diagnostics.scalars["kernel_sigma"] = std::sqrt(spec.kernel.sigma(0, 0));
        post.diagnostics.scalars["kernel_h_p"] = spec.kernel.h_p;
        post.diagnostics.scalars["kernel_h_q"] = spec.kernel.h_q;
    }
    return post;
}

double rmse(std::span<const double> truth, std::span<const double> estimate)
{
    if (truth.size() != estimate.size()) throw std::invalid_argument("rmse: length mismatch");
    if (truth.empty()) throw std::invalid_argument("rmse: empty vectors");
    double ss = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) ss += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
    return std::sqrt(ss / static_cast<double>(truth.size()));
}

double cross_correlation(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("cross_correlation: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("cross_correlation: need at least 2 points");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw std::invalid_argument("cross_correlation: constant series");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> weighted_kde_posterior(std::span<const double> particles, std::span<const double> weights,
                                           std::span<const double> grid, std::optional<double> bandwidth)
{
    if (particles.empty()) throw std::invalid_argument("weighted_kde_posterior: no particles");
    if (particles.size() != weights.size())
        throw std::invalid_argument("weighted_kde_posterior: particles and weights differ in length");
    if (grid.size() < 2) throw std::invalid_argument("weighted_kde_posterior: grid needs at least 2 points");
    const auto [gmin, gmax] = std::minmax_element(grid.begin(), grid.end());
    if (!(*gmax > *gmin)) throw std::invalid_argument("weighted_kde_posterior: degenerate grid");

    double h = 0.0;
    if (bandwidth) {
        if (!(*bandwidth > 0.0)) throw std::invalid_argument("weighted_kde_posterior: bandwidth must be positive");
        h = *bandwidth;
    } else {
        const auto [pmin, pmax] = std::minmax_element(particles.begin(), particles.end());
        if (*pmax > *pmin) {
            h = select_bandwidth_mise(particles);
        } else {
            h = 2.0 * (*gmax - *gmin) / static_cast<double>(grid.size() - 1);
        }
    }

    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> density(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double s = 0.0;
        for (std::size_t i = 0; i < particles.size(); ++i) {
            const double z = (grid[g] - particles[i]) / h;
            s += weights[i] * std::exp(-0.5 * z * z);
        }
        density[g] = s * norm;
    }
    return density;
}

double quantile(std::vector<double> v, double q)
{
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::size_t> SweepConfig::counts() const
{
    if (step == 0 || start == 0 || stop < start) throw std::invalid_argument("SweepConfig: invalid count grid");
    std::vector<std::size_t> c;
    for (std::size_t n = start; n <= stop; n += step) c.push_back(n);
    return c;
}

SweepResult observation_sweep(const SweepConfig& config, const std::vector<Method>& methods, std::uint64_t seed)
{
    MixtureParams truth{config.true_pi};
    truth.validate();
    SweepResult result;
    result.observation_counts = config.counts();
    for (auto m : methods) {
        const std::string name(to_string(m));
        result.methods.push_back(name);
        result.rmse[name].assign(result.observation_counts.size(), kNaN);
        result.failures[name].assign(result.observation_counts.size(), "");
    }

    for (std::size_t cell = 0; cell < result.observation_counts.size(); ++cell) {
        const std::size_t count = result.observation_counts[cell];
        auto data_rng = make_stream(seed, {static_cast<std::uint64_t>(cell), 0xDA7Aull});
        const SampleSet observed = simulate_uniform_mixture(truth, count, data_rng);
        const ModelSpec model = make_toy_model(count, truth.k(), config.dirichlet_alpha);
        const std::uint64_t method_seed = derive_seed(seed, {static_cast<std::uint64_t>(cell)});

        for (auto m : methods) {
            const std::string name(to_string(m));
            try {
                const auto post = run_method(m, observed, model, config.settings, method_seed);
                if (post.empty()) {
                    result.failures[name][cell] = "empty_posterior";
                    continue;
                }
                if (post.diagnostics.has_flag("aborted")) result.failures[name][cell] = "aborted";
                result.rmse[name][cell] = rmse(truth.pi, posterior_mean(post));
            } catch (const std::exception& e) {
                result.failures[name][cell] = e.what();
            }
        }
    }
    for (const auto& name : result.methods) result.summary[name] = stats_of(result.rmse[name]);
    return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result)
{
    os << "observation_count,method,rmse,status\n";
    for (std::size_t cell = 0; cell < result.observation_counts.size(); ++cell)
        for (const auto& name : result.methods) {
            const auto& note = result.failures.at(name)[cell];
            fmt::print(os, "{},{},{:.17g},{}\n", result.observation_counts[cell], name, result.rmse.at(name)[cell],
                       note.empty() ? "ok" : note);
        }
}

RhoProtocolResult top_k_rho_protocol(const TimeSeries& observed, const ModelSpec& model, Method method,
                                     const MethodSettings& settings, std::size_t n_draws, std::size_t k,
                                     std::uint64_t seed)
{
    if (k < 1 || n_draws < k) throw std::invalid_argument("top_k_rho_protocol: require n_draws >= k >= 1");
    const SampleSet obs = observed.as_samples();
    ModelSpec m = model;
    m.n_observations = observed.size();

    RhoProtocolResult r;
    r.rho.assign(n_draws, kNaN);
    r.kept.assign(n_draws, false);
    for (std::size_t d = 0; d < n_draws; ++d) {
        const auto draw_seed = derive_seed(seed, {static_cast<std::uint64_t>(d), 1});
        WeightedPosterior post;
        try {
            post = run_method(method, obs, m, settings, draw_seed);
        } catch (const std::runtime_error&) {
            continue;
        }
        if (post.empty()) continue;
        auto regen_rng = make_stream(seed, {static_cast<std::uint64_t>(d), 2});
        const auto series = m.simulate(posterior_mean(post), observed.size(), regen_rng);
        if (!series) continue;
        const auto values = series->column(0);
        try {
            r.rho[d] = cross_correlation(observed.values, values);
        } catch (const std::invalid_argument&) {
            // constant regenerated series: no correlation defined
        }
    }

    std::vector<std::size_t> valid;
    for (std::size_t d = 0; d < n_draws; ++d)
        if (std::isfinite(r.rho[d])) valid.push_back(d);
    std::stable_sort(valid.begin(), valid.end(), [&](std::size_t a, std::size_t b) { return r.rho[a] > r.rho[b]; });
    r.shortfall = valid.size() < k;
    const std::size_t keep = std::min(k, valid.size());
    for (std::size_t i = 0; i < keep; ++i) {
        r.kept[valid[i]] = true;
        r.top_k.push_back(r.rho[valid[i]]);
    }
    if (!r.top_k.empty()) {
        r.median = quantile(r.top_k, 0.5);
        r.q25 = quantile(r.top_k, 0.25);
        r.q75 = quantile(r.top_k, 0.75);
    } else {
        r.median = r.q25 = r.q75 = kNaN;
    }
    return r;
}

void write_rho_csv(std::ostream& os, const RhoProtocolResult& result)
{
    os << "draw_index,rho,kept_flag\n";
    for (std::size_t d = 0; d < result.rho.size(); ++d)
        fmt::print(os, "{},{:.17g},{}\n", d, result.rho[d], result.kept[d] ? 1 : 0);
}

} // namespace kabc
