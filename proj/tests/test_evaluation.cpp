#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "kabc/evaluation.hpp"
#include "oracles.hpp"

using namespace kabc;
using Catch::Matchers::WithinAbs;

TEST_CASE("rmse", "[evaluation]")
{
    const std::vector<double> z{0, 0}, t{3, 4}, one{1}, zero{0};
    CHECK(rmse(t, t) == 0.0);
    CHECK_THAT(rmse(z, t), WithinAbs(std::sqrt(12.5), 1e-15));
    CHECK_THAT(rmse(z, t), WithinAbs(3.53553, 5e-6));
    CHECK(rmse(one, zero) == 1.0);
    CHECK(rmse(t, z) == rmse(z, t));
    CHECK_THROWS_AS(rmse(one, t), std::invalid_argument);
}

TEST_CASE("cross correlation", "[evaluation]")
{
    const std::vector<double> a{1, 2, 3, 7, 5}, neg{-1, -2, -3, -7, -5};
    CHECK_THAT(cross_correlation(a, a), WithinAbs(1.0, 1e-15));
    CHECK_THAT(cross_correlation(a, neg), WithinAbs(-1.0, 1e-15));

    const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
    // Hand Pearson: centered (-1,0,1) and (-4/3,-1/3,5/3) give 3 / sqrt(2 * 14/3).
    CHECK_THAT(cross_correlation(x, y), WithinAbs(3.0 / std::sqrt(2.0 * 14.0 / 3.0), 1e-15));
    CHECK_THAT(cross_correlation(x, y), WithinAbs(0.98198, 5e-6));
    CHECK(cross_correlation(x, y) == cross_correlation(y, x));

    std::vector<double> affine(a), flipped(a);
    for (auto& v : affine) v = 3.5 * v - 2;
    for (auto& v : flipped) v = -0.25 * v + 10;
    CHECK_THAT(cross_correlation(a, affine), WithinAbs(1.0, 1e-14));
    CHECK_THAT(cross_correlation(a, flipped), WithinAbs(-1.0, 1e-14));

    std::vector<double> b{2, 0, 1, 1, 4}, as(a), bs(b);
    for (auto& v : as) v = 1000 * v + 3;
    for (auto& v : bs) v = 1000 * v + 3;
    CHECK_THAT(cross_correlation(as, bs), WithinAbs(cross_correlation(a, b), 1e-13));

    const std::vector<double> flat{2, 2, 2};
    CHECK_THROWS_AS(cross_correlation(flat, x), std::invalid_argument);
    CHECK_THROWS_AS(cross_correlation(x, a), std::invalid_argument);
}

TEST_CASE("weighted KDE posterior", "[evaluation]")
{
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(-10 + 0.01 * i);
    const double h = 0.4;

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> particles(50), uniform(50, 1.0 / 50);
    for (auto& v : particles) v = g(rng);
    const auto dens = weighted_kde_posterior(particles, uniform, grid, h);
    for (std::size_t i = 0; i < grid.size(); i += 97) {
        double plain = 0.0;
        for (double p : particles) plain += oracle::normal_pdf(grid[i], p, h * h) / 50;
        CHECK_THAT(dens[i], WithinAbs(plain, 1e-12));
    }
    double mass = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) mass += 0.5 * 0.01 * (dens[i] + dens[i - 1]);
    CHECK_THAT(mass, WithinAbs(1.0, 0.01));

    // Automatic bandwidth also integrates to one.
    const auto auto_dens = weighted_kde_posterior(particles, uniform, grid);
    double auto_mass = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) auto_mass += 0.5 * 0.01 * (auto_dens[i] + auto_dens[i - 1]);
    CHECK_THAT(auto_mass, WithinAbs(1.0, 0.01));

    const std::vector<double> single{0.0}, w1{1.0};
    const auto peak = weighted_kde_posterior(single, w1, grid);
    const auto top = std::max_element(peak.begin(), peak.end()) - peak.begin();
    CHECK(grid[top] == Catch::Approx(0.0).margin(1e-9));
    for (std::size_t i = 0; i < 1000; i += 50) CHECK_THAT(peak[i], WithinAbs(peak[2000 - i], 1e-14));

    CHECK_THROWS_AS(weighted_kde_posterior(std::vector<double>{}, std::vector<double>{}, grid), std::invalid_argument);
    CHECK_THROWS_AS(weighted_kde_posterior(single, w1, std::vector<double>{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("type-7 quantile", "[evaluation]")
{
    CHECK(quantile({3, 1, 2, 4}, 0.5) == 2.5);
    CHECK(quantile({3, 1, 2, 4}, 0.0) == 1.0);
    CHECK(quantile({3, 1, 2, 4}, 1.0) == 4.0);
    CHECK(quantile({5}, 0.25) == 5.0);
}

TEST_CASE("method names", "[evaluation]")
{
    for (auto m : all_methods()) CHECK(parse_method(to_string(m)) == m);
    CHECK(all_methods().size() == 6);
    CHECK(is_smc(Method::pabc_smc));
    CHECK_FALSE(is_smc(Method::k2abc));
    CHECK_THROWS_AS(parse_method("gibbs"), std::invalid_argument);
}

TEST_CASE("method distance uses the MISE bandwidth of the observed data", "[evaluation]")
{
    Rng rng(3);
    const auto obs = simulate_uniform_mixture(MixtureParams{kToyTruePi}, 200, rng);
    const MethodSettings settings;
    const double h = select_bandwidth_mise(obs);
    const auto pabc = method_distance(Method::pabc, obs, settings);
    CHECK(pabc.kind == DistanceKind::parzen);
    CHECK(pabc.kernel.h_p == h);
    CHECK(pabc.kernel.h_q == h);
    CHECK(pabc.kernel.sigma(0, 0) == h * h);
    CHECK(method_distance(Method::k2abc, obs, settings).kind == DistanceKind::mmd_unbiased);
    CHECK(method_distance(Method::abc_smc, obs, settings).kind == DistanceKind::summary_euclidean);
}

TEST_CASE("sweep grid", "[evaluation]")
{
    SweepConfig c;
    const auto counts = c.counts();
    CHECK(counts.size() == 73);
    CHECK(counts.front() == 40);
    CHECK(counts.back() == 400);
    c.step = 20;
    CHECK(c.counts().size() == 19);
    c.step = 0;
    CHECK_THROWS_AS(c.counts(), std::invalid_argument);
}

TEST_CASE("small sweep is reproducible and records failures", "[evaluation]")
{
    SweepConfig c;
    c.start = 40;
    c.stop = 60;
    c.step = 10;
    c.settings.n_sims = 60;
    const std::vector<Method> methods{Method::abc, Method::pabc};
    const auto r1 = observation_sweep(c, methods, 5);
    const auto r2 = observation_sweep(c, methods, 5);
    REQUIRE(r1.observation_counts.size() == 3);
    std::ostringstream a, b;
    write_sweep_csv(a, r1);
    write_sweep_csv(b, r2);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("observation_count,method,rmse,status\n", 0) == 0);

    // Rejection ABC at its tight default threshold accepts nothing at this budget.
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r1.failures.at("abc")[i] == "empty_posterior");
        CHECK(std::isnan(r1.rmse.at("abc")[i]));
        CHECK(r1.failures.at("pabc")[i].empty());
        CHECK(r1.rmse.at("pabc")[i] > 0.0);
    }
    CHECK(r1.summary.at("abc").n_ok == 0);
    CHECK(r1.summary.at("pabc").n_ok == 3);
}

TEST_CASE("top-k rho protocol", "[evaluation]")
{
    // Near-zero-noise model and a series generated at the same parameters.
    BlowflyPrior tight;
    tight.log_sigma_p_mean = tight.log_sigma_d_mean = std::log(1e-4);
    auto params = blowfly_standin_params();
    params.sigma_p = params.sigma_d = 1e-4;
    Rng rng(1);
    const auto observed = *simulate_blowfly(params, 60, rng);

    auto model = make_blowfly_model(60, tight);
    // Prior collapsed to the generating parameters.
    model.prior_sample = [params](Rng&) { return params.to_theta(); };
    MethodSettings s;
    s.n_sims = 5;
    const auto self = top_k_rho_protocol(observed, model, Method::pabc, s, 1, 1, 3);
    REQUIRE(self.top_k.size() == 1);
    CHECK(self.top_k[0] > 0.99);

    const auto r = top_k_rho_protocol(observed, make_blowfly_model(60), Method::pabc, s, 8, 4, 9);
    CHECK(r.rho.size() == 8);
    CHECK(r.top_k.size() == 4);
    CHECK(std::is_sorted(r.top_k.rbegin(), r.top_k.rend()));
    CHECK(std::count(r.kept.begin(), r.kept.end(), true) == 4);
    for (double v : r.top_k) CHECK(std::find(r.rho.begin(), r.rho.end(), v) != r.rho.end());
    CHECK(r.median == quantile(r.top_k, 0.5));
    std::ostringstream os;
    write_rho_csv(os, r);
    CHECK(os.str().rfind("draw_index,rho,kept_flag\n", 0) == 0);

    CHECK_THROWS_AS(top_k_rho_protocol(observed, model, Method::pabc, s, 2, 3, 1), std::invalid_argument);
}
