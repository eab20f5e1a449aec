#include "kabc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kabc/detail/summation.hpp"

namespace kabc {

namespace {

void require_spd(const Eigen::MatrixXd& m, const char* what)
{
    if (m.rows() != m.cols() || m.rows() == 0)
        throw std::invalid_argument(std::string(what) + ": covariance must be square and non-empty");
    if (!m.isApprox(m.transpose(), 1e-12))
        throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument(std::string(what) + ": covariance must be positive definite");
}

void require_same_dim(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& m,
                      const char* what)
{
    if (x.size() != y.size() || x.size() != m.rows())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

double mahalanobis_sq(const Eigen::VectorXd& diff, const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    const Eigen::VectorXd z = llt.matrixL().solve(diff);
    return z.squaredNorm();
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace

KernelConfig KernelConfig::isotropic(std::size_t dim, double sigma_scale, double h_p, double h_q)
{
    if (dim == 0) throw std::invalid_argument("KernelConfig: dim must be >= 1");
    if (!(sigma_scale > 0.0)) throw std::invalid_argument("KernelConfig: sigma scale must be positive");
    KernelConfig cfg;
    const auto d = static_cast<Eigen::Index>(dim);
    cfg.sigma = Eigen::MatrixXd::Identity(d, d) * (sigma_scale * sigma_scale);
    cfg.h_p = h_p;
    cfg.h_q = h_q;
    cfg.dim = dim;
    cfg.validate();
    return cfg;
}

void KernelConfig::validate() const
{
    if (dim == 0) throw std::invalid_argument("KernelConfig: dim must be >= 1");
    if (static_cast<std::size_t>(sigma.rows()) != dim)
        throw std::invalid_argument("KernelConfig: sigma size does not match dim");
    require_spd(sigma, "KernelConfig");
    if (!(h_p > 0.0) || !(h_q > 0.0)) throw std::invalid_argument("KernelConfig: bandwidths must be positive");
}

double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& sigma)
{
    require_same_dim(x, y, sigma, "gaussian_kernel");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success || !sigma.isApprox(sigma.transpose(), 1e-12))
        throw std::invalid_argument("gaussian_kernel: sigma must be symmetric positive definite");
    return std::exp(-0.5 * mahalanobis_sq(x - y, llt));
}

double convolved_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s)
{
    require_same_dim(x, y, sigma, "convolved_kernel");
    if (s.rows() != sigma.rows() || s.cols() != sigma.cols())
        throw std::invalid_argument("convolved_kernel: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> base(sigma);
    if (base.info() != Eigen::Success)
        throw std::invalid_argument("convolved_kernel: sigma must be positive definite");
    const Eigen::MatrixXd total = sigma + s;
    Eigen::LLT<Eigen::MatrixXd> widened(total);
    if (widened.info() != Eigen::Success)
        throw std::invalid_argument("convolved_kernel: sigma + s is singular");
    const double log_ratio = 0.5 * (log_det(base) - log_det(widened));
    return std::exp(log_ratio - 0.5 * mahalanobis_sq(x - y, widened));
}

double mise_cost(std::span<const double> values, double bandwidth)
{
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("mise_cost: need at least 2 samples");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("mise_cost: bandwidth must be positive");

    // phi(d; v) = exp(-d^2 / 2v) / sqrt(2 pi v); the i == j terms of the
    // first sum contribute N * phi(0; 2h^2).
    const double h2 = bandwidth * bandwidth;
    const double inv_two_v_wide = 1.0 / (4.0 * h2);
    const double inv_two_v_narrow = 1.0 / (2.0 * h2);
    std::vector<double> wide_rows(n, 0.0);
    std::vector<double> narrow_rows(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double wide = 0.0;
        double narrow = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = values[i] - values[j];
            const double d2 = d * d;
            wide += std::exp(-d2 * inv_two_v_wide);
            narrow += std::exp(-d2 * inv_two_v_narrow);
        }
        wide_rows[i] = wide;
        narrow_rows[i] = narrow;
    }
    const double off_wide = 2.0 * detail::pairwise_sum(wide_rows);
    const double off_narrow = 2.0 * detail::pairwise_sum(narrow_rows);

    const double norm_wide = 1.0 / std::sqrt(2.0 * std::numbers::pi * 2.0 * h2);
    const double norm_narrow = 1.0 / std::sqrt(2.0 * std::numbers::pi * h2);
    const double nd = static_cast<double>(n);
    const double integral_sq = norm_wide * (off_wide + nd) / (nd * nd);
    const double loo = norm_narrow * off_narrow / (nd * (nd - 1.0));
    return integral_sq - 2.0 * loo;
}

BandwidthProfile mise_bandwidth_profile(std::span<const double> input)
{
    if (input.size() < 2) throw std::invalid_argument("select_bandwidth_mise: need at least 2 samples");
    // Sorted copy makes the cost bit-identical under any permutation of the input.
    std::vector<double> values(input.begin(), input.end());
    std::sort(values.begin(), values.end());
    const double range = values.back() - values.front();
    if (!(range > 0.0) || !std::isfinite(range))
        throw std::invalid_argument("select_bandwidth_mise: samples must contain at least 2 distinct values");

    const double lo = range / static_cast<double>(values.size());
    const double hi = range;
    BandwidthProfile profile;
    profile.candidates.resize(kBandwidthGridSize);
    profile.costs.resize(kBandwidthGridSize);
    const double log_lo = std::log(lo);
    const double step = (std::log(hi) - log_lo) / static_cast<double>(kBandwidthGridSize - 1);
    for (std::size_t i = 0; i < kBandwidthGridSize; ++i) {
        profile.candidates[i] = std::exp(log_lo + step * static_cast<double>(i));
        profile.costs[i] = mise_cost(values, profile.candidates[i]);
    }
    profile.best_index = static_cast<std::size_t>(
        std::min_element(profile.costs.begin(), profile.costs.end()) - profile.costs.begin());
    return profile;
}

double select_bandwidth_mise(std::span<const double> values)
{
    return mise_bandwidth_profile(values).best();
}

double select_bandwidth_mise(const SampleSet& samples)
{
    if (samples.dim() == 0) throw std::invalid_argument("select_bandwidth_mise: empty sample set");
    double log_sum = 0.0;
    for (std::size_t d = 0; d < samples.dim(); ++d) {
        const auto col = samples.column(d);
        log_sum += std::log(select_bandwidth_mise(std::span<const double>(col)));
    }
    return std::exp(log_sum / static_cast<double>(samples.dim()));
}

} // namespace kabc
