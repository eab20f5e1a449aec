#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kabc/sample_set.hpp"

namespace kabc {

/// Base Gaussian kernel covariance plus the two Parzen bandwidths.
///
/// The base kernel has unit amplitude, k(x, x) = 1. Parzen windows are
/// isotropic: the first sample is smoothed with h_p^2 I, the second with
/// h_q^2 I.
struct KernelConfig {
    Eigen::MatrixXd sigma;
    double h_p = 1.0;
    double h_q = 1.0;
    std::size_t dim = 1;

    static KernelConfig isotropic(std::size_t dim, double sigma_scale, double h_p, double h_q);

    /// Throws std::invalid_argument unless sigma is SPD of size dim and h_p, h_q > 0.
    void validate() const;
};

/// exp(-(x-y)^T sigma^{-1} (x-y) / 2).
double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& sigma);

/// Closed form of the base kernel integrated against two Gaussian windows
/// whose covariances sum to s:
///   |sigma|^{1/2} / |sigma + s|^{1/2} * exp(-(x-y)^T (sigma + s)^{-1} (x-y) / 2).
double convolved_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& s);

/// Candidate bandwidths and their leave-one-out cost, as evaluated by the selector.
struct BandwidthProfile {
    std::vector<double> candidates;
    std::vector<double> costs;
    std::size_t best_index = 0;

    double best() const { return candidates[best_index]; }
};

inline constexpr std::size_t kBandwidthGridSize = 50;

/// Leave-one-out integrated squared error of a Gaussian KDE with bandwidth h,
/// dropping the data-only constant:
///   (1/N^2) sum_ij phi(x_i - x_j; 2h^2) - 2/(N(N-1)) sum_{i!=j} phi(x_i - x_j; h^2).
double mise_cost(std::span<const double> values, double bandwidth);

/// Evaluate mise_cost over kBandwidthGridSize log-spaced bandwidths in
/// [range / N, range].
BandwidthProfile mise_bandwidth_profile(std::span<const double> values);

double select_bandwidth_mise(std::span<const double> values);

/// Per-dimension selection combined by geometric mean.
double select_bandwidth_mise(const SampleSet& samples);

} // namespace kabc
