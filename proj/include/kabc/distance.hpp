#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kabc/kernel.hpp"
#include "kabc/sample_set.hpp"

namespace kabc {

enum class DistanceKind { mmd_biased, mmd_unbiased, parzen, summary_euclidean };

std::string_view to_string(DistanceKind kind);
DistanceKind parse_distance_kind(std::string_view name);

/// Which distance to use between observed and simulated data, and the scale
/// of the exponential soft kernel applied on top of it by weighted engines.
struct DistanceSpec {
    DistanceKind kind = DistanceKind::parzen;
    KernelConfig kernel;              // unused for summary_euclidean
    std::optional<double> epsilon;    // unset: quantile heuristic over the run's distances
    double epsilon_quantile = 0.5;    // 0.5 is the median heuristic
};

using SummaryFn = std::function<std::vector<double>(const SampleSet&)>;

/// Biased squared MMD with a unit-amplitude Gaussian kernel of covariance sigma.
double mmd_biased(const SampleSet& x, const SampleSet& y, const Eigen::MatrixXd& sigma);

/// U-statistic squared MMD: diagonal self-pairs excluded, 1/(N(N-1)) factors.
/// Can be negative. Requires at least 2 points in each set.
double mmd_unbiased(const SampleSet& x, const SampleSet& y, const Eigen::MatrixXd& sigma);

/// Squared RKHS distance between the Parzen-smoothed embeddings of x
/// (bandwidth h_p) and y (bandwidth h_q), evaluated in closed form with
/// convolved_kernel.
double parzen_distance(const SampleSet& x, const SampleSet& y, const KernelConfig& config);

double summary_distance(std::span<const double> observed, std::span<const double> simulated);

/// exp(-gamma / epsilon).
double soft_weight(double gamma, double epsilon);

/// Distance from a fixed observed set to simulated sets. Terms that depend
/// only on the observed data are computed once at construction.
class ObservedDistance {
public:
    ObservedDistance(SampleSet observed, DistanceSpec spec, SummaryFn summary = {});

    double operator()(const SampleSet& simulated) const;

    const DistanceSpec& spec() const { return spec_; }
    const SampleSet& observed() const { return observed_; }

private:
    SampleSet observed_;
    DistanceSpec spec_;
    SummaryFn summary_;
    std::vector<double> observed_summary_;
    double observed_self_term_ = 0.0;
};

} // namespace kabc
