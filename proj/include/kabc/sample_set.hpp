#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kabc {

/// A finite collection of D-dimensional observations, one per row.
class SampleSet {
public:
    SampleSet() = default;
    explicit SampleSet(Eigen::MatrixXd points);

    static SampleSet from_scalars(std::span<const double> values);

    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
    bool empty() const { return points_.rows() == 0; }

    const Eigen::MatrixXd& points() const { return points_; }
    Eigen::VectorXd point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }

    /// Values of one coordinate across all observations.
    std::vector<double> column(std::size_t d) const;

    SampleSet translated(const Eigen::VectorXd& offset) const;
    SampleSet scaled(double factor) const;

private:
    Eigen::MatrixXd points_;
};

using Theta = std::vector<double>;

} // namespace kabc
