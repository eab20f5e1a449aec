#include "kabc/sample_set.hpp"

#include <stdexcept>

namespace kabc {

SampleSet::SampleSet(Eigen::MatrixXd points) : points_(std::move(points)) {}

SampleSet SampleSet::from_scalars(std::span<const double> values)
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
    return SampleSet(std::move(m));
}

std::vector<double> SampleSet::column(std::size_t d) const
{
    if (d >= dim()) throw std::out_of_range("SampleSet::column: dimension out of range");
    const auto col = points_.col(static_cast<Eigen::Index>(d));
    return {col.data(), col.data() + col.size()};
}

SampleSet SampleSet::translated(const Eigen::VectorXd& offset) const
{
    if (static_cast<std::size_t>(offset.size()) != dim())
        throw std::invalid_argument("SampleSet::translated: offset dimension mismatch");
    return SampleSet(points_.rowwise() + offset.transpose());
}

SampleSet SampleSet::scaled(double factor) const
{
    return SampleSet(points_ * factor);
}

} // namespace kabc
