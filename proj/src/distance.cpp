#include "kabc/distance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kabc/detail/summation.hpp"

namespace kabc {

namespace {

// Points mapped through L^{-1} for a covariance C = L L^T, stored row-major,
// so that (x-y)^T C^{-1} (x-y) becomes a squared Euclidean distance.
struct Whitened {
    std::vector<double> coords;
    std::size_t n = 0;
    std::size_t dim = 0;

    const double* row(std::size_t i) const { return coords.data() + i * dim; }
};

Whitened whiten(const SampleSet& s, const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    Whitened w;
    w.n = s.size();
    w.dim = s.dim();
    w.coords.resize(w.n * w.dim);
    const Eigen::MatrixXd z = llt.matrixL().solve(s.points().transpose());
    for (std::size_t i = 0; i < w.n; ++i)
        for (std::size_t d = 0; d < w.dim; ++d)
            w.coords[i * w.dim + d] = z(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i));
    return w;
}

inline double sq_dist(const double* a, const double* b, std::size_t dim)
{
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double t = a[d] - b[d];
        s += t * t;
    }
    return s;
}

// sum_{i,j} exp(-|a_i - b_j|^2 / 2)
double cross_sum(const Whitened& a, const Whitened& b)
{
    std::vector<double> rows(a.n);
    for (std::size_t i = 0; i < a.n; ++i) {
        double r = 0.0;
        if (a.dim == 1) {
            const double ai = a.coords[i];
            for (std::size_t j = 0; j < b.n; ++j) {
                const double t = ai - b.coords[j];
                r += std::exp(-0.5 * t * t);
            }
        } else {
            for (std::size_t j = 0; j < b.n; ++j) r += std::exp(-0.5 * sq_dist(a.row(i), b.row(j), a.dim));
        }
        rows[i] = r;
    }
    return detail::pairwise_sum(rows);
}

// sum_{i != j} exp(-|a_i - a_j|^2 / 2)
double off_diagonal_sum(const Whitened& a)
{
    std::vector<double> rows(a.n);
    for (std::size_t i = 0; i < a.n; ++i) {
        double r = 0.0;
        if (a.dim == 1) {
            const double ai = a.coords[i];
            for (std::size_t j = i + 1; j < a.n; ++j) {
                const double t = ai - a.coords[j];
                r += std::exp(-0.5 * t * t);
            }
        } else {
            for (std::size_t j = i + 1; j < a.n; ++j) r += std::exp(-0.5 * sq_dist(a.row(i), a.row(j), a.dim));
        }
        rows[i] = r;
    }
    return 2.0 * detail::pairwise_sum(rows);
}

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& c, const char* what)
{
    if (c.rows() != c.cols() || !c.isApprox(c.transpose(), 1e-12))
        throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument(std::string(what) + ": covariance must be positive definite");
    return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void check_pair(const SampleSet& x, const SampleSet& y, std::size_t dim, const char* what)
{
    if (x.empty() || y.empty()) throw std::invalid_argument(std::string(what) + ": empty sample set");
    if (x.dim() != y.dim() || x.dim() != dim) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// One self-similarity term (1/N^2) sum_ij or (1/(N(N-1))) sum_{i!=j} of a
// kernel with covariance `cov` and prefactor `amplitude`.
double self_term(const SampleSet& s, const Eigen::MatrixXd& cov, double amplitude, bool unbiased, const char* what)
{
    const auto w = whiten(s, factor(cov, what));
    const double n = static_cast<double>(s.size());
    const double off = off_diagonal_sum(w);
    if (unbiased) return amplitude * off / (n * (n - 1.0));
    return amplitude * (off + n) / (n * n);
}

double cross_term(const SampleSet& x, const SampleSet& y, const Eigen::MatrixXd& cov, double amplitude,
                  const char* what)
{
    const auto llt = factor(cov, what);
    const double s = cross_sum(whiten(x, llt), whiten(y, llt));
    return amplitude * s / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

struct ParzenCovariances {
    Eigen::MatrixXd xx, yy, xy;
    double amp_xx, amp_yy, amp_xy;
};

ParzenCovariances parzen_covariances(const KernelConfig& cfg)
{
    cfg.validate();
    const auto d = static_cast<Eigen::Index>(cfg.dim);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd sp = eye * (cfg.h_p * cfg.h_p);
    const Eigen::MatrixXd sq = eye * (cfg.h_q * cfg.h_q);
    ParzenCovariances pc;
    pc.xx = cfg.sigma + 2.0 * sp;
    pc.yy = cfg.sigma + 2.0 * sq;
    pc.xy = cfg.sigma + sp + sq;
    const double base = log_det(factor(cfg.sigma, "parzen_distance"));
    pc.amp_xx = std::exp(0.5 * (base - log_det(factor(pc.xx, "parzen_distance"))));
    pc.amp_yy = std::exp(0.5 * (base - log_det(factor(pc.yy, "parzen_distance"))));
    pc.amp_xy = std::exp(0.5 * (base - log_det(factor(pc.xy, "parzen_distance"))));
    return pc;
}

} // namespace

std::string_view to_string(DistanceKind kind)
{
    switch (kind) {
    case DistanceKind::mmd_biased: return "mmd-biased";
    case DistanceKind::mmd_unbiased: return "mmd-unbiased";
    case DistanceKind::parzen: return "parzen";
    case DistanceKind::summary_euclidean: return "summary-euclidean";
    }
    return "unknown";
}

DistanceKind parse_distance_kind(std::string_view name)
{
    for (auto k : {DistanceKind::mmd_biased, DistanceKind::mmd_unbiased, DistanceKind::parzen,
                   DistanceKind::summary_euclidean})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown distance kind: " + std::string(name));
}

double mmd_biased(const SampleSet& x, const SampleSet& y, const Eigen::MatrixXd& sigma)
{
    check_pair(x, y, static_cast<std::size_t>(sigma.rows()), "mmd_biased");
    const double v = self_term(x, sigma, 1.0, false, "mmd_biased") + self_term(y, sigma, 1.0, false, "mmd_biased")
                     - 2.0 * cross_term(x, y, sigma, 1.0, "mmd_biased");
    return std::max(0.0, v);
}

double mmd_unbiased(const SampleSet& x, const SampleSet& y, const Eigen::MatrixXd& sigma)
{
    check_pair(x, y, static_cast<std::size_t>(sigma.rows()), "mmd_unbiased");
    if (x.size() < 2 || y.size() < 2) throw std::invalid_argument("mmd_unbiased: each set needs at least 2 points");
    return self_term(x, sigma, 1.0, true, "mmd_unbiased") + self_term(y, sigma, 1.0, true, "mmd_unbiased")
           - 2.0 * cross_term(x, y, sigma, 1.0, "mmd_unbiased");
}

double parzen_distance(const SampleSet& x, const SampleSet& y, const KernelConfig& config)
{
    check_pair(x, y, config.dim, "parzen_distance");
    const auto pc = parzen_covariances(config);
    const double v = self_term(x, pc.xx, pc.amp_xx, false, "parzen_distance")
                     + self_term(y, pc.yy, pc.amp_yy, false, "parzen_distance")
                     - 2.0 * cross_term(x, y, pc.xy, pc.amp_xy, "parzen_distance");
    return std::max(0.0, v);
}

double summary_distance(std::span<const double> observed, std::span<const double> simulated)
{
    if (observed.size() != simulated.size()) throw std::invalid_argument("summary_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - simulated[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double soft_weight(double gamma, double epsilon)
{
    if (!(epsilon > 0.0)) throw std::invalid_argument("soft_weight: epsilon must be positive");
    if (!(gamma >= 0.0)) throw std::invalid_argument("soft_weight: gamma must be nonnegative");
    return std::exp(-gamma / epsilon);
}

ObservedDistance::ObservedDistance(SampleSet observed, DistanceSpec spec, SummaryFn summary)
    : observed_(std::move(observed)), spec_(std::move(spec)), summary_(std::move(summary))
{
    if (observed_.empty()) throw std::invalid_argument("ObservedDistance: empty observed set");
    switch (spec_.kind) {
    case DistanceKind::summary_euclidean:
        if (!summary_) throw std::invalid_argument("ObservedDistance: summary-euclidean needs a summary function");
        observed_summary_ = summary_(observed_);
        break;
    case DistanceKind::mmd_biased:
    case DistanceKind::mmd_unbiased: {
        spec_.kernel.validate();
        if (observed_.dim() != spec_.kernel.dim) throw std::invalid_argument("ObservedDistance: dimension mismatch");
        const bool unbiased = spec_.kind == DistanceKind::mmd_unbiased;
        if (unbiased && observed_.size() < 2)
            throw std::invalid_argument("ObservedDistance: unbiased MMD needs at least 2 observed points");
        observed_self_term_ = self_term(observed_, spec_.kernel.sigma, 1.0, unbiased, "ObservedDistance");
        break;
    }
    case DistanceKind::parzen: {
        if (observed_.dim() != spec_.kernel.dim) throw std::invalid_argument("ObservedDistance: dimension mismatch");
        const auto pc = parzen_covariances(spec_.kernel);
        observed_self_term_ = self_term(observed_, pc.xx, pc.amp_xx, false, "ObservedDistance");
        break;
    }
    }
}

double ObservedDistance::operator()(const SampleSet& simulated) const
{
    switch (spec_.kind) {
    case DistanceKind::summary_euclidean: {
        const auto s = summary_(simulated);
        return summary_distance(observed_summary_, s);
    }
    case DistanceKind::mmd_biased:
        check_pair(observed_, simulated, spec_.kernel.dim, "mmd_biased");
        return std::max(0.0, observed_self_term_ + self_term(simulated, spec_.kernel.sigma, 1.0, false, "mmd_biased")
                                 - 2.0 * cross_term(observed_, simulated, spec_.kernel.sigma, 1.0, "mmd_biased"));
    case DistanceKind::mmd_unbiased:
        check_pair(observed_, simulated, spec_.kernel.dim, "mmd_unbiased");
        if (simulated.size() < 2) throw std::invalid_argument("mmd_unbiased: each set needs at least 2 points");
        return observed_self_term_ + self_term(simulated, spec_.kernel.sigma, 1.0, true, "mmd_unbiased")
               - 2.0 * cross_term(observed_, simulated, spec_.kernel.sigma, 1.0, "mmd_unbiased");
    case DistanceKind::parzen: {
        check_pair(observed_, simulated, spec_.kernel.dim, "parzen_distance");
        const auto pc = parzen_covariances(spec_.kernel);
        return std::max(0.0, observed_self_term_ + self_term(simulated, pc.yy, pc.amp_yy, false, "parzen_distance")
                                 - 2.0 * cross_term(observed_, simulated, pc.xy, pc.amp_xy, "parzen_distance"));
    }
    }
    throw std::logic_error("ObservedDistance: unhandled kind");
}

} // namespace kabc
