#pragma once

// Ensemble accumulation of intensity symbols, g2 estimators and burst metrics.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "wgsf/errors.hpp"
#include "wgsf/state.hpp"

namespace wgsf {

/// Normalized ensemble moments on the record grid.
struct ObservableSeries {
    std::vector<double> time_grid;
    std::vector<double> mean_i_plus;
    std::vector<double> mean_i_minus;
    std::vector<double> se_i_plus;  ///< standard error of the mean
    std::vector<double> se_i_minus;
    std::vector<double> sz_mean;
    std::vector<double> fourth_pp;  ///< normally ordered equal-time <E+^dag E+^dag E+ E+>
    std::vector<double> fourth_mm;
    std::vector<double> fourth_pm;  ///< <E+^dag E-^dag E- E+>
    Eigen::MatrixXd second_moment_grid_pp;  ///< <I+(t1) I+(t2)>
    Eigen::MatrixXd second_moment_grid_mm;
    Eigen::MatrixXd second_moment_grid_pm;  ///< <I+(t1) I-(t2)>
    std::vector<double> peak_plus;          ///< per-trajectory maxima, in trajectory order
    std::vector<double> peak_minus;
    long long n_traj = 0;
    long long n_diverged = 0;
    long long negative_variance = 0;

    std::size_t size() const { return time_grid.size(); }
};

/// Mergeable sufficient statistics. Merging is exact up to floating-point
/// association; merging a fixed partition in a fixed order is bit-reproducible.
class EnsembleAccumulator {
public:
    EnsembleAccumulator() = default;
    explicit EnsembleAccumulator(std::vector<double> time_grid) : time_grid_(std::move(time_grid)) {
        const auto t = static_cast<Eigen::Index>(time_grid_.size());
        sum_ip_ = Eigen::VectorXd::Zero(t);
        sum_im_ = Eigen::VectorXd::Zero(t);
        sum_sz_ = Eigen::VectorXd::Zero(t);
        sum_qpp_ = Eigen::VectorXd::Zero(t);
        sum_qmm_ = Eigen::VectorXd::Zero(t);
        sum_qpm_ = Eigen::VectorXd::Zero(t);
        pp_ = Eigen::MatrixXd::Zero(t, t);
        mm_ = Eigen::MatrixXd::Zero(t, t);
        pm_ = Eigen::MatrixXd::Zero(t, t);
    }

    std::size_t grid_size() const { return time_grid_.size(); }
    long long count() const { return n_; }

    /// Adds one trajectory; the fourth-moment series may be empty.
    void add(std::span<const double> i_plus, std::span<const double> i_minus, std::span<const double> sz,
             std::span<const double> q_pp = {}, std::span<const double> q_mm = {}, std::span<const double> q_pm = {}) {
        const auto t = static_cast<Eigen::Index>(time_grid_.size());
        if (static_cast<Eigen::Index>(i_plus.size()) != t || static_cast<Eigen::Index>(i_minus.size()) != t ||
            static_cast<Eigen::Index>(sz.size()) != t)
            throw DomainError("EnsembleAccumulator::add: series length does not match the time grid");
        Eigen::Map<const Eigen::VectorXd> ip(i_plus.data(), t), im(i_minus.data(), t), s(sz.data(), t);
        sum_ip_ += ip;
        sum_im_ += im;
        sum_sz_ += s;
        if (!q_pp.empty()) {
            if (static_cast<Eigen::Index>(q_pp.size()) != t || static_cast<Eigen::Index>(q_mm.size()) != t ||
                static_cast<Eigen::Index>(q_pm.size()) != t)
                throw DomainError("EnsembleAccumulator::add: fourth-moment length does not match the time grid");
            sum_qpp_ += Eigen::Map<const Eigen::VectorXd>(q_pp.data(), t);
            sum_qmm_ += Eigen::Map<const Eigen::VectorXd>(q_mm.data(), t);
            sum_qpm_ += Eigen::Map<const Eigen::VectorXd>(q_pm.data(), t);
        }
        pp_.selfadjointView<Eigen::Upper>().rankUpdate(ip);
        mm_.selfadjointView<Eigen::Upper>().rankUpdate(im);
        pm_.noalias() += ip * im.transpose();
        peak_plus_.push_back(ip.maxCoeff());
        peak_minus_.push_back(im.maxCoeff());
        ++n_;
    }

    void add_diverged(long long k = 1) { n_diverged_ += k; }
    void add_negative_variance(long long k) { negative_variance_ += k; }

    void merge(const EnsembleAccumulator& o) {
        if (o.time_grid_.size() != time_grid_.size()) throw DomainError("EnsembleAccumulator::merge: grid mismatch");
        sum_ip_ += o.sum_ip_;
        sum_im_ += o.sum_im_;
        sum_sz_ += o.sum_sz_;
        sum_qpp_ += o.sum_qpp_;
        sum_qmm_ += o.sum_qmm_;
        sum_qpm_ += o.sum_qpm_;
        pp_ += o.pp_;
        mm_ += o.mm_;
        pm_ += o.pm_;
        peak_plus_.insert(peak_plus_.end(), o.peak_plus_.begin(), o.peak_plus_.end());
        peak_minus_.insert(peak_minus_.end(), o.peak_minus_.begin(), o.peak_minus_.end());
        n_ += o.n_;
        n_diverged_ += o.n_diverged_;
        negative_variance_ += o.negative_variance_;
    }

    ObservableSeries finalize() const {
        if (n_ < 1) throw EmptyResultError("no completed trajectories");
        const auto t = static_cast<Eigen::Index>(time_grid_.size());
        const double inv = 1.0 / static_cast<double>(n_);
        ObservableSeries out;
        out.time_grid = time_grid_;
        out.n_traj = n_;
        out.n_diverged = n_diverged_;
        out.negative_variance = negative_variance_;
        out.second_moment_grid_pp = pp_.selfadjointView<Eigen::Upper>();
        out.second_moment_grid_mm = mm_.selfadjointView<Eigen::Upper>();
        out.second_moment_grid_pp *= inv;
        out.second_moment_grid_mm *= inv;
        out.second_moment_grid_pm = pm_ * inv;
        out.mean_i_plus.resize(t);
        out.mean_i_minus.resize(t);
        out.se_i_plus.resize(t);
        out.se_i_minus.resize(t);
        out.sz_mean.resize(t);
        out.fourth_pp.resize(t);
        out.fourth_mm.resize(t);
        out.fourth_pm.resize(t);
        auto se = [&](double mean, double m2) {
            if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
            const double var = std::max(0.0, (m2 - mean * mean) * static_cast<double>(n_) / static_cast<double>(n_ - 1));
            return std::sqrt(var * inv);
        };
        for (Eigen::Index i = 0; i < t; ++i) {
            out.mean_i_plus[i] = sum_ip_[i] * inv;
            out.mean_i_minus[i] = sum_im_[i] * inv;
            out.sz_mean[i] = sum_sz_[i] * inv;
            out.fourth_pp[i] = sum_qpp_[i] * inv;
            out.fourth_mm[i] = sum_qmm_[i] * inv;
            out.fourth_pm[i] = sum_qpm_[i] * inv;
            out.se_i_plus[i] = se(out.mean_i_plus[i], out.second_moment_grid_pp(i, i));
            out.se_i_minus[i] = se(out.mean_i_minus[i], out.second_moment_grid_mm(i, i));
        }
        out.peak_plus = peak_plus_;
        out.peak_minus = peak_minus_;
        return out;
    }

private:
    std::vector<double> time_grid_;
    Eigen::VectorXd sum_ip_, sum_im_, sum_sz_, sum_qpp_, sum_qmm_, sum_qpm_;
    Eigen::MatrixXd pp_, mm_, pm_;
    std::vector<double> peak_plus_, peak_minus_;
    long long n_ = 0;
    long long n_diverged_ = 0;
    long long negative_variance_ = 0;
};

/// kappa = (R+ - R-) / (R+ + R-).
inline double directionality(double r_plus, double r_minus) {
    if (r_plus < 0.0 || r_minus < 0.0) throw DomainError("directionality: rates must be non-negative");
    if (r_plus + r_minus == 0.0) throw UndefinedDirectionalityError();
    return (r_plus - r_minus) / (r_plus + r_minus);
}

/// Normalized correlation grid; entries with invalid(i, j) set are masked.
struct G2Grid {
    std::vector<double> time_grid;
    Eigen::MatrixXd value;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid;

    std::optional<double> at(Eigen::Index i, Eigen::Index j) const {
        if (!valid(i, j)) return std::nullopt;
        return value(i, j);
    }
};

namespace detail {

inline G2Grid normalize_grid(const std::vector<double>& tg, const Eigen::MatrixXd& m2, const std::vector<double>& a,
                             const std::vector<double>& b, double floor, long long n_traj) {
    if (n_traj < 2) throw InsufficientDataError("g2 needs at least two trajectories");
    const auto t = static_cast<Eigen::Index>(tg.size());
    if (m2.rows() != t || m2.cols() != t) throw DomainError("g2: second-moment grid does not match the time grid");
    G2Grid g{tg, Eigen::MatrixXd::Constant(t, t, std::numeric_limits<double>::quiet_NaN()),
             Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(t, t, false)};
    bool any = false;
    for (Eigen::Index i = 0; i < t; ++i) {
        if (!(a[i] > floor) || !(a[i] > 0.0)) continue;
        for (Eigen::Index j = 0; j < t; ++j) {
            if (!(b[j] > floor) || !(b[j] > 0.0)) continue;
            g.value(i, j) = m2(i, j) / (a[i] * b[j]);
            g.valid(i, j) = true;
            any = true;
        }
    }
    if (!any) throw EmptyResultError("g2 grid fully masked by the intensity floor");
    return g;
}

}  // namespace detail

/// g2(t1, t2) = <I(t1) I(t2)> / (<I(t1)> <I(t2)>) for one direction; points with mean
/// intensity at or below `floor` are masked.
inline G2Grid accumulate_g2(const ObservableSeries& s, Direction dir = Direction::plus, double floor = 0.0) {
    return dir == Direction::plus
               ? detail::normalize_grid(s.time_grid, s.second_moment_grid_pp, s.mean_i_plus, s.mean_i_plus, floor, s.n_traj)
               : detail::normalize_grid(s.time_grid, s.second_moment_grid_mm, s.mean_i_minus, s.mean_i_minus, floor,
                                        s.n_traj);
}

/// g2_{+-}(t1, t2) with I+ at t1 and I- at t2.
inline G2Grid cross_correlation(const ObservableSeries& s, double floor = 0.0) {
    return detail::normalize_grid(s.time_grid, s.second_moment_grid_pm, s.mean_i_plus, s.mean_i_minus, floor, s.n_traj);
}

enum class Channel { plus_plus, minus_minus, plus_minus };

/// Equal-time g2(t, t) from the normally ordered fourth-moment symbol,
/// <E_a^dag E_b^dag E_b E_a> / (<I_a> <I_b>); NaN where either mean is at or below `floor`.
inline std::vector<double> equal_time_g2(const ObservableSeries& s, Channel c, double floor = 0.0) {
    std::vector<double> out(s.size(), std::numeric_limits<double>::quiet_NaN());
    bool any = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double a = c == Channel::minus_minus ? s.mean_i_minus[i] : s.mean_i_plus[i];
        const double b = c == Channel::plus_plus ? s.mean_i_plus[i] : s.mean_i_minus[i];
        const double q = c == Channel::plus_plus ? s.fourth_pp[i] : (c == Channel::minus_minus ? s.fourth_mm[i] : s.fourth_pm[i]);
        if (!(a > floor) || !(b > floor) || !(a > 0) || !(b > 0)) continue;
        out[i] = q / (a * b);
        any = true;
    }
    if (!any) throw EmptyResultError("equal-time g2 fully masked by the intensity floor");
    return out;
}

struct BurstShape {
    double peak = 0.0;
    double delay = 0.0;
    std::size_t peak_index = 0;
    double fwhm = 0.0;
};

/// Peak, earliest time of the peak, and full width at half maximum from linear
/// interpolation of the half-maximum crossings on both sides of the peak.
inline BurstShape burst_metrics(std::span<const double> y, std::span<const double> t) {
    if (y.empty() || y.size() != t.size()) throw DomainError("burst_metrics: need equal, non-empty sequences");
    BurstShape b;
    b.peak_index = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    b.peak = y[b.peak_index];
    b.delay = t[b.peak_index];
    if (!(b.peak > 0.0)) throw FwhmUndefinedError("burst_metrics: signal has no positive peak");
    const double half = 0.5 * b.peak;
    auto cross = [&](std::size_t i, std::size_t j) {  // y[i] >= half > y[j] or the reverse
        return t[i] + (half - y[i]) * (t[j] - t[i]) / (y[j] - y[i]);
    };
    std::optional<double> left, right;
    for (std::size_t i = b.peak_index; i > 0; --i)
        if (y[i - 1] < half) {
            left = cross(i - 1, i);
            break;
        }
    for (std::size_t i = b.peak_index; i + 1 < y.size(); ++i)
        if (y[i + 1] < half) {
            right = cross(i, i + 1);
            break;
        }
    if (!left || !right) throw FwhmUndefinedError("burst_metrics: half maximum not crossed on both sides of the peak");
    b.fwhm = *right - *left;
    return b;
}

enum class KappaSource { mean, per_shot_median };

struct BurstStatistics {
    double r_plus = 0.0;
    double r_minus = 0.0;
    double kappa = 0.0;
    double kappa_se = 0.0;
    double delay = 0.0;  ///< grid time of the + peak
    std::optional<double> fwhm;
    std::optional<double> g2_equal_time_min;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) throw EmptyResultError("median of an empty sequence");
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    double m = v[h];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h)));
    return m;
}

}  // namespace detail

/// Peak rates, kappa and its delta-method standard error from an ensemble.
inline BurstStatistics burst_statistics(const ObservableSeries& s, KappaSource src = KappaSource::mean,
                                        double g2_floor_fraction = 0.01) {
    BurstStatistics b;
    const auto ip = std::max_element(s.mean_i_plus.begin(), s.mean_i_plus.end()) - s.mean_i_plus.begin();
    const auto im = std::max_element(s.mean_i_minus.begin(), s.mean_i_minus.end()) - s.mean_i_minus.begin();
    const double n = static_cast<double>(s.n_traj);
    if (src == KappaSource::mean) {
        b.r_plus = s.mean_i_plus[ip];
        b.r_minus = s.mean_i_minus[im];
        b.kappa = directionality(b.r_plus, b.r_minus);
        const double va = s.second_moment_grid_pp(ip, ip) - b.r_plus * b.r_plus;
        const double vb = s.second_moment_grid_mm(im, im) - b.r_minus * b.r_minus;
        const double cab = s.second_moment_grid_pm(ip, im) - b.r_plus * b.r_minus;
        const double sum = b.r_plus + b.r_minus;
        const double var = 4.0 / std::pow(sum, 4) *
                           (b.r_minus * b.r_minus * va + b.r_plus * b.r_plus * vb - 2.0 * b.r_plus * b.r_minus * cab) /
                           std::max(n - 1.0, 1.0);
        b.kappa_se = std::sqrt(std::max(var, 0.0));
    } else {
        b.r_plus = detail::median(s.peak_plus);
        b.r_minus = detail::median(s.peak_minus);
        b.kappa = directionality(b.r_plus, b.r_minus);
        // per-shot kappa spread as a scale for the error of the median ratio
        std::vector<double> k;
        k.reserve(s.peak_plus.size());
        for (std::size_t i = 0; i < s.peak_plus.size(); ++i) {
            const double d = s.peak_plus[i] + s.peak_minus[i];
            if (d > 0) k.push_back((s.peak_plus[i] - s.peak_minus[i]) / d);
        }
        double m = 0, m2 = 0;
        for (double x : k) {
            m += x;
            m2 += x * x;
        }
        const double kn = static_cast<double>(k.size());
        b.kappa_se = kn > 1 ? std::sqrt(std::max(0.0, (m2 - m * m / kn) / (kn - 1.0)) / kn) : 0.0;
    }
    b.delay = s.time_grid[ip];
    try {
        b.fwhm = burst_metrics(s.mean_i_plus, s.time_grid).fwhm;
    } catch (const FwhmUndefinedError&) {
    }
    if (s.n_traj >= 2) {
        const double floor = g2_floor_fraction * b.r_plus;
        std::optional<double> g2min;
        for (std::size_t i = static_cast<std::size_t>(ip); i < s.size(); ++i) {
            const double a = s.mean_i_plus[i];
            if (!(a > floor)) continue;
            const double g = s.fourth_pp[i] / (a * a);
            if (!g2min || g < *g2min) g2min = g;
        }
        b.g2_equal_time_min = g2min;
    }
    return b;
}

}  // namespace wgsf
