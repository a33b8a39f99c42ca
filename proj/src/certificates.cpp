#include "hotune/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>

namespace hotune {

namespace {

constexpr double kMinFitError = 1e-13;
constexpr double kMinTruncation = 30.0;

struct Gradient {
    Vec d_theta_tilde;
    Vec d_p;
};

Gradient lyapunov_gradient(LyapunovForm form, const ErrorCoords& e, const Gains& g, const Mat& p_mu) {
    const Vec sum = e.theta_tilde + e.p;
    switch (form) {
        case LyapunovForm::v0:
            return {(2.0 / g.gamma) * sum, (2.0 / g.gamma) * (sum + e.p)};
        case LyapunovForm::v_cl:
            return {(2.0 / g.gamma) * sum + (4.0 / g.beta) * (p_mu * e.theta_tilde),
                    (2.0 / g.gamma) * (sum + e.p)};
        case LyapunovForm::v_b:
            return {sum + (2.0 * g.gamma / g.beta) * (p_mu * e.theta_tilde), sum + e.p};
    }
    return {};
}

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

    Vec gaussian(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Uniform in the ball of `radius` in R^{2n}.
    ErrorCoords error_in_ball(int n, double radius) {
        Vec z = gaussian(2 * n);
        const double norm = z.norm();
        if (norm > 0.0) z /= norm;
        z *= radius * std::pow(uniform(), 1.0 / (2.0 * n));
        return {z.head(n), z.tail(n)};
    }

    double grid_time(double t_max, double grid) {
        const auto nodes = static_cast<long>(std::floor(t_max / grid));
        return grid * static_cast<double>(
                          std::uniform_int_distribution<long>(0, std::max(nodes, 0L))(rng_));
    }

private:
    std::mt19937_64 rng_;
};

void record_margin(CertificateReport& r, double margin) {
    ++r.checked;
    if (r.checked == 1 || margin > r.worst_margin) r.worst_margin = margin;
    if (margin > r.tolerance) ++r.violations;
}

double scan_M(const RegressorSignal& signal, double t_max, double grid) {
    const auto nodes = static_cast<long>(std::floor(t_max / grid));
    double m = 0.0;
    for (long j = 0; j <= nodes; ++j) m = std::max(m, signal.phi(grid * static_cast<double>(j)).norm());
    return m;
}

}  // namespace

ErrorCoords ErrorCoords::from_state(const TunerState& x, const Vec& theta_star) {
    return {x.theta - theta_star, x.vartheta - x.theta};
}

TunerState ErrorCoords::to_state(const Vec& theta_star) const {
    const Vec theta = theta_star + theta_tilde;
    return {theta, theta + p};
}

double ErrorCoords::norm() const { return std::sqrt(theta_tilde.squaredNorm() + p.squaredNorm()); }

double v0(const ErrorCoords& err, double gamma) {
    return ((err.theta_tilde + err.p).squaredNorm() + err.p.squaredNorm()) / gamma;
}

double v_cl(const ErrorCoords& err, const Gains& gains, const Mat& p_mu) {
    return v0(err, gains.gamma) +
           (2.0 / gains.beta) * err.theta_tilde.dot(p_mu * err.theta_tilde);
}

double v_b(const ErrorCoords& err, const Gains& gains, const Mat& p_mu) {
    return 0.5 * (err.theta_tilde + err.p).squaredNorm() + 0.5 * err.p.squaredNorm() +
           (gains.gamma / gains.beta) * err.theta_tilde.dot(p_mu * err.theta_tilde);
}

std::optional<LyapunovForm> lyapunov_form(SystemKind kind) {
    switch (kind) {
        case SystemKind::ht:
        case SystemKind::ht_normalized:
            return LyapunovForm::v0;
        case SystemKind::ht_cl:
        case SystemKind::ht_normalized_cl:
        case SystemKind::ht_cl_softreset:
        case SystemKind::ht_normalized_cl_softreset:
            return LyapunovForm::v_cl;
        case SystemKind::ht_b:
            return LyapunovForm::v_b;
        default:
            return std::nullopt;
    }
}

double lyapunov_value(LyapunovForm form, const ErrorCoords& err, const Gains& gains,
                      const Mat& p_mu) {
    switch (form) {
        case LyapunovForm::v0:
            return v0(err, gains.gamma);
        case LyapunovForm::v_cl:
            return v_cl(err, gains, p_mu);
        case LyapunovForm::v_b:
            return v_b(err, gains, p_mu);
    }
    return 0.0;
}

ErrorCoords error_field(SystemKind kind, const ErrorCoords& err, const RegressorSample& sample,
                        const Vec& theta_star, const DataBuffer& buffer, const Gains& gains) {
    const TunerState d = field_at(kind, err.to_state(theta_star), sample, buffer, gains);
    return {d.theta, d.vartheta - d.theta};
}

double lyapunov_derivative(SystemKind kind, const ErrorCoords& err, const RegressorSample& sample,
                           const Vec& theta_star, const DataBuffer& buffer, const Gains& gains) {
    const auto form = lyapunov_form(kind);
    if (!form) throw std::invalid_argument("lyapunov_derivative: no certificate for this kind");
    const int n = static_cast<int>(theta_star.size());
    const Mat p_mu = uses_buffer(kind) ? p_matrix(buffer, gains.mu) : Mat::Zero(n, n);
    const Gradient grad = lyapunov_gradient(*form, err, gains, p_mu);
    const ErrorCoords f = error_field(kind, err, sample, theta_star, buffer, gains);
    return grad.d_theta_tilde.dot(f.theta_tilde) + grad.d_p.dot(f.p);
}

double decrease_bound(SystemKind kind, const ErrorCoords& err, const RegressorSample& sample,
                      const Gains& gains, const Mat& p_mu, double M) {
    const double p2 = err.p.squaredNorm();
    const double ey = sample.phi.dot(err.theta_tilde);
    const double ratio = gains.beta / gains.gamma;
    switch (kind) {
        case SystemKind::ht:
            return -2.0 * ratio * p2 - ey * ey;
        case SystemKind::ht_normalized:
            return (-2.0 * ratio * p2 - ey * ey) / normalization(sample.phi, gains.mu);
        case SystemKind::ht_cl:
            return -2.0 * err.theta_tilde.dot(p_mu * err.theta_tilde) - 2.0 * ratio * p2;
        case SystemKind::ht_normalized_cl:
            return -2.0 * err.theta_tilde.dot(p_mu * err.theta_tilde) -
                   2.0 * ratio / (1.0 + gains.mu * M * M) * p2;
        case SystemKind::ht_b:
            return -gains.gamma * err.theta_tilde.dot(p_mu * err.theta_tilde) - gains.beta * p2;
        default:
            throw std::invalid_argument("decrease_bound: no certified bound for this kind");
    }
}

void write_reports_csv(std::ostream& os, std::span<const CertificateReport> reports) {
    os << "label,checked,violations,worst_margin,tolerance\n";
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : reports) {
        os << r.label << ',' << r.checked << ',' << r.violations << ',' << r.worst_margin << ','
           << r.tolerance << '\n';
    }
    os.precision(old_precision);
}

CertificateReport check_decrease_pointwise(SystemKind kind, const RegressorSignal& signal,
                                           const DataBuffer& buffer, const Gains& gains,
                                           const PointwiseOptions& options) {
    switch (kind) {
        case SystemKind::ht:
        case SystemKind::ht_normalized:
        case SystemKind::ht_cl:
        case SystemKind::ht_normalized_cl:
        case SystemKind::ht_b:
            break;
        default:
            throw std::invalid_argument(std::string(to_string(kind)) +
                                        ": no pointwise decrease bound is certified");
    }
    if (needs_gain_condition(kind) && gains.gain_condition_warning) {
        throw PreconditionError(std::string(to_string(kind)) +
                                ": the decrease bound requires beta >= 2 gamma / mu (beta = " +
                                std::to_string(gains.beta) + ", 2 gamma / mu = " +
                                std::to_string(2.0 * gains.gamma / gains.mu) + ")");
    }

    const int n = signal.dimension();
    const Vec& theta_star = signal.theta_star();
    Mat p_mu = Mat::Zero(n, n);
    CertificateReport report;
    report.label = std::string(to_string(kind)) + ":pointwise";
    report.tolerance = options.tolerance;
    if (uses_buffer(kind)) {
        p_mu = p_matrix(buffer, gains.mu);
        report.strict = min_eigenvalue(p_mu) > 1e-10;
    }
    double M = options.M;
    if (kind == SystemKind::ht_normalized_cl && M <= 0.0) {
        M = scan_M(signal, options.t_max, options.t_grid);
    }

    Sampler sampler(options.seed);
    for (int i = 0; i < options.sample_count; ++i) {
        // The first point is the origin, where both sides vanish.
        const ErrorCoords err = i == 0 ? ErrorCoords{Vec::Zero(n), Vec::Zero(n)}
                                       : sampler.error_in_ball(n, options.radius);
        const RegressorSample sample = signal.eval(sampler.grid_time(options.t_max, options.t_grid));
        const double lhs = lyapunov_derivative(kind, err, sample, theta_star, buffer, gains);
        const double rhs = decrease_bound(kind, err, sample, gains, p_mu, M);
        record_margin(report, lhs - rhs);
    }
    return report;
}

std::vector<double> lyapunov_values(const Trajectory& trajectory, SystemKind kind,
                                    const Gains& gains, const Vec& theta_star,
                                    const DataBuffer& buffer) {
    const auto form = lyapunov_form(kind);
    if (!form) throw std::invalid_argument("lyapunov_values: no certificate for this kind");
    const int n = trajectory.dimension;

    std::map<int, Mat> p_cache;
    auto p_for = [&](int count) -> const Mat& {
        auto it = p_cache.find(count);
        if (it != p_cache.end()) return it->second;
        Mat p = (uses_buffer(kind) && count > 0) ? p_matrix(buffer.prefix(count), gains.mu)
                                                 : Mat(Mat::Zero(n, n));
        return p_cache.emplace(count, std::move(p)).first->second;
    };

    std::vector<double> out;
    out.reserve(trajectory.rows.size());
    for (const auto& row : trajectory.rows) {
        const ErrorCoords e = ErrorCoords::from_state({row.theta, row.vartheta}, theta_star);
        // Rows of fixed-buffer runs carry the full buffer size.
        const int count = uses_buffer(kind) ? row.n_samples : 0;
        out.push_back(lyapunov_value(*form, e, gains, p_for(count)));
    }
    return out;
}

void attach_lyapunov(Trajectory& trajectory, SystemKind kind, const Gains& gains,
                     const Vec& theta_star, const DataBuffer& buffer) {
    const auto v = lyapunov_values(trajectory, kind, gains, theta_star, buffer);
    for (std::size_t i = 0; i < v.size(); ++i) trajectory.rows[i].V = v[i];
}

CertificateReport check_decrease_along(const Trajectory& trajectory,
                                       std::span<const double> v_values, double step_h,
                                       double slack_c) {
    if (v_values.size() != trajectory.rows.size()) {
        throw std::invalid_argument("check_decrease_along: V length does not match trajectory");
    }
    CertificateReport report;
    report.label = "along";
    report.tolerance = 0.0;
    const auto& rows = trajectory.rows;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (rows[i].n_samples != rows[i + 1].n_samples) {
            ++report.skipped;
            continue;
        }
        const double steps = std::max(1.0, std::round((rows[i + 1].t - rows[i].t) / step_h));
        const double slack = slack_c * step_h * steps * (1.0 + v_values[i]);
        record_margin(report, v_values[i + 1] - v_values[i] - slack);
    }
    return report;
}

Mat matrosov_weight(const RegressorSignal& signal, double t, double truncation,
                    double quadrature_step) {
    const auto panels = static_cast<long>(std::ceil(truncation / quadrature_step - 1e-9));
    const double h = truncation / static_cast<double>(panels);
    const int n = signal.dimension();
    Mat w = Mat::Zero(n, n);
    for (long j = 0; j <= panels; ++j) {
        const double s = h * static_cast<double>(j);
        const Vec v = signal.phi(t + s);
        const double weight = ((j == 0 || j == panels) ? 0.5 : 1.0) * std::exp(-s);
        w.noalias() += weight * v * v.transpose();
    }
    w *= h;
    return 0.5 * (w + w.transpose());
}

double matrosov_v1(const RegressorSignal& signal, const Vec& theta_tilde, double t,
                   double truncation, double quadrature_step) {
    return -theta_tilde.dot(matrosov_weight(signal, t, truncation, quadrature_step) * theta_tilde);
}

MatrosovReport matrosov_check(const RegressorSignal& signal, const Gains& gains,
                              const MatrosovOptions& o) {
    if (o.truncation < kMinTruncation) {
        throw std::invalid_argument("matrosov_check: truncation below 30 leaves a tail above 1e-13");
    }
    if (o.kind != SystemKind::ht && o.kind != SystemKind::ht_normalized) {
        throw std::invalid_argument("matrosov_check: only ht and ht_normalized use V1");
    }
    const bool normalized = o.kind == SystemKind::ht_normalized;
    const double M2 = o.M * o.M;

    MatrosovReport r;
    r.cross_coeff = o.cross_coeff.value_or(normalized ? 2.0 * gains.beta * M2
                                                      : 2.0 * gains.beta * M2 * (1.0 + gains.mu * M2));
    r.bound.label = std::string(to_string(o.kind)) + ":matrosov_bound";
    r.chain.label = std::string(to_string(o.kind)) + ":matrosov_chain";
    r.derivative.label = std::string(to_string(o.kind)) + ":matrosov_derivative";
    r.bound.tolerance = r.chain.tolerance = r.derivative.tolerance = o.tolerance;

    const int n = signal.dimension();
    const double decay = std::exp(-o.T) * o.delta;
    const double tail = std::exp(-o.truncation);
    Sampler sampler(o.seed);

    // A small set of distinct times keeps the number of weight quadratures low.
    std::vector<double> times;
    std::vector<Mat> weights;
    for (int j = 0; j < std::max(o.time_points, 1); ++j) {
        times.push_back(sampler.grid_time(o.t_max, o.quadrature_step));
        weights.push_back(matrosov_weight(signal, times.back(), o.truncation, o.quadrature_step));
    }

    for (int i = 0; i < o.sample_count; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) % times.size();
        const double t = times[j];
        const Mat& w = weights[j];
        const Vec phi = signal.phi(t);

        ErrorCoords e = sampler.error_in_ball(n, o.radius);
        const double th2 = e.theta_tilde.squaredNorm();
        const double v1 = -e.theta_tilde.dot(w * e.theta_tilde);
        record_margin(r.bound, v1 + decay * th2);

        // Exact derivative of the truncated V1 along the flow:
        //   V1 + e_y^2 - exp(-L) (phi(t+L)^T th)^2 - 2 th^T W th_dot
        const double ey = phi.dot(e.theta_tilde);
        const double nt = normalized ? 1.0 : normalization(phi, gains.mu);
        const Vec th_dot = gains.beta * nt * e.p;
        const double end_term = signal.phi(t + o.truncation).dot(e.theta_tilde);
        const double dv1 =
            v1 + ey * ey - tail * end_term * end_term - 2.0 * e.theta_tilde.dot(w * th_dot);
        const double y1 = -decay * th2 + ey * ey + r.cross_coeff * std::sqrt(th2) * e.p.norm();
        record_margin(r.derivative, dv1 - y1);

        // Chain condition: p = 0 and e_y = 0 force Y1 = -exp(-T) delta |th|^2.
        Vec th = e.theta_tilde;
        const double phi2 = phi.squaredNorm();
        if (phi2 > 0.0) th -= phi * (phi.dot(th) / phi2);
        const double ey0 = phi.dot(th);
        const double y1_chain = -decay * th.squaredNorm() + ey0 * ey0;
        record_margin(r.chain, y1_chain);
    }
    return r;
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> err, double skip_fraction,
                   double envelope_window) {
    if (t.size() != err.size()) throw std::invalid_argument("fit_decay: length mismatch");
    if (!(skip_fraction >= 0.0 && skip_fraction < 1.0)) {
        throw std::invalid_argument("fit_decay: skip_fraction must lie in [0, 1)");
    }
    const std::size_t count = t.size();
    const auto first = static_cast<std::size_t>(std::floor(skip_fraction * static_cast<double>(count)));
    const double t_last = count > 0 ? t.back() : 0.0;

    std::vector<double> xs, ys;
    std::size_t hi = first;
    double window_max = 0.0;
    for (std::size_t i = first; i < count; ++i) {
        if (t[i] + envelope_window > t_last + 1e-12) break;
        if (err[i] < kMinFitError) continue;
        if (hi < i) hi = i;
        while (hi + 1 < count && t[hi + 1] <= t[i] + envelope_window + 1e-12) ++hi;
        window_max = 0.0;
        for (std::size_t j = i; j <= hi; ++j) window_max = std::max(window_max, err[j]);
        xs.push_back(t[i]);
        ys.push_back(std::log(window_max));
    }
    if (xs.size() < 10) throw std::invalid_argument("estimate_decay_rate: fewer than 10 usable rows");

    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;

    DecayFit fit;
    fit.alpha = -slope;
    fit.c = std::exp(intercept);
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.rows_used = static_cast<int>(xs.size());
    return fit;
}

DecayFit estimate_decay_rate(const Trajectory& trajectory, double skip_fraction,
                             double envelope_window) {
    std::vector<double> t, err;
    t.reserve(trajectory.rows.size());
    err.reserve(trajectory.rows.size());
    for (const auto& row : trajectory.rows) {
        t.push_back(row.t);
        err.push_back(row.err_norm);
    }
    return fit_decay(t, err, skip_fraction, envelope_window);
}

}  // namespace hotune
