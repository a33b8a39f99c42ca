#include "hotune/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hotune {

namespace {

void require_length(const Vec& v, int n, const char* name) {
    if (v.size() != n) {
        throw ConfigError(name, "expected " + std::to_string(n) + " entries, got " +
                                    std::to_string(v.size()));
    }
}

}  // namespace

RegressorSignal::RegressorSignal(SinusoidMix mix) : mix_(std::move(mix)) {
    const int n = static_cast<int>(mix_.offsets.size());
    if (n < 1) throw ConfigError("dimension", "must be at least 1");
    require_length(mix_.amplitudes, n, "amplitudes");
    require_length(mix_.frequencies, n, "frequencies");
    require_length(mix_.phases, n, "phases");
    require_length(mix_.theta_star, n, "theta_star");
}

Vec RegressorSignal::phi(double t) const {
    const int n = dimension();
    Vec out(n);
    for (int i = 0; i < n; ++i) {
        const double a = mix_.amplitudes[i];
        out[i] = a == 0.0 ? mix_.offsets[i]
                          : mix_.offsets[i] + a * std::sin(mix_.frequencies[i] * t + mix_.phases[i]);
    }
    return out;
}

RegressorSample RegressorSignal::eval(double t) const {
    RegressorSample s;
    s.phi = phi(t);
    s.y_star = s.phi.dot(mix_.theta_star);
    return s;
}

double RegressorSignal::period() const {
    double slowest = 0.0;
    for (int i = 0; i < dimension(); ++i) {
        const double f = std::abs(mix_.frequencies[i]);
        if (mix_.amplitudes[i] != 0.0 && f > 0.0) slowest = slowest == 0.0 ? f : std::min(slowest, f);
    }
    if (slowest == 0.0) return 2.0 * std::numbers::pi;
    return 2.0 * std::numbers::pi / slowest;
}

RegressorSignal RegressorSignal::shifted(double tau) const {
    SinusoidMix m = mix_;
    m.phases = mix_.phases + mix_.frequencies * tau;
    return RegressorSignal(std::move(m));
}

RegressorSignal make_sinusoid_mix(int n, const Vec& offsets, const Vec& amplitudes,
                                  const Vec& frequencies, const Vec& phases,
                                  const Vec& theta_star) {
    if (n < 1) throw ConfigError("dimension", "must be at least 1");
    require_length(offsets, n, "offsets");
    return RegressorSignal(SinusoidMix{offsets, amplitudes, frequencies, phases, theta_star});
}

RegressorSignal make_constant_signal(const Vec& values, const Vec& theta_star) {
    const auto n = values.size();
    return RegressorSignal(
        SinusoidMix{values, Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), theta_star});
}

RegressorSignal make_reference_signal(const Vec& theta_star) {
    Vec offsets(3), amplitudes(3), frequencies(3), phases(3);
    offsets << 1.0, 1.0, 1.0;
    amplitudes << 0.0, 3.0, 3.0;
    frequencies << 0.0, 1.0, 1.0;
    phases << 0.0, 0.0, std::numbers::pi / 2.0;
    return make_sinusoid_mix(3, offsets, amplitudes, frequencies, phases, theta_star);
}

Mat pe_gram(const RegressorSignal& signal, double t, double window, double quadrature_step) {
    if (!(window > 0.0)) throw std::invalid_argument("pe_gram: window must be positive");
    if (!(quadrature_step > 0.0) || quadrature_step > window) {
        throw std::invalid_argument("pe_gram: quadrature step must lie in (0, window]");
    }
    const auto panels = static_cast<long>(std::ceil(window / quadrature_step - 1e-9));
    const double h = window / static_cast<double>(panels);
    const int n = signal.dimension();

    Mat g = Mat::Zero(n, n);
    for (long j = 0; j <= panels; ++j) {
        const Vec v = signal.phi(t + h * static_cast<double>(j));
        const double w = (j == 0 || j == panels) ? 0.5 : 1.0;
        g.noalias() += w * v * v.transpose();
    }
    g *= h;
    return 0.5 * (g + g.transpose());
}

double min_eigenvalue(const Mat& symmetric) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

PEReport check_pe(const RegressorSignal& signal, double window, double scan_horizon,
                  double scan_step, double quadrature_step) {
    if (scan_horizon < window) throw std::invalid_argument("check_pe: horizon shorter than window");
    if (scan_step <= 0.0) scan_step = window / 8.0;

    PEReport r;
    r.window_T = window;
    r.scan_horizon = scan_horizon;
    r.quadrature_step = quadrature_step;

    double delta = std::numeric_limits<double>::infinity();
    const double last_start = scan_horizon - window;
    for (long k = 0;; ++k) {
        const double start = scan_step * static_cast<double>(k);
        if (start > last_start + 1e-12) break;
        delta = std::min(delta, min_eigenvalue(pe_gram(signal, start, window, quadrature_step)));
        ++r.windows_scanned;
    }
    r.delta_hat = std::max(delta, 0.0);

    const auto nodes = static_cast<long>(std::ceil(scan_horizon / quadrature_step - 1e-9));
    double m = 0.0;
    for (long j = 0; j <= nodes; ++j) {
        const double s = std::min(quadrature_step * static_cast<double>(j), scan_horizon);
        m = std::max(m, signal.phi(s).norm());
    }
    r.M_hat = m;
    return r;
}

}  // namespace hotune
