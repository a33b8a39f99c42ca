#pragma once

#include "hotune/types.hpp"

namespace hotune {

/// Parameters of a sinusoid-mix regressor:
///   phi_i(t) = offsets_i + amplitudes_i * sin(frequencies_i * t + phases_i)
/// and the ground-truth parameter used to build y*(t) = phi(t)^T theta_star.
struct SinusoidMix {
    Vec offsets;
    Vec amplitudes;
    Vec frequencies;
    Vec phases;
    Vec theta_star;
};

struct RegressorSample {
    Vec phi;
    double y_star = 0.0;
};

/// Deterministic regressor/output pair. Evaluation is exact and pure.
class RegressorSignal {
public:
    explicit RegressorSignal(SinusoidMix mix);

    int dimension() const noexcept { return static_cast<int>(mix_.offsets.size()); }
    const SinusoidMix& descriptor() const noexcept { return mix_; }
    const Vec& theta_star() const noexcept { return mix_.theta_star; }

    Vec phi(double t) const;
    double y_star(double t) const { return phi(t).dot(mix_.theta_star); }
    RegressorSample eval(double t) const;

    /// Period of the slowest oscillating component (2*pi when all are constant).
    /// This is the common period whenever the other frequencies are integer
    /// multiples of the slowest.
    double period() const;

    /// Signal s with s.phi(t) == phi(t + tau).
    RegressorSignal shifted(double tau) const;

private:
    SinusoidMix mix_;
};

RegressorSignal make_sinusoid_mix(int n, const Vec& offsets, const Vec& amplitudes,
                                  const Vec& frequencies, const Vec& phases,
                                  const Vec& theta_star);

/// phi(t) == values for every t.
RegressorSignal make_constant_signal(const Vec& values, const Vec& theta_star);

/// The three-component regressor [1, 1 + 3 sin t, 1 + 3 cos t].
RegressorSignal make_reference_signal(const Vec& theta_star);

/// Windowed Gram matrix int_t^{t+T} phi phi^T ds by composite trapezoid.
/// The window is split into ceil(T / step) equal panels; the result is
/// symmetrized.
Mat pe_gram(const RegressorSignal& signal, double t, double window, double quadrature_step);

struct PEReport {
    double window_T = 0.0;
    double delta_hat = 0.0;  // min over scanned windows of lambda_min(gram)
    double M_hat = 0.0;      // max |phi| over the quadrature grid of the horizon
    double scan_horizon = 0.0;
    double quadrature_step = 0.0;
    int windows_scanned = 0;

    bool satisfied(double tolerance = 1e-10) const noexcept { return delta_hat > tolerance; }
};

/// Finite-horizon persistent-excitation scan. Windows start at
/// 0, scan_step, ..., scan_horizon - T. A zero scan_step selects T / 8.
PEReport check_pe(const RegressorSignal& signal, double window, double scan_horizon,
                  double scan_step = 0.0, double quadrature_step = 1e-3);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& symmetric);

}  // namespace hotune
