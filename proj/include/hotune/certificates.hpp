#pragma once

#include "hotune/databuffer.hpp"
#include "hotune/dynamics.hpp"
#include "hotune/integrator.hpp"
#include "hotune/signals.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hotune {

/// theta_tilde = theta - theta*, p = vartheta - theta.
struct ErrorCoords {
    Vec theta_tilde;
    Vec p;

    static ErrorCoords from_state(const TunerState& x, const Vec& theta_star);
    TunerState to_state(const Vec& theta_star) const;
    double norm() const;
};

double v0(const ErrorCoords& err, double gamma);
/// v0 + (2 / beta) theta_tilde^T P theta_tilde
double v_cl(const ErrorCoords& err, const Gains& gains, const Mat& p_mu);
/// |theta_tilde + p|^2 / 2 + |p|^2 / 2 + (gamma / beta) theta_tilde^T P theta_tilde
double v_b(const ErrorCoords& err, const Gains& gains, const Mat& p_mu);

enum class LyapunovForm { v0, v_cl, v_b };

/// Certificate attached to each high-order kind; none for the gradient
/// baselines.
std::optional<LyapunovForm> lyapunov_form(SystemKind kind);

/// Value of `form` at `err`. `p_mu` is ignored for v0.
double lyapunov_value(LyapunovForm form, const ErrorCoords& err, const Gains& gains,
                      const Mat& p_mu);

/// Time derivative of the error coordinates, obtained from the original
/// field at (theta* + theta_tilde, theta* + theta_tilde + p).
ErrorCoords error_field(SystemKind kind, const ErrorCoords& err, const RegressorSample& sample,
                        const Vec& theta_star, const DataBuffer& buffer, const Gains& gains);

/// <grad V(err), error_field> with the closed-form gradient of V.
double lyapunov_derivative(SystemKind kind, const ErrorCoords& err, const RegressorSample& sample,
                           const Vec& theta_star, const DataBuffer& buffer, const Gains& gains);

/// Upper bound on the Lyapunov derivative established for `kind`.
/// `M` bounds |phi| and enters only the normalized concurrent-learning bound.
double decrease_bound(SystemKind kind, const ErrorCoords& err, const RegressorSample& sample,
                      const Gains& gains, const Mat& p_mu, double M);

struct CertificateReport {
    std::string label;
    long checked = 0;
    long violations = 0;
    double worst_margin = 0.0;  // max of (lhs - rhs); <= tolerance means pass
    double tolerance = 0.0;
    long skipped = 0;
    /// Whether the certified bound is negative definite (strict decrease
    /// away from the origin). Only meaningful for the data-driven kinds.
    bool strict = false;

    bool passed() const noexcept { return violations == 0; }
};

/// `checked,violations,worst_margin,tolerance` plus a label column.
void write_reports_csv(std::ostream& os, std::span<const CertificateReport> reports);

struct PointwiseOptions {
    int sample_count = 10000;
    double radius = 1.0;
    std::uint64_t seed = 1;
    double t_max = 100.0;
    double t_grid = 1e-3;
    double tolerance = 1e-9;
    /// Bound on |phi|; required by ht_normalized_cl. Zero means "scan the
    /// signal over [0, t_max] on t_grid".
    double M = 0.0;
};

/// Samples (err, t) with |err| <= radius and t on a grid and checks the
/// analytic Lyapunov derivative against the certified bound. Throws
/// PreconditionError when the kind's theorem needs beta >= 2 gamma / mu and
/// the gains violate it; std::invalid_argument for kinds without a bound.
CertificateReport check_decrease_pointwise(SystemKind kind, const RegressorSignal& signal,
                                           const DataBuffer& buffer, const Gains& gains,
                                           const PointwiseOptions& options = {});

/// V evaluated on every row. Concurrent-learning kinds use P_mu of the
/// first n_samples recorded samples of `buffer` on each row.
std::vector<double> lyapunov_values(const Trajectory& trajectory, SystemKind kind,
                                    const Gains& gains, const Vec& theta_star,
                                    const DataBuffer& buffer);

/// Fills TrajectoryRow::V from lyapunov_values.
void attach_lyapunov(Trajectory& trajectory, SystemKind kind, const Gains& gains,
                     const Vec& theta_star, const DataBuffer& buffer);

/// Flags consecutive rows where V grows by more than
/// slack_c * h * steps * (1 + V). Intervals across which the buffer size
/// changes are a switch of the certificate itself and are counted as skipped.
CertificateReport check_decrease_along(const Trajectory& trajectory,
                                       std::span<const double> v_values, double step_h,
                                       double slack_c = 10.0);

/// Weight matrix int_t^{t+L} exp(t - tau) phi(tau) phi(tau)^T dtau.
Mat matrosov_weight(const RegressorSignal& signal, double t, double truncation,
                    double quadrature_step = 1e-3);

/// -theta_tilde^T W(t) theta_tilde.
double matrosov_v1(const RegressorSignal& signal, const Vec& theta_tilde, double t,
                   double truncation = 30.0, double quadrature_step = 1e-3);

struct MatrosovOptions {
    SystemKind kind = SystemKind::ht;  // ht or ht_normalized
    double T = 0.0;
    double delta = 0.0;
    double M = 0.0;
    double truncation = 30.0;
    int sample_count = 1000;
    std::uint64_t seed = 1;
    double radius = 1.0;
    double t_max = 100.0;
    int time_points = 32;
    double quadrature_step = 1e-3;
    double tolerance = 1e-9;
    /// Coefficient of |theta_tilde||p| in Y1. Defaults to
    /// 2 beta M^2 (1 + mu M^2) for ht and 2 beta M^2 for ht_normalized.
    std::optional<double> cross_coeff;
};

struct MatrosovReport {
    CertificateReport bound;       // V1 <= -exp(-T) delta |theta_tilde|^2
    CertificateReport chain;       // p = 0, e_y = 0  =>  Y1 <= 0
    CertificateReport derivative;  // dV1/dt along the flow <= Y1
    double cross_coeff = 0.0;

    bool passed() const noexcept {
        return bound.passed() && chain.passed() && derivative.passed();
    }
};

MatrosovReport matrosov_check(const RegressorSignal& signal, const Gains& gains,
                              const MatrosovOptions& options);

struct DecayFit {
    double alpha = 0.0;      // fitted rate, 1/s
    double c = 0.0;          // prefactor
    double r_squared = 0.0;  // fit quality of log-envelope vs t
    int rows_used = 0;
};

/// Least-squares fit of log(envelope) against t, where the envelope is the
/// running maximum of the error over the following `envelope_window` seconds.
/// Rows before skip_fraction of the record, rows with error below 1e-13 and
/// rows whose window runs past the end are excluded.
DecayFit fit_decay(std::span<const double> t, std::span<const double> err, double skip_fraction,
                   double envelope_window);

DecayFit estimate_decay_rate(const Trajectory& trajectory, double skip_fraction,
                             double envelope_window);

}  // namespace hotune
