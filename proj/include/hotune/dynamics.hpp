#pragma once

#include "hotune/databuffer.hpp"
#include "hotune/signals.hpp"
#include "hotune/types.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace hotune {

enum class SystemKind {
    basic,
    basic_cl,
    basic_normalized,
    basic_normalized_cl,
    ht,
    ht_normalized,
    ht_cl,
    ht_normalized_cl,
    ht_b,
    ht_cl_softreset,
    ht_normalized_cl_softreset,
};

inline constexpr std::array<SystemKind, 11> kAllSystemKinds = {
    SystemKind::basic,           SystemKind::basic_cl,
    SystemKind::basic_normalized, SystemKind::basic_normalized_cl,
    SystemKind::ht,              SystemKind::ht_normalized,
    SystemKind::ht_cl,           SystemKind::ht_normalized_cl,
    SystemKind::ht_b,            SystemKind::ht_cl_softreset,
    SystemKind::ht_normalized_cl_softreset,
};

std::string_view to_string(SystemKind kind);
std::optional<SystemKind> parse_system_kind(std::string_view name);

/// Kinds that read the recorded data buffer (B-term).
bool uses_buffer(SystemKind kind);
/// Gradient baselines: theta evolves, vartheta is carried unchanged.
bool is_theta_only(SystemKind kind);
bool is_soft_reset(SystemKind kind);
bool is_high_order(SystemKind kind);
/// Kinds whose stability theorem needs beta >= 2 gamma / mu.
bool needs_gain_condition(SystemKind kind);

/// Scalar gains. Construction validates signs and records whether the
/// high-order stability condition beta >= 2 gamma / mu holds; violating it
/// only raises `gain_condition_warning`.
struct Gains {
    double beta = 1.0;
    double gamma = 0.1;
    double mu = 0.2;
    double beta_r = 0.0;
    bool gain_condition_warning = false;

    Gains() = default;
    Gains(double beta, double gamma, double mu, double beta_r = 0.0);

    bool gain_condition_holds() const noexcept { return !gain_condition_warning; }
};

struct TunerState {
    Vec theta;
    Vec vartheta;

    static TunerState at(const Vec& theta) { return {theta, theta}; }
};

/// 1 + mu |phi|^2
double normalization(const Vec& phi, double mu);

/// Gradient of L_t(theta) = (phi^T theta - y*)^2 / 2.
Vec grad_L(const Vec& phi, double y_star, const Vec& theta);

/// Right-hand side for every non-reset kind. `buffer` is read only for the
/// concurrent-learning kinds and must be nonempty for them.
TunerState field(SystemKind kind, const TunerState& state, double t,
                 const RegressorSignal& signal, const DataBuffer& buffer, const Gains& gains);

/// Same, with phi(t) and y*(t) already evaluated. Dispatches soft-reset kinds
/// to field_softreset_at.
TunerState field_at(SystemKind kind, const TunerState& state, const RegressorSample& sample,
                    const DataBuffer& buffer, const Gains& gains);

/// <vartheta - theta, grad L_t(theta)>, divided by N_t for the normalized
/// reset variant.
double reset_indicator(SystemKind kind, const TunerState& state, double t,
                       const RegressorSignal& signal, double mu);
double reset_indicator_at(SystemKind kind, const TunerState& state, const RegressorSample& sample,
                          double mu);

/// Selected element of the soft-reset inclusion. SGN(0) is taken as -1, so
/// the reset term is inactive on the switching surface.
TunerState field_softreset(SystemKind kind, const TunerState& state, double t,
                           const RegressorSignal& signal, const DataBuffer& buffer,
                           const Gains& gains);
TunerState field_softreset_at(SystemKind kind, const TunerState& state,
                              const RegressorSample& sample, const DataBuffer& buffer,
                              const Gains& gains);

}  // namespace hotune
