#include "hotune/dynamics.hpp"

#include <cmath>
#include <string>

namespace hotune {

namespace {

constexpr std::array<std::string_view, 11> kNames = {
    "basic",         "basic_cl",         "basic_normalized", "basic_normalized_cl",
    "ht",            "ht_normalized",    "ht_cl",            "ht_normalized_cl",
    "ht_b",          "ht_cl_softreset",  "ht_normalized_cl_softreset",
};

void require_buffer(SystemKind kind, const DataBuffer& buffer) {
    if (uses_buffer(kind) && buffer.empty()) {
        throw std::invalid_argument(std::string(to_string(kind)) + ": empty data buffer");
    }
}

}  // namespace

std::string_view to_string(SystemKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

std::optional<SystemKind> parse_system_kind(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return kAllSystemKinds[i];
    }
    return std::nullopt;
}

bool uses_buffer(SystemKind kind) {
    switch (kind) {
        case SystemKind::basic_cl:
        case SystemKind::basic_normalized_cl:
        case SystemKind::ht_cl:
        case SystemKind::ht_normalized_cl:
        case SystemKind::ht_b:
        case SystemKind::ht_cl_softreset:
        case SystemKind::ht_normalized_cl_softreset:
            return true;
        default:
            return false;
    }
}

bool is_theta_only(SystemKind kind) {
    switch (kind) {
        case SystemKind::basic:
        case SystemKind::basic_cl:
        case SystemKind::basic_normalized:
        case SystemKind::basic_normalized_cl:
            return true;
        default:
            return false;
    }
}

bool is_soft_reset(SystemKind kind) {
    return kind == SystemKind::ht_cl_softreset || kind == SystemKind::ht_normalized_cl_softreset;
}

bool is_high_order(SystemKind kind) { return !is_theta_only(kind); }

bool needs_gain_condition(SystemKind kind) {
    return is_high_order(kind) && kind != SystemKind::ht_b;
}

Gains::Gains(double beta_, double gamma_, double mu_, double beta_r_)
    : beta(beta_), gamma(gamma_), mu(mu_), beta_r(beta_r_) {
    if (!(beta > 0.0)) throw ConfigError("beta", "must be positive");
    if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
    if (!(mu >= 0.0)) throw ConfigError("mu", "must be nonnegative");
    if (!(beta_r >= 0.0)) throw ConfigError("beta_r", "must be nonnegative");
    // beta * mu >= 2 gamma avoids the division when mu == 0.
    gain_condition_warning = beta * mu < 2.0 * gamma * (1.0 - 1e-12);
}

double normalization(const Vec& phi, double mu) { return 1.0 + mu * phi.squaredNorm(); }

Vec grad_L(const Vec& phi, double y_star, const Vec& theta) {
    return phi * (phi.dot(theta) - y_star);
}

TunerState field(SystemKind kind, const TunerState& state, double t,
                 const RegressorSignal& signal, const DataBuffer& buffer, const Gains& gains) {
    if (is_soft_reset(kind)) {
        throw std::invalid_argument("field: soft-reset kinds are evaluated by field_softreset");
    }
    return field_at(kind, state, signal.eval(t), buffer, gains);
}

TunerState field_at(SystemKind kind, const TunerState& state, const RegressorSample& sample,
                    const DataBuffer& buffer, const Gains& gains) {
    if (is_soft_reset(kind)) return field_softreset_at(kind, state, sample, buffer, gains);
    require_buffer(kind, buffer);

    const Vec& theta = state.theta;
    const double nt = normalization(sample.phi, gains.mu);
    const Vec grad = grad_L(sample.phi, sample.y_star, theta);
    const auto n = theta.size();

    TunerState d{Vec::Zero(n), Vec::Zero(n)};
    switch (kind) {
        case SystemKind::basic:
            d.theta = -grad;
            break;
        case SystemKind::basic_cl:
            d.theta = -gains.gamma * (grad + b_term(buffer, theta, 0.0));
            break;
        case SystemKind::basic_normalized:
            d.theta = -(gains.gamma / nt) * grad;
            break;
        case SystemKind::basic_normalized_cl:
            d.theta = -gains.gamma * (grad / nt + b_term(buffer, theta, gains.mu));
            break;
        case SystemKind::ht:
            d.theta = -gains.beta * nt * (theta - state.vartheta);
            d.vartheta = -gains.gamma * grad;
            break;
        case SystemKind::ht_normalized:
            d.theta = -gains.beta * (theta - state.vartheta);
            d.vartheta = -(gains.gamma / nt) * grad;
            break;
        case SystemKind::ht_cl:
            d.theta = -gains.beta * nt * (theta - state.vartheta);
            d.vartheta = -gains.gamma * (grad + nt * b_term(buffer, theta, gains.mu));
            break;
        case SystemKind::ht_normalized_cl:
            d.theta = -gains.beta * (theta - state.vartheta);
            d.vartheta = -gains.gamma * (grad / nt + b_term(buffer, theta, gains.mu));
            break;
        case SystemKind::ht_b:
            d.theta = -gains.beta * (theta - state.vartheta);
            d.vartheta = -gains.gamma * b_term(buffer, theta, gains.mu);
            break;
        case SystemKind::ht_cl_softreset:
        case SystemKind::ht_normalized_cl_softreset:
            break;  // unreachable, dispatched above
    }
    return d;
}

double reset_indicator_at(SystemKind kind, const TunerState& state, const RegressorSample& sample,
                          double mu) {
    const double inner =
        (state.vartheta - state.theta).dot(grad_L(sample.phi, sample.y_star, state.theta));
    switch (kind) {
        case SystemKind::ht_cl_softreset:
            return inner;
        case SystemKind::ht_normalized_cl_softreset:
            return inner / normalization(sample.phi, mu);
        default:
            throw std::invalid_argument("reset_indicator: not a soft-reset kind");
    }
}

double reset_indicator(SystemKind kind, const TunerState& state, double t,
                       const RegressorSignal& signal, double mu) {
    return reset_indicator_at(kind, state, signal.eval(t), mu);
}

TunerState field_softreset_at(SystemKind kind, const TunerState& state,
                              const RegressorSample& sample, const DataBuffer& buffer,
                              const Gains& gains) {
    const bool normalized = kind == SystemKind::ht_normalized_cl_softreset;
    if (!is_soft_reset(kind)) throw std::invalid_argument("field_softreset: not a soft-reset kind");
    require_buffer(kind, buffer);

    TunerState d = field_at(normalized ? SystemKind::ht_normalized_cl : SystemKind::ht_cl, state,
                            sample, buffer, gains);
    if (gains.beta_r == 0.0) return d;

    const double indicator = reset_indicator_at(kind, state, sample, gains.mu);
    // SGN(s) + 1 is 2 for s > 0 and 0 otherwise under the SGN(0) = -1 selection.
    if (indicator > 0.0) {
        const double scale = normalized ? 1.0 : normalization(sample.phi, gains.mu);
        d.theta -= (2.0 * gains.beta_r * scale) * (state.theta - state.vartheta);
    }
    return d;
}

TunerState field_softreset(SystemKind kind, const TunerState& state, double t,
                           const RegressorSignal& signal, const DataBuffer& buffer,
                           const Gains& gains) {
    return field_softreset_at(kind, state, signal.eval(t), buffer, gains);
}

}  // namespace hotune
