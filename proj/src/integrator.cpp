#include "hotune/integrator.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace hotune {

namespace {

bool finite(const TunerState& s) { return s.theta.allFinite() && s.vartheta.allFinite(); }

TrajectoryRow make_row(double t, const TunerState& x, const Vec& theta_star, int n_samples) {
    TrajectoryRow row;
    row.t = t;
    row.theta = x.theta;
    row.vartheta = x.vartheta;
    row.err_norm = (x.theta - theta_star).norm();
    row.p_norm = (x.vartheta - x.theta).norm();
    row.n_samples = n_samples;
    return row;
}

void validate(const RegressorSignal& signal, const SimConfig& sim, const TunerState& init) {
    const int n = signal.dimension();
    if (init.theta.size() != n || init.vartheta.size() != n) {
        throw ConfigError("init", "initial state dimension does not match the signal");
    }
    if (!(sim.step_h > 0.0)) throw ConfigError("step", "must be positive");
    if (sim.record_every < 1) throw ConfigError("record_every", "must be at least 1");
    if (!(sim.t_start >= 0.0)) throw ConfigError("t_start", "must be nonnegative");
    if (!(sim.t_end >= sim.t_start)) throw ConfigError("t_end", "must not precede t_start");
}

// Shared Euler loop. `online` selects per-step recording into `buffer`.
SimResult run(SystemKind kind, const RegressorSignal& signal, const Gains& gains,
              const SimConfig& sim, const TunerState& init, DataBuffer buffer, bool online) {
    validate(signal, sim, init);
    const long steps = sim.step_count();
    const Vec& theta_star = signal.theta_star();

    SimResult out;
    out.trajectory.dimension = signal.dimension();
    out.trajectory.rows.reserve(static_cast<std::size_t>(steps / sim.record_every + 1));

    TunerState x = init;
    for (long k = 0;; ++k) {
        const double t = sim.t_start + sim.step_h * static_cast<double>(k);
        const RegressorSample sample = signal.eval(t);
        if (online && buffer.try_record(t, sample.phi, sample.y_star) && buffer.frozen()) {
            out.freeze_time = t;
        }
        if (k % sim.record_every == 0) {
            out.trajectory.rows.push_back(make_row(t, x, theta_star, buffer.size()));
        }
        if (k == steps) break;

        const TunerState d = field_at(kind, x, sample, buffer, gains);
        x.theta += sim.step_h * d.theta;
        x.vartheta += sim.step_h * d.vartheta;
        if (!finite(x)) {
            std::ostringstream msg;
            msg << to_string(kind) << ": non-finite state at t = "
                << sim.t_start + sim.step_h * static_cast<double>(k + 1);
            throw NumericAbort(msg.str());
        }
    }
    out.buffer = std::move(buffer);
    return out;
}

}  // namespace

long SimConfig::step_count() const {
    const double span = (t_end - t_start) / step_h;
    if (!(span >= 0.0) || span > static_cast<double>(std::numeric_limits<long>::max() / 2)) {
        throw ConfigError("t_end", "horizon does not fit the step counter");
    }
    return std::lround(span);
}

bool Trajectory::has_lyapunov() const {
    return !rows.empty() && rows.front().V.has_value();
}

void Trajectory::write_csv(std::ostream& os) const {
    const bool with_v = has_lyapunov();
    os << 't';
    for (int i = 1; i <= dimension; ++i) os << ",theta_" << i;
    for (int i = 1; i <= dimension; ++i) os << ",vartheta_" << i;
    os << ",err_norm,p_norm,n_samples";
    if (with_v) os << ",V";
    os << '\n';

    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
        os << r.t;
        for (int i = 0; i < dimension; ++i) os << ',' << r.theta[i];
        for (int i = 0; i < dimension; ++i) os << ',' << r.vartheta[i];
        os << ',' << r.err_norm << ',' << r.p_norm << ',' << r.n_samples;
        if (with_v) os << ',' << r.V.value_or(std::numeric_limits<double>::quiet_NaN());
        os << '\n';
    }
    os.precision(old_precision);
}

SimResult simulate(SystemKind kind, const RegressorSignal& signal, const Gains& gains,
                   const SimConfig& sim, const TunerState& init, bool cl_online, double epsilon,
                   int n_bar) {
    if (uses_buffer(kind) && !cl_online) {
        throw std::invalid_argument(
            "simulate: concurrent-learning kind without online recording needs "
            "simulate_with_buffer");
    }
    const bool online = cl_online && uses_buffer(kind);
    DataBuffer buffer = online ? DataBuffer(signal.dimension(), n_bar, epsilon) : DataBuffer();
    return run(kind, signal, gains, sim, init, std::move(buffer), online);
}

Trajectory simulate_with_buffer(SystemKind kind, const RegressorSignal& signal, const Gains& gains,
                                const SimConfig& sim, const TunerState& init,
                                const DataBuffer& buffer) {
    if (buffer.empty()) throw std::invalid_argument("simulate_with_buffer: empty data buffer");
    if (buffer.dimension() != signal.dimension()) {
        throw ConfigError("buffer", "dimension does not match the signal");
    }
    return run(kind, signal, gains, sim, init, buffer, false).trajectory;
}

TunerState random_initial_state(int dimension, double range, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Vec theta(dimension);
    for (int i = 0; i < dimension; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        theta[i] = range * (2.0 * u - 1.0);
    }
    return TunerState::at(theta);
}

}  // namespace hotune
