#pragma once

#include "hotune/databuffer.hpp"
#include "hotune/dynamics.hpp"
#include "hotune/signals.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace hotune {

struct SimConfig {
    double step_h = 1e-3;
    double t_start = 0.0;
    double t_end = 100.0;
    int record_every = 1;
    std::uint64_t seed = 0;

    /// Number of Euler steps between t_start and t_end.
    long step_count() const;
};

struct TrajectoryRow {
    double t = 0.0;
    Vec theta;
    Vec vartheta;
    double err_norm = 0.0;  // |theta - theta*|
    double p_norm = 0.0;    // |vartheta - theta|
    int n_samples = 0;      // buffer size N(t) in effect for the step leaving t
    std::optional<double> V;
};

struct Trajectory {
    int dimension = 0;
    std::vector<TrajectoryRow> rows;

    bool has_lyapunov() const;
    /// Header `t,theta_1..,vartheta_1..,err_norm,p_norm,n_samples[,V]` with
    /// round-trip double formatting.
    void write_csv(std::ostream& os) const;
};

struct SimResult {
    Trajectory trajectory;
    DataBuffer buffer;
    /// Time at which the online buffer reached capacity.
    std::optional<double> freeze_time;
};

/// Explicit Euler run. Each step evaluates the signal, applies the online
/// recording criterion (concurrent-learning kinds with `cl_online`), then
/// advances x <- x + h f(x, t) with the buffer as it stands after recording.
/// Rows are kept every `record_every` steps.
SimResult simulate(SystemKind kind, const RegressorSignal& signal, const Gains& gains,
                   const SimConfig& sim, const TunerState& init, bool cl_online, double epsilon,
                   int n_bar);

/// Euler run with a fixed, externally supplied buffer.
Trajectory simulate_with_buffer(SystemKind kind, const RegressorSignal& signal, const Gains& gains,
                                const SimConfig& sim, const TunerState& init,
                                const DataBuffer& buffer);

/// theta(0) uniform on [-range, range]^n from a seeded 64-bit Mersenne
/// twister (53-bit mantissa draws, portable across standard libraries);
/// vartheta(0) = theta(0).
TunerState random_initial_state(int dimension, double range, std::uint64_t seed);

}  // namespace hotune
