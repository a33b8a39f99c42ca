#pragma once

#include "hotune/certificates.hpp"
#include "hotune/databuffer.hpp"
#include "hotune/dynamics.hpp"
#include "hotune/integrator.hpp"
#include "hotune/signals.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hotune {

struct ClSpec {
    double epsilon = 1.0;
    int n_bar = 10;
    bool online = true;
    /// Offline mode: the buffer is sampled from the signal at these times.
    std::vector<double> buffer_times;
};

struct InitSpec {
    enum class Mode { fixed, random };
    Mode mode = Mode::random;
    std::optional<Vec> theta0;
    double range = 5.0;
};

/// One experiment: a signal, shared gains and a list of systems to compare.
/// Every system starts from vartheta(0) = theta(0).
struct Scenario {
    std::string name = "scenario";
    std::vector<SystemKind> systems;
    SinusoidMix signal;
    Gains gains;
    SimConfig sim;
    ClSpec cl;
    InitSpec init;

    RegressorSignal make_signal() const { return RegressorSignal(signal); }
};

/// JSON scenario text. Unknown keys and type errors raise ConfigError naming
/// the key path (e.g. `gains.beta`).
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> step;
    std::optional<double> t_end;
    std::optional<SystemKind> system;
};

/// Applies CLI overrides; a `system` filter must name a system of the scenario.
void apply_overrides(Scenario& scenario, const Overrides& overrides);

TunerState initial_state(const Scenario& scenario);

/// Buffer sampled at cl.buffer_times (offline concurrent learning).
DataBuffer prefilled_buffer(const Scenario& scenario, const RegressorSignal& signal);

struct SystemRun {
    SystemKind kind = SystemKind::basic;
    Trajectory trajectory;
    DataBuffer buffer;
    std::optional<double> freeze_time;
};

/// Simulates every system of the scenario (in parallel; results are
/// independent of scheduling). Lyapunov values are attached to high-order
/// trajectories.
std::vector<SystemRun> run_systems(const Scenario& scenario);

inline constexpr std::array<double, 3> kThresholds = {1e-1, 1e-2, 1e-3};

/// First time, measured from the first row, at which err_norm falls to
/// `fraction` times its initial value.
std::optional<double> time_to_threshold(const Trajectory& trajectory, double fraction);

struct ComparisonRow {
    SystemKind kind = SystemKind::basic;
    double initial_err = 0.0;
    double final_err = 0.0;
    std::array<std::optional<double>, 3> time_to{};
    std::optional<DecayFit> decay;
    std::optional<double> buffer_fill_time;
};

struct ComparisonReport {
    std::string scenario;
    std::vector<ComparisonRow> rows;

    const ComparisonRow* find(SystemKind kind) const;
    void write_csv(std::ostream& os) const;
};

ComparisonReport compare(const Scenario& scenario, const std::vector<SystemRun>& runs);

/// Runs the scenario and writes `<name>_<system>.csv` per system,
/// `<name>_<system>_buffer.csv` for buffered systems and `<name>_report.csv`.
ComparisonReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir,
                              bool gnuplot_script = false);

struct CertificateBundle {
    std::vector<CertificateReport> reports;
    bool passed() const;
    void write_csv(std::ostream& os) const;
};

/// Pointwise, trajectory and Matrosov checks for every system of the
/// scenario that has a certificate. Throws PreconditionError when a system's
/// theorem needs beta >= 2 gamma / mu and the gains do not satisfy it.
CertificateBundle run_certificates(const Scenario& scenario, int pointwise_samples = 10000);

/// PE scan of the scenario signal over one period window. A zero horizon
/// selects two periods.
PEReport pe_check(const Scenario& scenario, double horizon = 0.0);

}  // namespace hotune
