// Command-line scenario runner: simulate, certify and PE-check scenarios.

#include "hotune/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericAbort = 3, kCertificateViolation = 4 };

struct CommonArgs {
    std::string config;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> step;
    std::optional<double> t_end;
    std::optional<std::string> system;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("config", a.config, "Scenario file (JSON)")->required();
    sub->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", a.seed, "Override sim.seed");
    sub->add_option("--step", a.step, "Override the Euler step");
    sub->add_option("--t-end", a.t_end, "Override sim.t_end");
    sub->add_option("--system", a.system, "Only run this system");
}

hotune::Scenario load(const CommonArgs& a) {
    hotune::Scenario s = hotune::load_scenario(a.config);
    hotune::Overrides o;
    o.seed = a.seed;
    o.step = a.step;
    o.t_end = a.t_end;
    if (a.system) {
        o.system = hotune::parse_system_kind(*a.system);
        if (!o.system) throw hotune::ConfigError("--system", "unknown system " + *a.system);
    }
    hotune::apply_overrides(s, o);
    for (auto kind : s.systems) {
        if (hotune::needs_gain_condition(kind) && s.gains.gain_condition_warning) {
            std::cerr << "warning: " << hotune::to_string(kind)
                      << " runs with beta < 2 gamma / mu; stability is not certified\n";
        }
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-order tuner simulation and certificate checks"};
    app.require_subcommand(1);

    CommonArgs run_args, cert_args, pe_args;
    bool gnuplot = false;
    int samples = 10000;
    double horizon = 0.0;

    auto* run = app.add_subcommand("run", "Simulate every system and write trajectories + report");
    add_common(run, run_args);
    run->add_flag("--gnuplot", gnuplot, "Also write a gnuplot script");

    auto* certify = app.add_subcommand("certify", "Check Lyapunov/Matrosov certificates");
    add_common(certify, cert_args);
    certify->add_option("--samples", samples, "Pointwise samples per system")->capture_default_str();

    auto* pe = app.add_subcommand("pe-check", "Scan the scenario regressor for persistent excitation");
    add_common(pe, pe_args);
    pe->add_option("--horizon", horizon, "Scan horizon in seconds (default: two periods)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto s = load(run_args);
            const auto report = hotune::run_scenario(s, run_args.out_dir, gnuplot);
            report.write_csv(std::cout);
        } else if (*certify) {
            const auto s = load(cert_args);
            const auto bundle = hotune::run_certificates(s, samples);
            bundle.write_csv(std::cout);
            for (const auto& r : bundle.reports) {
                const auto colon = r.label.find(':');
                const auto kind = hotune::parse_system_kind(r.label.substr(0, colon));
                if (kind && hotune::uses_buffer(*kind) && r.label.ends_with(":pointwise") && !r.strict) {
                    std::cerr << r.label << ": recorded data is not sufficiently rich; "
                              << "the decrease bound is only semidefinite\n";
                }
            }
            if (!bundle.passed()) return kCertificateViolation;
        } else if (*pe) {
            const auto s = load(pe_args);
            const auto r = hotune::pe_check(s, horizon);
            std::cout << "window_T,delta_hat,M_hat,scan_horizon,quadrature_step,windows,satisfied\n"
                      << r.window_T << ',' << r.delta_hat << ',' << r.M_hat << ',' << r.scan_horizon
                      << ',' << r.quadrature_step << ',' << r.windows_scanned << ','
                      << (r.satisfied() ? "true" : "false") << '\n';
        }
    } catch (const hotune::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const hotune::PreconditionError& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return kConfigError;
    } catch (const hotune::NumericAbort& e) {
        std::cerr << "numeric abort: " << e.what() << '\n';
        return kNumericAbort;
    }
    return kOk;
}
