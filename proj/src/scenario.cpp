#include "hotune/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace hotune {

namespace {

using nlohmann::json;

// Strict object reader: every key must be consumed, otherwise the first
// unknown key is reported.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    bool has(const std::string& k) const { return j_.contains(k); }

    const json& at(const std::string& k) {
        seen_.insert(k);
        if (!j_.contains(k)) throw ConfigError(key(k), "missing required key");
        return j_.at(k);
    }

    double number(const std::string& k) {
        const json& v = at(k);
        if (!v.is_number()) throw ConfigError(key(k), "expected a number");
        return v.get<double>();
    }

    double number_or(const std::string& k, double fallback) { return has(k) ? number(k) : fallback; }

    long integer_or(const std::string& k, long fallback) {
        if (!has(k)) return fallback;
        const json& v = at(k);
        if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer");
        return v.get<long>();
    }

    bool boolean_or(const std::string& k, bool fallback) {
        if (!has(k)) return fallback;
        const json& v = at(k);
        if (!v.is_boolean()) throw ConfigError(key(k), "expected true or false");
        return v.get<bool>();
    }

    std::string string_or(const std::string& k, const std::string& fallback) {
        if (!has(k)) return fallback;
        const json& v = at(k);
        if (!v.is_string()) throw ConfigError(key(k), "expected a string");
        return v.get<std::string>();
    }

    Vec vector(const std::string& k) {
        const json& v = at(k);
        if (!v.is_array()) throw ConfigError(key(k), "expected an array of numbers");
        Vec out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(key(k), "expected an array of numbers");
            out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require_dimension(const Vec& v, int n, const std::string& key) {
    if (v.size() != n) {
        throw ConfigError(key, "expected " + std::to_string(n) + " entries, got " +
                                   std::to_string(v.size()));
    }
}

SinusoidMix parse_signal(ObjectReader r) {
    const long n = r.integer_or("dimension", -1);
    if (n < 1) throw ConfigError(r.key("dimension"), "must be a positive integer");
    SinusoidMix m;
    m.offsets = r.vector("offsets");
    m.amplitudes = r.vector("amplitudes");
    m.frequencies = r.vector("frequencies");
    m.phases = r.vector("phases");
    m.theta_star = r.vector("theta_star");
    const int dim = static_cast<int>(n);
    require_dimension(m.offsets, dim, r.key("offsets"));
    require_dimension(m.amplitudes, dim, r.key("amplitudes"));
    require_dimension(m.frequencies, dim, r.key("frequencies"));
    require_dimension(m.phases, dim, r.key("phases"));
    require_dimension(m.theta_star, dim, r.key("theta_star"));
    r.finish();
    return m;
}

Gains parse_gains(ObjectReader r) {
    const Gains defaults;
    const double beta = r.number_or("beta", defaults.beta);
    const double gamma = r.number_or("gamma", defaults.gamma);
    const double mu = r.number_or("mu", defaults.mu);
    const double beta_r = r.number_or("beta_r", defaults.beta_r);
    r.finish();
    try {
        return Gains(beta, gamma, mu, beta_r);
    } catch (const ConfigError& e) {
        throw ConfigError(r.key(e.key()), "invalid value");
    }
}

SimConfig parse_sim(ObjectReader r) {
    SimConfig s;
    s.step_h = r.number_or("step", s.step_h);
    s.t_start = r.number_or("t_start", s.t_start);
    s.t_end = r.number_or("t_end", s.t_end);
    const long every = r.integer_or("record_every", s.record_every);
    const long seed = r.integer_or("seed", static_cast<long>(s.seed));
    r.finish();
    if (!(s.step_h > 0.0)) throw ConfigError(r.key("step"), "must be positive");
    if (!(s.t_start >= 0.0)) throw ConfigError(r.key("t_start"), "must be nonnegative");
    if (!(s.t_end >= s.t_start)) throw ConfigError(r.key("t_end"), "must not precede t_start");
    if (every < 1) throw ConfigError(r.key("record_every"), "must be at least 1");
    if (seed < 0) throw ConfigError(r.key("seed"), "must be nonnegative");
    s.record_every = static_cast<int>(every);
    s.seed = static_cast<std::uint64_t>(seed);
    return s;
}

ClSpec parse_cl(ObjectReader r) {
    ClSpec c;
    c.epsilon = r.number_or("epsilon", c.epsilon);
    const long n_bar = r.integer_or("N_bar", c.n_bar);
    c.online = r.boolean_or("online", c.online);
    if (r.has("buffer_times")) {
        const Vec times = r.vector("buffer_times");
        c.buffer_times.assign(times.data(), times.data() + times.size());
    }
    r.finish();
    if (!(c.epsilon > 0.0)) throw ConfigError(r.key("epsilon"), "must be positive");
    if (n_bar < 1) throw ConfigError(r.key("N_bar"), "must be a positive integer");
    c.n_bar = static_cast<int>(n_bar);
    return c;
}

InitSpec parse_init(ObjectReader r) {
    InitSpec i;
    const std::string mode = r.string_or("mode", "random");
    if (mode == "fixed") {
        i.mode = InitSpec::Mode::fixed;
    } else if (mode != "random") {
        throw ConfigError(r.key("mode"), "expected \"fixed\" or \"random\"");
    }
    if (r.has("theta0")) i.theta0 = r.vector("theta0");
    i.range = r.number_or("range", i.range);
    r.finish();
    if (i.mode == InitSpec::Mode::fixed && !i.theta0) {
        throw ConfigError(r.key("theta0"), "required when mode is \"fixed\"");
    }
    if (!(i.range > 0.0)) throw ConfigError(r.key("range"), "must be positive");
    return i;
}

std::string csv_name(const Scenario& s, SystemKind kind, const std::string& suffix = "") {
    return s.name + "_" + std::string(to_string(kind)) + suffix + ".csv";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_gnuplot(const Scenario& s, const std::filesystem::path& dir) {
    std::ostringstream g;
    const int err_col = 2 + 2 * s.signal.offsets.size();
    g << "set logscale y\nset xlabel 't'\nset ylabel '|theta - theta*|'\nset datafile separator ','\n"
      << "plot ";
    for (std::size_t i = 0; i < s.systems.size(); ++i) {
        if (i) g << ", \\\n     ";
        g << "'" << csv_name(s, s.systems[i]) << "' every ::1 using 1:" << err_col
          << " with lines title '" << to_string(s.systems[i]) << "'";
    }
    g << '\n';
    write_file(dir / (s.name + ".gp"), g.str());
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    ObjectReader root(j, "");
    Scenario s;
    s.name = root.string_or("name", s.name);
    if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("name", "must be a nonempty file-name-safe string");
    }

    const json& systems = root.at("systems");
    if (!systems.is_array() || systems.empty()) {
        throw ConfigError("systems", "expected a nonempty array of system names");
    }
    for (const auto& item : systems) {
        const auto kind = item.is_string() ? parse_system_kind(item.get<std::string>()) : std::nullopt;
        if (!kind) throw ConfigError("systems", "unknown system " + item.dump());
        if (std::find(s.systems.begin(), s.systems.end(), *kind) != s.systems.end()) {
            throw ConfigError("systems", "duplicate system " + item.dump());
        }
        s.systems.push_back(*kind);
    }

    s.signal = parse_signal(ObjectReader(root.at("signal"), "signal"));
    if (root.has("gains")) s.gains = parse_gains(ObjectReader(root.at("gains"), "gains"));
    if (root.has("sim")) s.sim = parse_sim(ObjectReader(root.at("sim"), "sim"));
    if (root.has("cl")) s.cl = parse_cl(ObjectReader(root.at("cl"), "cl"));
    if (root.has("init")) s.init = parse_init(ObjectReader(root.at("init"), "init"));
    root.finish();

    const int n = static_cast<int>(s.signal.offsets.size());
    if (s.init.theta0) require_dimension(*s.init.theta0, n, "init.theta0");
    const bool any_cl = std::any_of(s.systems.begin(), s.systems.end(), uses_buffer);
    if (any_cl) {
        if (s.cl.online && s.cl.n_bar < n) throw ConfigError("cl.N_bar", "must be at least the dimension");
        if (!s.cl.online && s.cl.buffer_times.empty()) {
            throw ConfigError("cl.buffer_times", "required when cl.online is false");
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

void apply_overrides(Scenario& s, const Overrides& o) {
    if (o.seed) s.sim.seed = *o.seed;
    if (o.step) {
        if (!(*o.step > 0.0)) throw ConfigError("--step", "must be positive");
        s.sim.step_h = *o.step;
    }
    if (o.t_end) {
        if (!(*o.t_end >= s.sim.t_start)) throw ConfigError("--t-end", "must not precede t_start");
        s.sim.t_end = *o.t_end;
    }
    if (o.system) {
        if (std::find(s.systems.begin(), s.systems.end(), *o.system) == s.systems.end()) {
            throw ConfigError("--system", std::string(to_string(*o.system)) + " is not in the scenario");
        }
        s.systems = {*o.system};
    }
}

TunerState initial_state(const Scenario& s) {
    const int n = static_cast<int>(s.signal.offsets.size());
    if (s.init.mode == InitSpec::Mode::fixed) return TunerState::at(*s.init.theta0);
    return random_initial_state(n, s.init.range, s.sim.seed);
}

DataBuffer prefilled_buffer(const Scenario& s, const RegressorSignal& signal) {
    std::vector<DataSample> samples;
    for (double t : s.cl.buffer_times) {
        const auto e = signal.eval(t);
        samples.push_back({t, e.phi, e.y_star});
    }
    return DataBuffer::from_samples(signal.dimension(), std::move(samples));
}

std::vector<SystemRun> run_systems(const Scenario& s) {
    const RegressorSignal signal = s.make_signal();
    const TunerState init = initial_state(s);
    const DataBuffer offline =
        (!s.cl.online && !s.cl.buffer_times.empty()) ? prefilled_buffer(s, signal) : DataBuffer();

    auto one = [&](SystemKind kind) {
        SystemRun run;
        run.kind = kind;
        if (uses_buffer(kind) && !s.cl.online) {
            run.trajectory = simulate_with_buffer(kind, signal, s.gains, s.sim, init, offline);
            run.buffer = offline;
        } else {
            SimResult r = simulate(kind, signal, s.gains, s.sim, init, s.cl.online, s.cl.epsilon, s.cl.n_bar);
            run.trajectory = std::move(r.trajectory);
            run.buffer = std::move(r.buffer);
            run.freeze_time = r.freeze_time;
        }
        if (lyapunov_form(kind)) {
            attach_lyapunov(run.trajectory, kind, s.gains, signal.theta_star(), run.buffer);
        }
        return run;
    };

    std::vector<std::future<SystemRun>> jobs;
    for (SystemKind kind : s.systems) jobs.push_back(std::async(std::launch::async, one, kind));
    std::vector<SystemRun> runs;
    for (auto& j : jobs) runs.push_back(j.get());
    return runs;
}

std::optional<double> time_to_threshold(const Trajectory& trajectory, double fraction) {
    if (trajectory.rows.empty()) return std::nullopt;
    const double t0 = trajectory.rows.front().t;
    const double target = fraction * trajectory.rows.front().err_norm;
    for (std::size_t i = 1; i < trajectory.rows.size(); ++i) {
        if (trajectory.rows[i].err_norm <= target) return trajectory.rows[i].t - t0;
    }
    return std::nullopt;
}

const ComparisonRow* ComparisonReport::find(SystemKind kind) const {
    for (const auto& r : rows) {
        if (r.kind == kind) return &r;
    }
    return nullptr;
}

void ComparisonReport::write_csv(std::ostream& os) const {
    os << "system,initial_err,final_err,t_1e-1,t_1e-2,t_1e-3,decay_rate,fit_r2,buffer_fill_time\n";
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    auto opt = [&](const std::optional<double>& v) {
        if (v) {
            os << *v;
        } else {
            os << "not_reached";
        }
    };
    for (const auto& r : rows) {
        os << to_string(r.kind) << ',' << r.initial_err << ',' << r.final_err;
        for (const auto& t : r.time_to) {
            os << ',';
            opt(t);
        }
        os << ',';
        if (r.decay) {
            os << r.decay->alpha << ',' << r.decay->r_squared;
        } else {
            os << "na,na";
        }
        os << ',';
        if (r.buffer_fill_time) {
            os << *r.buffer_fill_time;
        } else {
            os << "na";
        }
        os << '\n';
    }
    os.precision(old_precision);
}

ComparisonReport compare(const Scenario& s, const std::vector<SystemRun>& runs) {
    ComparisonReport report;
    report.scenario = s.name;
    const double window = s.make_signal().period();
    for (const auto& run : runs) {
        ComparisonRow row;
        row.kind = run.kind;
        const auto& rows = run.trajectory.rows;
        row.initial_err = rows.front().err_norm;
        row.final_err = rows.back().err_norm;
        for (std::size_t i = 0; i < kThresholds.size(); ++i) {
            row.time_to[i] = time_to_threshold(run.trajectory, kThresholds[i]);
        }
        try {
            row.decay = estimate_decay_rate(run.trajectory, 0.0, window);
        } catch (const std::invalid_argument&) {
            row.decay.reset();
        }
        row.buffer_fill_time = run.freeze_time;
        report.rows.push_back(std::move(row));
    }
    return report;
}

ComparisonReport run_scenario(const Scenario& s, const std::filesystem::path& out_dir,
                              bool gnuplot_script) {
    std::filesystem::create_directories(out_dir);
    const auto runs = run_systems(s);
    for (const auto& run : runs) {
        std::ostringstream csv;
        run.trajectory.write_csv(csv);
        write_file(out_dir / csv_name(s, run.kind), csv.str());
        if (uses_buffer(run.kind)) {
            std::ostringstream buf;
            run.buffer.write_csv(buf);
            write_file(out_dir / csv_name(s, run.kind, "_buffer"), buf.str());
        }
    }
    ComparisonReport report = compare(s, runs);
    std::ostringstream rep;
    report.write_csv(rep);
    write_file(out_dir / (s.name + "_report.csv"), rep.str());
    if (gnuplot_script) write_gnuplot(s, out_dir);
    return report;
}

bool CertificateBundle::passed() const {
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed(); });
}

void CertificateBundle::write_csv(std::ostream& os) const {
    os << "label,checked,violations,worst_margin,tolerance,skipped,strict\n";
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : reports) {
        os << r.label << ',' << r.checked << ',' << r.violations << ',' << r.worst_margin << ','
           << r.tolerance << ',' << r.skipped << ',' << (r.strict ? "true" : "false") << '\n';
    }
    os.precision(old_precision);
}

CertificateBundle run_certificates(const Scenario& s, int pointwise_samples) {
    for (SystemKind kind : s.systems) {
        if (needs_gain_condition(kind) && s.gains.gain_condition_warning) {
            std::ostringstream msg;
            msg << to_string(kind) << ": certificates need beta >= 2 gamma / mu, but beta = "
                << s.gains.beta << " and 2 gamma / mu = " << 2.0 * s.gains.gamma / s.gains.mu
                << "; the decrease bounds are unproven for these gains";
            throw PreconditionError(msg.str());
        }
    }

    const RegressorSignal signal = s.make_signal();
    const auto runs = run_systems(s);
    const double period = signal.period();
    const double horizon = std::max(2.0 * period, s.sim.t_end + 30.0);
    const PEReport pe = check_pe(signal, period, horizon);

    CertificateBundle bundle;
    for (const auto& run : runs) {
        const SystemKind kind = run.kind;
        const std::string name(to_string(kind));
        switch (kind) {
            case SystemKind::ht:
            case SystemKind::ht_normalized:
            case SystemKind::ht_cl:
            case SystemKind::ht_normalized_cl:
            case SystemKind::ht_b: {
                PointwiseOptions po;
                po.sample_count = pointwise_samples;
                po.seed = s.sim.seed + 1;
                po.t_max = std::max(s.sim.t_end, period);
                po.M = pe.M_hat;
                bundle.reports.push_back(check_decrease_pointwise(kind, signal, run.buffer, s.gains, po));
                break;
            }
            default:
                break;
        }
        if (lyapunov_form(kind)) {
            const auto v = lyapunov_values(run.trajectory, kind, s.gains, signal.theta_star(), run.buffer);
            CertificateReport along = check_decrease_along(run.trajectory, v, s.sim.step_h);
            along.label = name + ":along";
            bundle.reports.push_back(std::move(along));
        }
        if (kind == SystemKind::ht || kind == SystemKind::ht_normalized) {
            MatrosovOptions mo;
            mo.kind = kind;
            mo.T = period;
            mo.delta = pe.delta_hat;
            mo.M = pe.M_hat;
            mo.seed = s.sim.seed + 2;
            mo.t_max = std::max(s.sim.t_end, period);
            const MatrosovReport m = matrosov_check(signal, s.gains, mo);
            bundle.reports.push_back(m.bound);
            bundle.reports.push_back(m.chain);
            bundle.reports.push_back(m.derivative);
        }
    }
    return bundle;
}

PEReport pe_check(const Scenario& s, double horizon) {
    const RegressorSignal signal = s.make_signal();
    const double period = signal.period();
    if (horizon <= 0.0) horizon = 2.0 * period;
    return check_pe(signal, period, horizon);
}

}  // namespace hotune
