#include "hotune/certificates.hpp"
#include "hotune/databuffer.hpp"
#include "hotune/dynamics.hpp"
#include "hotune/integrator.hpp"
#include "hotune/scenario.hpp"
#include "hotune/signals.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace hotune;

namespace {

Eigen::MatrixXd stack(const Trajectory& tr, bool vartheta) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(tr.rows.size()), tr.dimension);
    for (std::size_t i = 0; i < tr.rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) =
            (vartheta ? tr.rows[i].vartheta : tr.rows[i].theta).transpose();
    }
    return out;
}

template <typename F>
Eigen::VectorXd column(const Trajectory& tr, F f) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(tr.rows.size()));
    for (std::size_t i = 0; i < tr.rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = f(tr.rows[i]);
    return out;
}

}  // namespace

PYBIND11_MODULE(_hotune, m) {
    m.doc() = "High-order tuner simulation and certificate checks";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericAbort>(m, "NumericAbort", PyExc_ArithmeticError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

    // signals
    py::class_<RegressorSignal>(m, "RegressorSignal")
        .def_property_readonly("dimension", &RegressorSignal::dimension)
        .def_property_readonly("theta_star", &RegressorSignal::theta_star)
        .def("phi", &RegressorSignal::phi, py::arg("t"))
        .def("y_star", &RegressorSignal::y_star, py::arg("t"))
        .def("period", &RegressorSignal::period)
        .def("shifted", &RegressorSignal::shifted, py::arg("tau"));

    m.def("make_sinusoid_mix",
          [](const Vec& offsets, const Vec& amplitudes, const Vec& frequencies, const Vec& phases,
             const Vec& theta_star) {
              return make_sinusoid_mix(static_cast<int>(offsets.size()), offsets, amplitudes,
                                       frequencies, phases, theta_star);
          },
          py::arg("offsets"), py::arg("amplitudes"), py::arg("frequencies"), py::arg("phases"),
          py::arg("theta_star"));
    m.def("make_constant_signal", &make_constant_signal, py::arg("values"), py::arg("theta_star"));
    m.def("make_reference_signal", &make_reference_signal, py::arg("theta_star"));
    m.def("pe_gram", &pe_gram, py::arg("signal"), py::arg("t"), py::arg("window"),
          py::arg("quadrature_step") = 1e-3);

    py::class_<PEReport>(m, "PEReport")
        .def_readonly("window_T", &PEReport::window_T)
        .def_readonly("delta_hat", &PEReport::delta_hat)
        .def_readonly("M_hat", &PEReport::M_hat)
        .def_readonly("scan_horizon", &PEReport::scan_horizon)
        .def_readonly("quadrature_step", &PEReport::quadrature_step)
        .def_readonly("windows_scanned", &PEReport::windows_scanned)
        .def("satisfied", &PEReport::satisfied, py::arg("tolerance") = 1e-10);
    m.def("check_pe", &check_pe, py::arg("signal"), py::arg("window"), py::arg("scan_horizon"),
          py::arg("scan_step") = 0.0, py::arg("quadrature_step") = 1e-3);

    // databuffer
    py::class_<DataSample>(m, "DataSample")
        .def(py::init([](double t, const Vec& phi, double y) { return DataSample{t, phi, y}; }),
             py::arg("t"), py::arg("phi"), py::arg("y_star"))
        .def_readonly("t", &DataSample::t)
        .def_readonly("phi", &DataSample::phi)
        .def_readonly("y_star", &DataSample::y_star);

    py::class_<DataBuffer>(m, "DataBuffer")
        .def(py::init<int, int, double>(), py::arg("dimension"), py::arg("capacity"),
             py::arg("epsilon"))
        .def_static("from_samples", &DataBuffer::from_samples, py::arg("dimension"),
                    py::arg("samples"))
        .def_property_readonly("dimension", &DataBuffer::dimension)
        .def_property_readonly("capacity", &DataBuffer::capacity)
        .def_property_readonly("frozen", &DataBuffer::frozen)
        .def_property_readonly("samples", &DataBuffer::samples)
        .def("__len__", &DataBuffer::size)
        .def("try_record", &DataBuffer::try_record, py::arg("t"), py::arg("phi"), py::arg("y_star"));
    m.def("maybe_record",
          [](const DataBuffer& b, double t, const Vec& phi, double y) {
              auto r = maybe_record(b, t, phi, y);
              return py::make_tuple(r.buffer, r.recorded);
          },
          py::arg("buffer"), py::arg("t"), py::arg("phi"), py::arg("y_star"));
    m.def("p_matrix", &p_matrix, py::arg("buffer"), py::arg("mu"));
    m.def("b_term", &b_term, py::arg("buffer"), py::arg("theta"), py::arg("mu"));

    py::class_<RichnessReport>(m, "RichnessReport")
        .def_readonly("N", &RichnessReport::N)
        .def_readonly("rank_D", &RichnessReport::rank_D)
        .def_readonly("min_eig_P", &RichnessReport::min_eig_P)
        .def_readonly("delta_mu", &RichnessReport::delta_mu)
        .def_readonly("sufficient", &RichnessReport::sufficient);
    m.def("richness", &richness, py::arg("buffer"), py::arg("mu"));

    // dynamics
    py::enum_<SystemKind> kind(m, "SystemKind");
    for (SystemKind k : kAllSystemKinds) kind.value(std::string(to_string(k)).c_str(), k);

    py::class_<Gains>(m, "Gains")
        .def(py::init<double, double, double, double>(), py::arg("beta") = 1.0,
             py::arg("gamma") = 0.1, py::arg("mu") = 0.2, py::arg("beta_r") = 0.0)
        .def_readonly("beta", &Gains::beta)
        .def_readonly("gamma", &Gains::gamma)
        .def_readonly("mu", &Gains::mu)
        .def_readonly("beta_r", &Gains::beta_r)
        .def_readonly("gain_condition_warning", &Gains::gain_condition_warning);

    py::class_<TunerState>(m, "TunerState")
        .def(py::init([](const Vec& theta, std::optional<Vec> vartheta) {
                 return TunerState{theta, vartheta.value_or(theta)};
             }),
             py::arg("theta"), py::arg("vartheta") = py::none())
        .def_readwrite("theta", &TunerState::theta)
        .def_readwrite("vartheta", &TunerState::vartheta);

    m.def("normalization", &normalization, py::arg("phi"), py::arg("mu"));
    m.def("grad_L", &grad_L, py::arg("phi"), py::arg("y_star"), py::arg("theta"));
    m.def("field", &field, py::arg("kind"), py::arg("state"), py::arg("t"), py::arg("signal"),
          py::arg("buffer"), py::arg("gains"));
    m.def("field_softreset", &field_softreset, py::arg("kind"), py::arg("state"), py::arg("t"),
          py::arg("signal"), py::arg("buffer"), py::arg("gains"));
    m.def("reset_indicator", &reset_indicator, py::arg("kind"), py::arg("state"), py::arg("t"),
          py::arg("signal"), py::arg("mu"));

    // integrator
    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init([](double step, double t_start, double t_end, int record_every,
                         std::uint64_t seed) {
                 return SimConfig{step, t_start, t_end, record_every, seed};
             }),
             py::arg("step_h") = 1e-3, py::arg("t_start") = 0.0, py::arg("t_end") = 100.0,
             py::arg("record_every") = 1, py::arg("seed") = 0)
        .def_readwrite("step_h", &SimConfig::step_h)
        .def_readwrite("t_start", &SimConfig::t_start)
        .def_readwrite("t_end", &SimConfig::t_end)
        .def_readwrite("record_every", &SimConfig::record_every)
        .def_readwrite("seed", &SimConfig::seed);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("dimension", &Trajectory::dimension)
        .def("__len__", [](const Trajectory& t) { return t.rows.size(); })
        .def_property_readonly("t", [](const Trajectory& t) { return column(t, [](auto& r) { return r.t; }); })
        .def_property_readonly("theta", [](const Trajectory& t) { return stack(t, false); })
        .def_property_readonly("vartheta", [](const Trajectory& t) { return stack(t, true); })
        .def_property_readonly("err_norm",
                               [](const Trajectory& t) { return column(t, [](auto& r) { return r.err_norm; }); })
        .def_property_readonly("p_norm",
                               [](const Trajectory& t) { return column(t, [](auto& r) { return r.p_norm; }); })
        .def_property_readonly("n_samples", [](const Trajectory& t) {
            return column(t, [](auto& r) { return static_cast<double>(r.n_samples); });
        });

    m.def("simulate",
          [](SystemKind kind, const RegressorSignal& signal, const Gains& gains, const SimConfig& sim,
             const TunerState& init, bool cl_online, double epsilon, int n_bar) {
              auto r = simulate(kind, signal, gains, sim, init, cl_online, epsilon, n_bar);
              return py::make_tuple(r.trajectory, r.buffer, r.freeze_time);
          },
          py::arg("kind"), py::arg("signal"), py::arg("gains"), py::arg("sim"), py::arg("init"),
          py::arg("cl_online") = true, py::arg("epsilon") = 1.0, py::arg("n_bar") = 10);
    m.def("simulate_with_buffer", &simulate_with_buffer, py::arg("kind"), py::arg("signal"),
          py::arg("gains"), py::arg("sim"), py::arg("init"), py::arg("buffer"));
    m.def("random_initial_state", &random_initial_state, py::arg("dimension"), py::arg("range"),
          py::arg("seed"));

    // certificates
    py::class_<ErrorCoords>(m, "ErrorCoords")
        .def(py::init([](const Vec& th, const Vec& p) { return ErrorCoords{th, p}; }),
             py::arg("theta_tilde"), py::arg("p"))
        .def_readonly("theta_tilde", &ErrorCoords::theta_tilde)
        .def_readonly("p", &ErrorCoords::p);
    m.def("v0", &v0, py::arg("err"), py::arg("gamma"));
    m.def("v_cl", &v_cl, py::arg("err"), py::arg("gains"), py::arg("p_mu"));
    m.def("v_b", &v_b, py::arg("err"), py::arg("gains"), py::arg("p_mu"));

    py::class_<CertificateReport>(m, "CertificateReport")
        .def_readonly("label", &CertificateReport::label)
        .def_readonly("checked", &CertificateReport::checked)
        .def_readonly("violations", &CertificateReport::violations)
        .def_readonly("worst_margin", &CertificateReport::worst_margin)
        .def_readonly("tolerance", &CertificateReport::tolerance)
        .def_readonly("skipped", &CertificateReport::skipped)
        .def_readonly("strict", &CertificateReport::strict)
        .def("passed", &CertificateReport::passed);

    m.def("check_decrease_pointwise",
          [](SystemKind kind, const RegressorSignal& signal, const DataBuffer& buffer,
             const Gains& gains, int sample_count, double radius, std::uint64_t seed) {
              PointwiseOptions o;
              o.sample_count = sample_count;
              o.radius = radius;
              o.seed = seed;
              return check_decrease_pointwise(kind, signal, buffer, gains, o);
          },
          py::arg("kind"), py::arg("signal"), py::arg("buffer"), py::arg("gains"),
          py::arg("sample_count") = 10000, py::arg("radius") = 1.0, py::arg("seed") = 1);

    py::class_<DecayFit>(m, "DecayFit")
        .def_readonly("alpha", &DecayFit::alpha)
        .def_readonly("c", &DecayFit::c)
        .def_readonly("r_squared", &DecayFit::r_squared)
        .def_readonly("rows_used", &DecayFit::rows_used);
    m.def("estimate_decay_rate", &estimate_decay_rate, py::arg("trajectory"),
          py::arg("skip_fraction") = 0.0, py::arg("envelope_window") = 2.0 * M_PI);

    // scenarios
    py::class_<Scenario>(m, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readonly("systems", &Scenario::systems)
        .def_readwrite("gains", &Scenario::gains)
        .def_readwrite("sim", &Scenario::sim)
        .def("make_signal", &Scenario::make_signal);
    m.def("parse_scenario", &parse_scenario, py::arg("json_text"));
    m.def("load_scenario", &load_scenario, py::arg("path"));

    py::class_<ComparisonRow>(m, "ComparisonRow")
        .def_property_readonly("system", [](const ComparisonRow& r) { return r.kind; })
        .def_readonly("initial_err", &ComparisonRow::initial_err)
        .def_readonly("final_err", &ComparisonRow::final_err)
        .def_readonly("time_to", &ComparisonRow::time_to)
        .def_readonly("buffer_fill_time", &ComparisonRow::buffer_fill_time);
    py::class_<ComparisonReport>(m, "ComparisonReport")
        .def_readonly("scenario", &ComparisonReport::scenario)
        .def_readonly("rows", &ComparisonReport::rows)
        .def("find", &ComparisonReport::find, py::return_value_policy::reference_internal);
    m.def("run_scenario", &run_scenario, py::arg("scenario"), py::arg("out_dir"),
          py::arg("gnuplot_script") = false);

    py::class_<CertificateBundle>(m, "CertificateBundle")
        .def_readonly("reports", &CertificateBundle::reports)
        .def("passed", &CertificateBundle::passed);
    m.def("run_certificates", &run_certificates, py::arg("scenario"),
          py::arg("pointwise_samples") = 10000);
}
