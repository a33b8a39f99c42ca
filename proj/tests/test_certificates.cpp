#include "hotune/certificates.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace hotune;

namespace {

Vec v(std::initializer_list<double> xs) {
    Vec out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

const Vec kThetaStar = v({2, -1, 0.5});

DataBuffer rich_buffer(const RegressorSignal& s) {
    std::vector<DataSample> samples;
    for (double t : {0.0, 1.0, 2.0, 3.0}) samples.push_back({t, s.phi(t), s.y_star(t)});
    return DataBuffer::from_samples(s.dimension(), samples);
}

ErrorCoords random_err(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ErrorCoords e{Vec(n), Vec(n)};
    for (int i = 0; i < n; ++i) {
        e.theta_tilde[i] = g(rng);
        e.p[i] = g(rng);
    }
    return e;
}

}  // namespace

TEST_CASE("Lyapunov function values") {
    const ErrorCoords a{v({1, 0}), v({0, 0})};
    CHECK(v0(a, 1.0) == 1.0);
    CHECK(v0(a, 0.5) == 2.0);
    const ErrorCoords b{v({1, 0}), v({0, 1})};
    CHECK(v0(b, 1.0) == 3.0);  // |[1,1]|^2 + |[0,1]|^2
    const Gains g(2.0, 1.0, 1.0);
    const Mat id = Mat::Identity(2, 2);
    CHECK(v_cl(b, g, id) == doctest::Approx(3.0 + 1.0));
    CHECK(v_cl(b, g, 2.0 * id) == doctest::Approx(3.0 + 2.0));
    CHECK(v_b(b, g, 2.0 * id) == doctest::Approx(1.0 + 0.5 + 0.5 * 2.0));
    CHECK(v_b(b, Gains(1.0, 1.0, 1.0), 2.0 * id) == doctest::Approx(1.0 + 0.5 + 2.0));
}

TEST_CASE("Lyapunov functions are positive away from the origin") {
    std::mt19937_64 rng(1);
    const Gains g(1.0, 0.1, 0.2);
    const Mat p = Mat::Identity(3, 3) * 0.3;
    for (int i = 0; i < 200; ++i) {
        const auto e = random_err(rng, 3);
        CHECK(v0(e, g.gamma) > 0.0);
        CHECK(v_cl(e, g, p) > 0.0);
        CHECK(v_b(e, g, Mat::Zero(3, 3)) > 0.0);
    }
    const ErrorCoords z{Vec::Zero(3), Vec::Zero(3)};
    CHECK(v0(z, 0.1) == 0.0);
    CHECK(v_cl(z, g, p) == 0.0);
}

TEST_CASE("certificate assignment") {
    CHECK(lyapunov_form(SystemKind::ht) == LyapunovForm::v0);
    CHECK(lyapunov_form(SystemKind::ht_normalized) == LyapunovForm::v0);
    CHECK(lyapunov_form(SystemKind::ht_cl) == LyapunovForm::v_cl);
    CHECK(lyapunov_form(SystemKind::ht_normalized_cl) == LyapunovForm::v_cl);
    CHECK(lyapunov_form(SystemKind::ht_cl_softreset) == LyapunovForm::v_cl);
    CHECK(lyapunov_form(SystemKind::ht_b) == LyapunovForm::v_b);
    CHECK_FALSE(lyapunov_form(SystemKind::basic));
    CHECK_FALSE(lyapunov_form(SystemKind::basic_normalized_cl));
}

TEST_CASE("error coordinates round-trip") {
    const TunerState x{v({1, 2, 3}), v({0, 0, 1})};
    const auto e = ErrorCoords::from_state(x, kThetaStar);
    CHECK(e.theta_tilde == v({-1, 3, 2.5}));
    CHECK(e.p == v({-1, -2, -2}));
    const auto back = e.to_state(kThetaStar);
    CHECK(back.theta == x.theta);
    CHECK(back.vartheta == x.vartheta);
}

TEST_CASE("error field matches the hand-derived error dynamics") {
    const auto s = make_reference_signal(kThetaStar);
    const auto buf = rich_buffer(s);
    const Gains g(1.0, 0.1, 0.2);
    const Mat p_mu = p_matrix(buf, g.mu);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto e = random_err(rng, 3);
        const auto sample = s.eval(0.31 * i);
        const Vec& phi = sample.phi;
        const double nt = 1.0 + g.mu * phi.squaredNorm();
        const Vec ey_phi = phi * phi.dot(e.theta_tilde);

        auto f = error_field(SystemKind::ht, e, sample, kThetaStar, buf, g);
        Vec th = g.beta * nt * e.p;
        CHECK((f.theta_tilde - th).norm() < 1e-12);
        CHECK((f.p - (-g.gamma * ey_phi - th)).norm() < 1e-11);

        f = error_field(SystemKind::ht_normalized_cl, e, sample, kThetaStar, buf, g);
        th = g.beta * e.p;
        CHECK((f.theta_tilde - th).norm() < 1e-12);
        const Vec pd = -g.gamma * (ey_phi / nt + p_mu * e.theta_tilde) - th;
        CHECK((f.p - pd).norm() < 1e-11);

        f = error_field(SystemKind::ht_b, e, sample, kThetaStar, buf, g);
        CHECK((f.p - (-g.gamma * p_mu * e.theta_tilde - th)).norm() < 1e-11);
    }
}

TEST_CASE("analytic Lyapunov derivative matches a directional difference") {
    const auto s = make_reference_signal(kThetaStar);
    const auto buf = rich_buffer(s);
    const Gains g(1.0, 0.1, 0.2, 4.0);
    const Mat p_mu = p_matrix(buf, g.mu);
    std::mt19937_64 rng(3);
    for (auto kind : {SystemKind::ht, SystemKind::ht_normalized, SystemKind::ht_cl,
                      SystemKind::ht_normalized_cl, SystemKind::ht_b, SystemKind::ht_cl_softreset}) {
        const auto form = *lyapunov_form(kind);
        for (int i = 0; i < 30; ++i) {
            const auto e = random_err(rng, 3);
            const auto sample = s.eval(0.53 * i);
            const auto f = error_field(kind, e, sample, kThetaStar, buf, g);
            const double h = 1e-6;
            const ErrorCoords a{e.theta_tilde + h * f.theta_tilde, e.p + h * f.p};
            const ErrorCoords b{e.theta_tilde - h * f.theta_tilde, e.p - h * f.p};
            const double fd = (lyapunov_value(form, a, g, p_mu) - lyapunov_value(form, b, g, p_mu)) / (2 * h);
            const double an = lyapunov_derivative(kind, e, sample, kThetaStar, buf, g);
            CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("pointwise decrease") {
    const auto s = make_reference_signal(kThetaStar);
    const auto buf = rich_buffer(s);
    PointwiseOptions o;
    o.sample_count = 2000;

    SUBCASE("on the gain boundary beta = 2 gamma / mu") {
        const Gains g(1.0, 0.1, 0.2);
        for (auto kind : {SystemKind::ht, SystemKind::ht_normalized, SystemKind::ht_cl,
                          SystemKind::ht_normalized_cl, SystemKind::ht_b}) {
            const auto r = check_decrease_pointwise(kind, s, buf, g, o);
            CHECK(r.checked == o.sample_count);
            CHECK(r.violations == 0);
            CHECK(r.worst_margin <= o.tolerance);
        }
        CHECK(check_decrease_pointwise(SystemKind::ht_cl, s, buf, g, o).strict);
    }
    SUBCASE("larger gains and radius") {
        const Gains g(3.0, 0.05, 0.5);
        o.radius = 10.0;
        for (auto kind : {SystemKind::ht, SystemKind::ht_normalized_cl, SystemKind::ht_b}) {
            CHECK(check_decrease_pointwise(kind, s, buf, g, o).violations == 0);
        }
    }
    SUBCASE("violated gain condition is refused") {
        const Gains g(0.5, 0.1, 0.2);
        CHECK_THROWS_AS(check_decrease_pointwise(SystemKind::ht, s, buf, g, o), PreconditionError);
        CHECK_THROWS_AS(check_decrease_pointwise(SystemKind::ht_normalized_cl, s, buf, g, o), PreconditionError);
        // ht_b carries no gain condition.
        CHECK(check_decrease_pointwise(SystemKind::ht_b, s, buf, g, o).violations == 0);
    }
    SUBCASE("baselines have no bound") {
        CHECK_THROWS_AS(check_decrease_pointwise(SystemKind::basic, s, buf, Gains(), o), std::invalid_argument);
        CHECK_THROWS_AS(check_decrease_pointwise(SystemKind::ht_cl_softreset, s, buf, Gains(), o), std::invalid_argument);
    }
    SUBCASE("rank-deficient data holds only semidefinitely") {
        const auto poor = DataBuffer::from_samples(3, {{0.0, s.phi(0.0), s.y_star(0.0)}});
        const auto r = check_decrease_pointwise(SystemKind::ht_b, s, poor, Gains(), o);
        CHECK(r.violations == 0);
        CHECK_FALSE(r.strict);
    }
}

TEST_CASE("decrease along trajectories") {
    const auto s = make_reference_signal(kThetaStar);
    const Gains g(1.0, 0.1, 0.2);
    SimConfig c;
    c.t_end = 20.0;
    c.record_every = 10;

    SUBCASE("equilibrium") {
        const auto res = simulate(SystemKind::ht, s, g, c, TunerState::at(kThetaStar), false, 1, 1);
        const auto vals = lyapunov_values(res.trajectory, SystemKind::ht, g, kThetaStar, res.buffer);
        for (double x : vals) CHECK(x == 0.0);
        CHECK(check_decrease_along(res.trajectory, vals, c.step_h).violations == 0);
    }
    SUBCASE("ht and ht_cl from a random start") {
        const auto init = random_initial_state(3, 5.0, 7);
        for (auto kind : {SystemKind::ht, SystemKind::ht_cl, SystemKind::ht_normalized_cl}) {
            auto res = simulate(kind, s, g, c, init, uses_buffer(kind), 1.0, 10);
            const auto vals = lyapunov_values(res.trajectory, kind, g, kThetaStar, res.buffer);
            const auto r = check_decrease_along(res.trajectory, vals, c.step_h);
            CHECK(r.violations == 0);
            CHECK(r.checked + r.skipped == static_cast<long>(vals.size()) - 1);
            attach_lyapunov(res.trajectory, kind, g, kThetaStar, res.buffer);
            CHECK(res.trajectory.has_lyapunov());
            CHECK(*res.trajectory.rows.back().V == vals.back());
        }
    }
    SUBCASE("an increase is flagged") {
        Trajectory tr;
        tr.dimension = 1;
        std::vector<double> vals;
        for (int k = 0; k < 5; ++k) {
            tr.rows.push_back({0.01 * k, v({0}), v({0}), 0, 0, 0, std::nullopt});
            vals.push_back(k == 3 ? 2.0 : 1.0);
        }
        const auto r = check_decrease_along(tr, vals, 1e-3);
        CHECK(r.violations == 1);
        CHECK(r.worst_margin > 0.5);
        vals.pop_back();
        CHECK_THROWS_AS(check_decrease_along(tr, vals, 1e-3), std::invalid_argument);
    }
}

TEST_CASE("Matrosov auxiliary function") {
    SUBCASE("constant scalar regressor") {
        const auto s = make_constant_signal(v({2}), v({0}));
        CHECK(matrosov_v1(s, v({1}), 3.0) == doctest::Approx(-4.0).epsilon(1e-6));
        CHECK(std::abs(matrosov_v1(s, v({1}), 3.0) + 4.0) <= 1e-6);
        CHECK(matrosov_v1(s, v({0}), 3.0) == 0.0);
    }
    SUBCASE("derivative formula against a time difference") {
        const auto s = make_reference_signal(kThetaStar);
        const Gains g(1.0, 0.1, 0.2);
        const double L = 30.0;
        std::mt19937_64 rng(5);
        for (int i = 0; i < 5; ++i) {
            const auto e = random_err(rng, 3);
            const double t = 1.0 + 3.7 * i;
            const Vec phi = s.phi(t);
            const double nt = normalization(phi, g.mu);
            const Vec th_dot = g.beta * nt * e.p;
            const double d = 1e-3;
            const double fd = (matrosov_v1(s, e.theta_tilde + d * th_dot, t + d, L) -
                               matrosov_v1(s, e.theta_tilde - d * th_dot, t - d, L)) / (2 * d);
            const Mat w = matrosov_weight(s, t, L);
            const double v1 = -e.theta_tilde.dot(w * e.theta_tilde);
            const double ey = phi.dot(e.theta_tilde);
            const double end = s.phi(t + L).dot(e.theta_tilde);
            const double formula = v1 + ey * ey - std::exp(-L) * end * end - 2.0 * e.theta_tilde.dot(w * th_dot);
            CHECK(std::abs(fd - formula) <= 1e-4 * std::max(1.0, std::abs(formula)));
        }
    }
    SUBCASE("check on the reference signal") {
        const auto s = make_reference_signal(kThetaStar);
        MatrosovOptions o;
        o.T = 2 * std::numbers::pi;
        o.delta = std::numbers::pi * (15.0 - std::sqrt(153.0)) / 2.0;
        o.M = std::sqrt(12 + 6 * std::sqrt(2.0));
        o.sample_count = 300;
        o.time_points = 6;
        for (auto kind : {SystemKind::ht, SystemKind::ht_normalized}) {
            o.kind = kind;
            const auto r = matrosov_check(s, Gains(1.0, 0.1, 0.2), o);
            CHECK(r.passed());
            CHECK(r.bound.checked == 300);
        }
        o.truncation = 20.0;
        CHECK_THROWS_AS(matrosov_check(s, Gains(), o), std::invalid_argument);
        o.truncation = 30.0;
        o.kind = SystemKind::ht_cl;
        CHECK_THROWS_AS(matrosov_check(s, Gains(), o), std::invalid_argument);
    }
}

TEST_CASE("decay-rate fit") {
    std::vector<double> t, e;
    for (int k = 0; k <= 2000; ++k) {
        t.push_back(0.01 * k);
        e.push_back(3.0 * std::exp(-0.5 * t.back()));
    }
    const auto f = fit_decay(t, e, 0.0, 1.0);
    CHECK(std::abs(f.alpha - 0.5) <= 1e-3);
    CHECK(f.c == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(f.r_squared > 0.999);

    // An oscillating error is fitted through its envelope.
    std::vector<double> eo;
    for (double x : t) eo.push_back(std::exp(-0.3 * x) * (1.5 + std::sin(2 * std::numbers::pi * x)));
    const auto fo = fit_decay(t, eo, 0.1, 1.0);
    CHECK(fo.alpha == doctest::Approx(0.3).epsilon(0.05));
    CHECK(fo.r_squared > 0.95);

    const std::vector<double> zeros(t.size(), 0.0);
    CHECK_THROWS_AS(fit_decay(t, zeros, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_decay(t, std::vector<double>(3, 1.0), 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("report csv") {
    CertificateReport r;
    r.label = "ht:pointwise";
    r.checked = 10;
    std::ostringstream os;
    write_reports_csv(os, std::span<const CertificateReport>(&r, 1));
    CHECK(os.str().rfind("label,checked,violations,worst_margin,tolerance\nht:pointwise,10,0,", 0) == 0);
}
