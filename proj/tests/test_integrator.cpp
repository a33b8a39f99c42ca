#include "hotune/integrator.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace hotune;

namespace {

Vec v(std::initializer_list<double> xs) {
    Vec out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

SimConfig cfg(double h, double t_end, double t_start = 0.0, int every = 1) {
    SimConfig c;
    c.step_h = h;
    c.t_end = t_end;
    c.t_start = t_start;
    c.record_every = every;
    return c;
}

Vec final_state(const Trajectory& tr) {
    const auto& r = tr.rows.back();
    Vec out(r.theta.size() * 2);
    out << r.theta, r.vartheta;
    return out;
}

const Vec kThetaStar = v({2, -1, 0.5});

}  // namespace

TEST_CASE("Euler on a scalar linear decay") {
    // phi = 1, theta* = 0: the gradient flow is theta' = -theta.
    const auto s = make_constant_signal(v({1}), v({0}));
    const double h = 1e-3;
    const auto res = simulate(SystemKind::basic, s, Gains(), cfg(h, 1.0), TunerState::at(v({1})), false, 1.0, 1);
    REQUIRE(res.trajectory.rows.size() == 1001);
    for (std::size_t k = 0; k < res.trajectory.rows.size(); k += 97) {
        const double expect = std::pow(1 - h, static_cast<double>(k));
        CHECK(res.trajectory.rows[k].theta[0] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(std::abs(res.trajectory.rows.back().theta[0] - std::exp(-1.0)) <= 1e-3);
    CHECK(res.trajectory.rows.back().t == doctest::Approx(1.0));
}

TEST_CASE("equilibrium stays put for every kind") {
    const auto s = make_reference_signal(kThetaStar);
    const Gains gains(1.0, 0.1, 0.2, 4.0);
    for (auto k : kAllSystemKinds) {
        const auto res = simulate(k, s, gains, cfg(1e-3, 2.0), TunerState::at(kThetaStar), uses_buffer(k), 1.0, 10);
        for (const auto& r : res.trajectory.rows) {
            CHECK(r.err_norm <= 1e-12);
            CHECK(r.p_norm <= 1e-12);
        }
    }
}

TEST_CASE("soft reset with beta_r = 0 reproduces ht_cl bit for bit") {
    const auto s = make_reference_signal(kThetaStar);
    const auto init = random_initial_state(3, 5.0, 7);
    const auto a = simulate(SystemKind::ht_cl_softreset, s, Gains(1.0, 0.1, 0.2, 0.0), cfg(1e-3, 10.0), init, true, 1.0, 10);
    const auto b = simulate(SystemKind::ht_cl, s, Gains(1.0, 0.1, 0.2, 0.0), cfg(1e-3, 10.0), init, true, 1.0, 10);
    std::ostringstream oa, ob;
    a.trajectory.write_csv(oa);
    b.trajectory.write_csv(ob);
    CHECK(oa.str() == ob.str());

    const auto an = simulate(SystemKind::ht_normalized_cl_softreset, s, Gains(1.0, 0.1, 0.2, 0.0), cfg(1e-3, 10.0), init, true, 1.0, 10);
    const auto bn = simulate(SystemKind::ht_normalized_cl, s, Gains(1.0, 0.1, 0.2, 0.0), cfg(1e-3, 10.0), init, true, 1.0, 10);
    std::ostringstream ca, cb;
    an.trajectory.write_csv(ca);
    bn.trajectory.write_csv(cb);
    CHECK(ca.str() == cb.str());
}

TEST_CASE("ht_b with rich data converges; poor data leaves the unexcited direction alone") {
    const auto s = make_constant_signal(v({1, 0}), v({1, -1}));
    const Gains gains(1.0, 0.5, 0.2);
    const auto init = TunerState::at(v({0, 0}));
    SUBCASE("rich") {
        const auto buf = DataBuffer::from_samples(2, {{0.0, v({1, 0}), 1.0}, {1.0, v({0, 1}), -1.0}});
        const auto tr = simulate_with_buffer(SystemKind::ht_b, s, gains, cfg(1e-2, 60.0), init, buf);
        CHECK(tr.rows.back().err_norm < 1e-3 * tr.rows.front().err_norm);
    }
    SUBCASE("single sample") {
        const auto buf = DataBuffer::from_samples(2, {{0.0, v({1, 0}), 1.0}});
        const auto tr = simulate_with_buffer(SystemKind::ht_b, s, gains, cfg(1e-2, 60.0), init, buf);
        for (const auto& r : tr.rows) {
            CHECK(r.theta[1] == 0.0);
            CHECK(r.vartheta[1] == 0.0);
        }
        CHECK(std::abs(tr.rows.back().theta[0] - 1.0) < 1e-3);
    }
}

TEST_CASE("simulation is deterministic") {
    const auto s = make_reference_signal(kThetaStar);
    const auto init = random_initial_state(3, 5.0, 42);
    const auto a = simulate(SystemKind::ht_cl, s, Gains(1.0, 0.1, 0.2), cfg(1e-3, 5.0), init, true, 1.0, 10);
    const auto b = simulate(SystemKind::ht_cl, s, Gains(1.0, 0.1, 0.2), cfg(1e-3, 5.0), init, true, 1.0, 10);
    CHECK(final_state(a.trajectory) == final_state(b.trajectory));
    CHECK(a.buffer.size() == b.buffer.size());
    CHECK(random_initial_state(3, 5.0, 42).theta == init.theta);
    CHECK(random_initial_state(3, 5.0, 43).theta != init.theta);
    CHECK(init.theta.cwiseAbs().maxCoeff() <= 5.0);
}

TEST_CASE("global error is first order in the step") {
    const auto s = make_reference_signal(kThetaStar);
    const auto init = random_initial_state(3, 5.0, 7);
    const Gains gains(1.0, 0.1, 0.2);
    const Vec ref = final_state(simulate(SystemKind::ht, s, gains, cfg(1e-5, 5.0), init, false, 1, 1).trajectory);
    const double e1 = (final_state(simulate(SystemKind::ht, s, gains, cfg(1e-2, 5.0), init, false, 1, 1).trajectory) - ref).norm();
    const double e2 = (final_state(simulate(SystemKind::ht, s, gains, cfg(5e-3, 5.0), init, false, 1, 1).trajectory) - ref).norm();
    const double ratio = e1 / e2;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
}

TEST_CASE("starting later equals shifting the signal") {
    const auto s = make_reference_signal(kThetaStar);
    const auto init = random_initial_state(3, 5.0, 3);
    const Gains gains(1.0, 0.1, 0.2);
    for (double tau : {5.0, 25.0}) {
        const auto late = simulate(SystemKind::ht, s, gains, cfg(1e-3, tau + 5.0, tau), init, false, 1, 1);
        const auto shifted = simulate(SystemKind::ht, s.shifted(tau), gains, cfg(1e-3, 5.0), init, false, 1, 1);
        REQUIRE(late.trajectory.rows.size() == shifted.trajectory.rows.size());
        CHECK((final_state(late.trajectory) - final_state(shifted.trajectory)).norm() <= 1e-9);
        CHECK(late.trajectory.rows.front().t == tau);
    }
}

TEST_CASE("non-finite states abort") {
    const auto s = make_constant_signal(v({1e3}), v({1}));
    CHECK_THROWS_AS(simulate(SystemKind::basic, s, Gains(), cfg(1e-3, 10.0), TunerState::at(v({0})), false, 1, 1),
                    NumericAbort);
}

TEST_CASE("configuration errors") {
    const auto s = make_reference_signal(kThetaStar);
    const auto init = TunerState::at(kThetaStar);
    CHECK_THROWS_AS(simulate(SystemKind::ht, s, Gains(), cfg(0.0, 1.0), init, false, 1, 1), ConfigError);
    CHECK_THROWS_AS(simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 1.0, 2.0), init, false, 1, 1), ConfigError);
    CHECK_THROWS_AS(simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 1.0, 0.0, 0), init, false, 1, 1), ConfigError);
    CHECK_THROWS_AS(simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 1.0), TunerState::at(v({1})), false, 1, 1), ConfigError);
    CHECK_THROWS_AS(simulate(SystemKind::ht_cl, s, Gains(), cfg(1e-3, 1.0), init, false, 1, 10), std::invalid_argument);
    CHECK_THROWS_AS(simulate_with_buffer(SystemKind::ht_cl, s, Gains(), cfg(1e-3, 1.0), init, DataBuffer()), std::invalid_argument);
    CHECK_THROWS_AS(simulate(SystemKind::ht_cl, s, Gains(), cfg(1e-3, 1.0), init, true, 1, 2), ConfigError);
}

TEST_CASE("output decimation and degenerate horizon") {
    const auto s = make_reference_signal(kThetaStar);
    const auto init = random_initial_state(3, 5.0, 1);
    const auto full = simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 1.0), init, false, 1, 1).trajectory;
    const auto dec = simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 1.0, 0.0, 10), init, false, 1, 1).trajectory;
    REQUIRE(dec.rows.size() == 101);
    for (std::size_t i = 0; i < dec.rows.size(); ++i) CHECK(dec.rows[i].theta == full.rows[10 * i].theta);

    const auto one = simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 3.0, 3.0), init, false, 1, 1).trajectory;
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0].theta == init.theta);
}

TEST_CASE("online buffer fills and freezes") {
    const auto s = make_reference_signal(kThetaStar);
    const auto res = simulate(SystemKind::ht_cl, s, Gains(1.0, 0.1, 0.2), cfg(1e-3, 20.0), random_initial_state(3, 5.0, 7), true, 1.0, 10);
    CHECK(res.buffer.size() == 10);
    CHECK(res.buffer.frozen());
    REQUIRE(res.freeze_time);
    CHECK(*res.freeze_time == res.buffer.samples().back().t);
    CHECK(richness(res.buffer, 0.2).rank_D == 3);
    int prev = 0;
    for (const auto& r : res.trajectory.rows) {
        CHECK(r.n_samples >= prev);
        prev = r.n_samples;
    }
    CHECK(res.trajectory.rows.front().n_samples == 1);
}

TEST_CASE("trajectory csv") {
    const auto s = make_reference_signal(kThetaStar);
    const auto tr = simulate(SystemKind::ht, s, Gains(), cfg(1e-3, 0.01), TunerState::at(kThetaStar), false, 1, 1).trajectory;
    std::ostringstream os;
    tr.write_csv(os);
    CHECK(os.str().rfind("t,theta_1,theta_2,theta_3,vartheta_1,vartheta_2,vartheta_3,err_norm,p_norm,n_samples\n", 0) == 0);
}
