#include <doctest.h>

#include <cmath>

#include "mlhr/common.hpp"
#include "mlhr/motor_model.hpp"

using namespace mlhr;
using namespace mlhr::motor;

namespace {

// Independent gradient oracle: central finite difference of the torque
// pipeline with respect to the commutation angle (radians). Deliberately
// built from torque() + dq_currents() only.
double torque_at_gamma(const MachineParams& m, double i_s, double gamma_rad) {
    const auto c = dq_currents(i_s, rad2deg(gamma_rad));
    return torque(m, c.i_d, c.i_q);
}

double fd_gamma_gradient(const MachineParams& m, double i_s, double gamma_deg) {
    const double g = deg2rad(gamma_deg);
    const double h = 1e-5;
    return (torque_at_gamma(m, i_s, g + h) - torque_at_gamma(m, i_s, g - h)) / (2.0 * h);
}

MachineParams bare_machine(double r_s, int p, double lam, double ld, double lq) {
    MachineParams m;
    m.r_s = r_s;
    m.pole_pairs = p;
    m.lambda_m0 = lam;
    m.ld0 = ld;
    m.lq0 = lq;
    m.i_max = 1000.0;
    m.v_max = 1000.0;
    return m;
}

} // namespace

TEST_SUITE("motor_model") {

TEST_CASE("dq current decomposition follows the commutation angle") {
    auto c = dq_currents(100.0, 0.0);
    CHECK(c.i_d == doctest::Approx(0.0));
    CHECK(c.i_q == doctest::Approx(100.0));

    c = dq_currents(100.0, 90.0);
    CHECK(c.i_d == doctest::Approx(-100.0));
    CHECK(c.i_q == doctest::Approx(0.0).epsilon(1e-12));

    c = dq_currents(100.0, 30.0);
    CHECK(c.i_d == doctest::Approx(-50.0));
    CHECK(c.i_q == doctest::Approx(86.6025403784));

    CHECK_THROWS_AS(dq_currents(10.0, -0.1), std::domain_error);
    CHECK_THROWS_AS(dq_currents(10.0, 90.1), std::domain_error);
    CHECK_THROWS_AS(dq_currents(-1.0, 45.0), std::domain_error);
}

TEST_CASE("dq current amplitude is preserved over random draws") {
    Rng rng(7001);
    for (int k = 0; k < 500; ++k) {
        const double i_s = rng.uniform(0.0, 500.0);
        const double gamma = rng.uniform(0.0, 90.0);
        const auto c = dq_currents(i_s, gamma);
        const double rad2 = c.i_d * c.i_d + c.i_q * c.i_q;
        CHECK(rad2 == doctest::Approx(i_s * i_s).epsilon(1e-9));
    }
}

TEST_CASE("steady-state dq voltages") {
    const auto m0 = bare_machine(0.1, 4, 0.1, 1e-3, 1e-3);
    auto v = dq_voltages(m0, 0.0, 0.0, 0.0);
    CHECK(v.v_d == doctest::Approx(0.0));
    CHECK(v.v_q == doctest::Approx(0.0));

    v = dq_voltages(m0, 0.0, 10.0, 100.0);
    CHECK(v.v_d == doctest::Approx(-1.0));
    CHECK(v.v_q == doctest::Approx(11.0));

    const auto m1 = bare_machine(1e-30, 4, 0.1, 1e-3, 3e-3);
    v = dq_voltages(m1, -50.0, 86.6, 500.0);
    CHECK(v.v_d == doctest::Approx(-129.9).epsilon(1e-9));
    CHECK(v.v_q == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("torque expression") {
    const auto salient = bare_machine(0.1, 4, 0.1, 1e-3, 3e-3);
    CHECK(torque(salient, -30.0, 0.0) == doctest::Approx(0.0));

    const auto round_rotor = bare_machine(0.1, 4, 0.1, 1e-3, 1e-3);
    CHECK(torque(round_rotor, -55.0, 100.0) == doctest::Approx(60.0));

    CHECK(torque(salient, -50.0, 86.6025) == doctest::Approx(103.923).epsilon(1e-6));
}

TEST_CASE("gamma gradient handles degenerate cases") {
    const auto m = bare_machine(0.1, 4, 0.1, 1e-3, 3e-3);
    CHECK(torque_gamma_gradient(m, 0.0, 45.0) == doctest::Approx(0.0));

    const auto round_rotor = bare_machine(0.1, 4, 0.1, 1e-3, 1e-3);
    CHECK(torque_gamma_gradient(round_rotor, 150.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("gamma gradient matches finite differences on 1000 random draws") {
    Rng rng(7002);
    int checked = 0;
    while (checked < 1000) {
        const double lam = rng.uniform(0.01, 0.2);
        const double ld = rng.uniform(0.2e-3, 2e-3);
        const double lq = ld * rng.uniform(1.0, 3.0);
        const int p = 2 + static_cast<int>(rng.index(4));
        const auto m = bare_machine(0.05, p, lam, ld, lq);

        const double i_s = rng.uniform(0.0, 300.0);
        const double gamma = rng.uniform(0.1, 89.9);

        const double analytic = torque_gamma_gradient(m, i_s, gamma);
        const double fd = fd_gamma_gradient(m, i_s, gamma);
        CHECK(std::abs(analytic - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        ++checked;
    }
}

TEST_CASE("gamma gradient tracks the q-axis saturation law") {
    auto m = bare_machine(0.1, 4, 0.1, 1e-3, 3e-3);
    m.sat_iq = 400.0;
    Rng rng(7003);
    for (int k = 0; k < 200; ++k) {
        const double i_s = rng.uniform(1.0, 300.0);
        const double gamma = rng.uniform(0.1, 89.9);
        const double analytic = torque_gamma_gradient(m, i_s, gamma);
        const double fd = fd_gamma_gradient(m, i_s, gamma);
        CHECK(std::abs(analytic - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("q-axis inductance saturation law") {
    auto m = bare_machine(0.1, 4, 0.1, 1e-3, 2e-3);
    CHECK(m.lq(0.0, 500.0) == doctest::Approx(2e-3)); // disabled by default
    m.sat_iq = 400.0;
    CHECK(m.lq(0.0, 400.0) == doctest::Approx(1e-3));
    CHECK(m.lq(0.0, 0.0) == doctest::Approx(2e-3));
}

TEST_CASE("magnet volume anchors") {
    DesignVector d;
    d.v = {17.88, 7.16, 50.0, 0.7, 2.0, 36.0, 36.0, 36.0};
    CHECK(std::abs(magnet_volume(d, 1) - 6.401) <= 5e-4);
    CHECK(std::abs(magnet_volume(d, 2) - 12.802) <= 5e-4);

    d.v[0] = 15.65;
    d.v[1] = 6.7;
    CHECK(std::abs(magnet_volume(d, 2) - 10.485) <= 1e-3);

    CHECK_THROWS_AS(magnet_volume(d, 3), std::domain_error);
}

TEST_CASE("reference design maps to the reference machine bit-exactly") {
    const auto space = DesignSpace::reference();
    const auto got = evaluate_design(reference_design(), space, {});
    REQUIRE(got.has_value());
    const auto want = reference_machine();
    CHECK(got->r_s == want.r_s);
    CHECK(got->pole_pairs == want.pole_pairs);
    CHECK(got->lambda_m0 == want.lambda_m0);
    CHECK(got->ld0 == want.ld0);
    CHECK(got->lq0 == want.lq0);
    CHECK(got->i_max == want.i_max);
    CHECK(got->v_max == want.v_max);
}

TEST_CASE("design evaluation is deterministic and respects bounds") {
    const auto space = DesignSpace::reference();
    DesignVector d = reference_design();
    d.v[0] = 20.0;
    d.v[5] = 40.0;
    const std::array<double, 8> noise = {0.3, -0.1, 0.2, 0.05, -0.2, 1.0, -1.0, 0.5};

    const auto a = evaluate_design(d, space, noise);
    const auto b = evaluate_design(d, space, noise);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->lambda_m0 == b->lambda_m0);
    CHECK(a->ld0 == b->ld0);
    CHECK(a->lq0 == b->lq0);

    // Base design outside the box is rejected, not clamped.
    DesignVector out = reference_design();
    out.v[0] = 30.0;
    CHECK_FALSE(evaluate_design(out, space, {}).has_value());

    // A huge noise draw is clamped back inside; result equals the map applied
    // to the clamped design.
    const std::array<double, 8> big = {100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0};
    const auto clamped = evaluate_design(reference_design(), space, big);
    REQUIRE(clamped.has_value());
    DesignVector upper;
    for (std::size_t i = 0; i < 8; ++i) upper.v[i] = space.bounds[i].hi;
    const auto direct = params_from_geometry(upper);
    CHECK(clamped->lambda_m0 == direct.lambda_m0);
    CHECK(clamped->ld0 == direct.ld0);
}

TEST_CASE("PM flux vanishes with the magnet and grows with its size") {
    DesignVector none = reference_design();
    none.v[0] = 0.0;
    CHECK(params_from_geometry(none).lambda_m0 == doctest::Approx(0.0));

    DesignVector narrow = reference_design();
    narrow.v[0] = 14.0;
    DesignVector wide = reference_design();
    wide.v[0] = 25.0;
    CHECK(params_from_geometry(wide).lambda_m0 > params_from_geometry(narrow).lambda_m0);
}

TEST_CASE("PM flux is monotone over the magnet-dimension grid") {
    const auto space = DesignSpace::reference();
    const int n = 5;
    auto grid_value = [&](int iw, int it, int il) {
        DesignVector d = reference_design();
        d.v[0] = space.bounds[0].denorm(iw / double(n - 1));
        d.v[1] = space.bounds[1].denorm(it / double(n - 1));
        d.v[2] = space.bounds[2].denorm(il / double(n - 1));
        return params_from_geometry(d).lambda_m0;
    };
    for (int iw = 0; iw < n; ++iw)
        for (int it = 0; it < n; ++it)
            for (int il = 0; il < n; ++il) {
                const double base = grid_value(iw, it, il);
                if (iw + 1 < n) CHECK(grid_value(iw + 1, it, il) >= base);
                if (it + 1 < n) CHECK(grid_value(iw, it + 1, il) >= base);
                if (il + 1 < n) CHECK(grid_value(iw, it, il + 1) >= base);
            }
}

TEST_CASE("saliency ratio stays inside [1.5, 3.5] across the box corners") {
    const auto space = DesignSpace::reference();
    for (int mask = 0; mask < 256; ++mask) {
        DesignVector d;
        for (int i = 0; i < 8; ++i)
            d.v[i] = (mask >> i) & 1 ? space.bounds[i].hi : space.bounds[i].lo;
        const auto m = params_from_geometry(d);
        const double ratio = m.lq0 / m.ld0;
        CHECK(ratio >= 1.5);
        CHECK(ratio <= 3.5);
    }
}

TEST_CASE("loss model") {
    const auto m = reference_machine();
    OperatingPoint op;
    SUBCASE("all zero at standstill") {
        const auto l = loss_model(m, op);
        CHECK(l.total() == doctest::Approx(0.0));
    }
    SUBCASE("mechanical loss is quadratic in speed") {
        op.omega_mech = 100.0;
        const double l1 = loss_model(m, op).mechanical;
        op.omega_mech = 200.0;
        const double l2 = loss_model(m, op).mechanical;
        CHECK(l2 == doctest::Approx(4.0 * l1));
    }
    SUBCASE("full-load copper loss lands in the calibrated band") {
        op.i_s = m.i_max;
        const auto c = dq_currents(op.i_s, 30.0);
        op.i_d = c.i_d;
        op.i_q = c.i_q;
        op.omega_mech = 104.7;
        const auto l = loss_model(m, op);
        CHECK(l.copper >= 6855.0 * 0.8);
        CHECK(l.copper <= 6855.0 * 1.2);
        CHECK(l.stator_core >= 0.0);
        CHECK(l.rotor_core >= 0.0);
        CHECK(l.mechanical >= 0.0);
    }
}

TEST_CASE("efficiency definition") {
    Losses l;
    CHECK(efficiency(l, 0.0) == doctest::Approx(0.0));
    CHECK(efficiency(l, 500.0) == doctest::Approx(1.0));
    l.copper = 1000.0;
    CHECK(efficiency(l, 10000.0) == doctest::Approx(0.9091).epsilon(1e-4));
}

TEST_CASE("radial force density") {
    CHECK(radial_force_density(0.0) == doctest::Approx(0.0));
    CHECK(radial_force_density(1.0) == doctest::Approx(397887.36).epsilon(1e-7));
    CHECK(radial_force_density(1.1) == doctest::Approx(481443.7).epsilon(1e-6));
}

TEST_CASE("demagnetization ratio") {
    CHECK(demag_ratio(1.2, 1.2) == doctest::Approx(0.0));
    CHECK(demag_ratio(1.2, 0.0) == doctest::Approx(1.0));
    CHECK(demag_ratio(1.2, 0.96) == doctest::Approx(0.2));
    CHECK_THROWS_AS(demag_ratio(0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(demag_ratio(1.0, 1.5), std::domain_error);
}

TEST_CASE("machine parameter validation") {
    auto m = reference_machine();
    CHECK_NOTHROW(m.validate());
    m.r_s = 0.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = reference_machine();
    m.lq0 = 0.5 * m.ld0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = reference_machine();
    m.loss.k_mech = -1.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

} // TEST_SUITE
