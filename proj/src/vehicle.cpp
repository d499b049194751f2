// Longitudinal vehicle model implementation. The drivability solvers share
// one structure: per-axle torque caps (motor limit or traction limit,
// whichever is lower) feed a force balance, and a bisection closes the loop
// on the quantity that shifts the axle loads.
#include "mlhr/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlhr/common.hpp"
#include "mlhr/trajectory.hpp"

namespace mlhr::vehicle {

namespace {

struct AxleLoads {
    double front;
    double rear;
};

// Normal loads while accelerating on flat ground. The inertial reaction
// tilts the static split about the contact line through the CG height.
AxleLoads loads_under_acceleration(const VehicleParams& vp, double a) {
    const double w = vp.static_mass() * vp.g;
    const double shift = vp.static_mass() * a * vp.h_cg / vp.wheelbase;
    return {w * (vp.wheelbase - vp.a_front) / vp.wheelbase - shift,
            w * vp.a_front / vp.wheelbase + shift};
}

// Normal loads parked on a slope of angle theta (rad). The downhill weight
// component acts at the CG and unloads the front axle.
AxleLoads loads_on_slope(const VehicleParams& vp, double theta) {
    const double w = vp.static_mass() * vp.g;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {w * (c * (vp.wheelbase - vp.a_front) - s * vp.h_cg) / vp.wheelbase,
            w * (c * vp.a_front + s * vp.h_cg) / vp.wheelbase};
}

// Largest torque one motor may deliver into an axle carrying normal load fz.
double axle_torque_cap(const VehicleParams& vp, double fz) {
    const double traction = vp.mu_max * std::max(0.0, fz) * vp.r_w /
                            (vp.gear * vp.eta_trans);
    return std::clamp(traction, 0.0, vp.t_m_max);
}

// Acceleration produced by a given total motor torque on flat ground.
double accel_from_torque(const VehicleParams& vp, double torque_sum) {
    const double rolling = vp.c_r * vp.static_mass() * vp.g * vp.r_w;
    return (torque_sum * vp.gear * vp.eta_trans - rolling) /
           (vp.total_mass() * vp.r_w);
}

}  // namespace

void VehicleParams::validate() const {
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0)) {
            throw std::invalid_argument(std::string(name) + " must be positive");
        }
    };
    auto non_negative = [](double x, const char* name) {
        if (!(x >= 0.0)) {
            throw std::invalid_argument(std::string(name) + " must be non-negative");
        }
    };
    positive(m0, "m0");
    positive(m1, "m1");
    positive(m_app, "m_app");
    positive(r_w, "r_w");
    positive(area, "area");
    positive(wheelbase, "wheelbase");
    positive(gear, "gear");
    positive(mu_max, "mu_max");
    positive(rho_air, "rho_air");
    positive(g, "g");
    non_negative(c_d, "c_d");
    non_negative(c_r, "c_r");
    non_negative(h_cg, "h_cg");
    non_negative(t_m_max, "t_m_max");
    non_negative(k_roll, "k_roll");
    if (!(eta_trans > 0.0 && eta_trans <= 1.0)) {
        throw std::invalid_argument("eta_trans must lie in (0, 1]");
    }
    if (!(a_front > 0.0 && a_front < wheelbase)) {
        throw std::invalid_argument("a_front must lie strictly inside the wheelbase");
    }
}

void DriveCycle::validate() const {
    if (t.size() != v.size()) {
        throw std::invalid_argument("drive cycle time and speed lengths differ");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0 && !(t[i] > t[i - 1])) {
            throw std::invalid_argument("drive cycle times must be strictly increasing");
        }
        if (!(v[i] >= 0.0)) {
            throw std::invalid_argument("drive cycle speeds must be non-negative");
        }
    }
}

double wheel_torque_demand(const VehicleParams& vp, double v, double a) {
    if (!(v >= 0.0)) {
        throw std::domain_error("speed must be non-negative");
    }
    const double inertia = vp.total_mass() * a;
    const double rolling = vp.c_r * vp.static_mass() * vp.g * (1.0 + vp.k_roll * v * v);
    const double drag = 0.5 * vp.rho_air * vp.c_d * vp.area * v * v;
    const double f_t = inertia + rolling + drag;
    if (f_t < 0.0) {
        return 0.0;
    }
    return 0.5 * f_t * vp.r_w / (vp.eta_trans * vp.gear);
}

std::vector<CyclePoint> cycle_operating_points(const VehicleParams& vp,
                                               const MachineParams& m,
                                               const DriveCycle& cycle) {
    cycle.validate();
    if (cycle.size() < 2) {
        throw std::invalid_argument("drive cycle needs at least two samples");
    }
    std::vector<CyclePoint> points;
    points.reserve(cycle.size() - 1);
    for (std::size_t i = 1; i < cycle.size(); ++i) {
        const double dt = cycle.t[i] - cycle.t[i - 1];
        const double a = (cycle.v[i] - cycle.v[i - 1]) / dt;
        CyclePoint p;
        p.t = cycle.t[i];
        p.omega_mech = cycle.v[i] * vp.gear / vp.r_w;
        p.torque = wheel_torque_demand(vp, cycle.v[i], a);
        p.feasible = traj::trajectory_plan(m, p.torque, p.omega_mech).feasible;
        points.push_back(p);
    }
    return points;
}

double max_acceleration(const VehicleParams& vp) {
    vp.validate();
    // Available acceleration at a trial load-transfer state.
    auto achievable = [&vp](double a) {
        const AxleLoads fz = loads_under_acceleration(vp, a);
        return accel_from_torque(
            vp, axle_torque_cap(vp, fz.front) + axle_torque_cap(vp, fz.rear));
    };
    // The bracket spans from below the rolling-drag deceleration (always
    // achievable) to above the cap-limited value (never exceedable).
    double lo = accel_from_torque(vp, 0.0) - 1.0;
    double hi = accel_from_torque(vp, 2.0 * vp.t_m_max) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (achievable(mid) >= mid ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double max_gradient(const VehicleParams& vp) {
    vp.validate();
    // Surplus tractive force at angle theta; the peak angle is its zero.
    auto surplus = [&vp](double theta) {
        const AxleLoads fz = loads_on_slope(vp, theta);
        const double drive = (axle_torque_cap(vp, fz.front) + axle_torque_cap(vp, fz.rear)) *
                             vp.gear * vp.eta_trans / vp.r_w;
        const double resist = vp.static_mass() * vp.g *
                              (std::sin(theta) + vp.c_r * std::cos(theta));
        return drive - resist;
    };
    if (surplus(0.0) < 0.0) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 0.5 * kPi;
    if (surplus(hi) >= 0.0) {
        return rad2deg(hi);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (surplus(mid) >= 0.0 ? lo : hi) = mid;
    }
    return rad2deg(0.5 * (lo + hi));
}

}  // namespace mlhr::vehicle
