// Backward-facing longitudinal vehicle model: wheel torque demand along a
// drive cycle mapped to machine operating points, plus the two drivability
// metrics (peak acceleration and peak road gradient) for a two-motor,
// one-per-axle powertrain.
#pragma once

#include <cstddef>
#include <vector>

#include "mlhr/motor_model.hpp"

namespace mlhr::vehicle {

using motor::MachineParams;

// Chassis and driveline data. Masses in kg, lengths in m, torques in N*m.
// k_roll is an optional speed correction to rolling resistance: the rolling
// force is C_r*(m0+m1)*g*(1 + k_roll*v^2); zero leaves the classic constant
// coefficient.
struct VehicleParams {
    double m0{0.0};        // curb mass
    double m1{0.0};        // payload
    double m_app{0.0};     // apparent rotating mass (driveline inertia)
    double r_w{0.0};       // wheel radius
    double c_d{0.0};       // aerodynamic drag coefficient
    double area{0.0};      // frontal area [m^2]
    double c_r{0.0};       // rolling resistance coefficient
    double wheelbase{0.0}; // axle-to-axle distance
    double a_front{0.0};   // CG to front axle
    double h_cg{0.0};      // CG height above ground
    double gear{0.0};      // single-speed gear ratio, motor to wheel
    double eta_trans{0.0}; // transmission efficiency (0, 1]
    double mu_max{0.0};    // tire-road friction limit
    double t_m_max{0.0};   // per-motor torque cap; 0 models a dead powertrain
    double rho_air{1.225}; // air density [kg/m^3]
    double g{9.81};        // gravitational acceleration [m/s^2]
    double k_roll{0.0};    // rolling-resistance speed coefficient [s^2/m^2]

    // Throws std::invalid_argument when a field violates its invariant:
    // masses, lengths, gear, mu_max, rho_air, g strictly positive;
    // 0 < eta_trans <= 1; 0 < a_front < wheelbase; h_cg, c_d, c_r, t_m_max,
    // k_roll non-negative.
    void validate() const;

    double total_mass() const { return m0 + m_app + m1; }   // translating + rotating
    double static_mass() const { return m0 + m1; }          // load on the tires
};

// Speed trace sampled at strictly increasing times, v in m/s, non-negative.
struct DriveCycle {
    std::vector<double> t;
    std::vector<double> v;

    std::size_t size() const { return t.size(); }

    // Throws std::invalid_argument on length mismatch, non-increasing time,
    // or negative speed.
    void validate() const;
};

// One machine operating point extracted from a cycle interval. The point is
// stamped with the interval's end time and end speed; acceleration is the
// backward difference across the interval.
struct CyclePoint {
    double t{0.0};          // s
    double omega_mech{0.0}; // machine shaft speed [rad/s]
    double torque{0.0};     // per-motor torque request [N*m]
    bool feasible{true};    // machine envelope reaches the request at this speed
};

// Per-motor torque needed to hold (v, a): total road load
//   F_t = (m0+m_app+m1)*a + C_r*(m0+m1)*g*(1+k_roll*v^2) + 0.5*rho*C_d*A*v^2
// split evenly between the two motors through the gear. Braking intervals
// (F_t < 0) are handed to the friction brakes, so the demand clamps to zero.
// v must be non-negative.
double wheel_torque_demand(const VehicleParams& vp, double v, double a);

// Machine operating points for every consecutive sample pair of the cycle
// (size() - 1 points). Feasibility of each point is the trajectory planner's
// verdict at that speed and torque. Throws std::invalid_argument when the
// cycle has fewer than two samples or fails validation.
std::vector<CyclePoint> cycle_operating_points(const VehicleParams& vp,
                                               const MachineParams& m,
                                               const DriveCycle& cycle);

// Peak longitudinal acceleration from standstill: both motors at the largest
// torque allowed by their cap and by per-axle traction, with the axle normal
// loads shifted by the acceleration itself. Solved by bisection on the
// acceleration to the self-consistent value, tolerance well under 1e-6 m/s^2.
// With a dead powertrain the result is the (negative) rolling-drag
// deceleration.
double max_acceleration(const VehicleParams& vp);

// Steepest road angle, in degrees, the powertrain can hold at crawl speed:
// tractive force equals the gravity and rolling components along the slope,
// with per-axle traction limits under the static on-slope load distribution.
// Bisection on the angle, tolerance well under 1e-6 rad. Returns 0 when even
// flat ground cannot be held.
double max_gradient(const VehicleParams& vp);

}  // namespace mlhr::vehicle
