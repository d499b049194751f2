// Analytical IPMSM evaluator: steady-state dq equations, torque and its
// commutation-angle gradient, magnet volume, the geometry-to-parameter map
// standing in for field simulation, and the simplified loss model.
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "mlhr/common.hpp"

namespace mlhr::motor {

struct LossCoefficients {
    double k_h{0.0};    // hysteresis core-loss coefficient, stator+rotor combined
    double k_e{0.0};    // eddy core-loss coefficient, stator+rotor combined
    double k_mech{0.0}; // mechanical loss per (mech rad/s)^2
};

// Electrical model of one machine. Inductances are constant unless the q-axis
// saturation law is enabled (sat_iq > 0), in which case
// L_q(i_q) = Lq0 / (1 + |i_q|/sat_iq).
struct MachineParams {
    double r_s{0.0};       // stator phase resistance [ohm]
    int pole_pairs{1};     // p
    double lambda_m0{0.0}; // PM flux linkage [Wb]
    double ld0{0.0};       // d-axis inductance [H]
    double lq0{0.0};       // q-axis inductance [H]
    double sat_iq{0.0};    // saturation reference current [A]; <= 0 disables
    double i_max{0.0};     // inverter current limit [A]
    double v_max{0.0};     // inverter phase voltage limit [V]
    LossCoefficients loss{};

    // Throws std::invalid_argument when a field violates its invariant
    // (r_s > 0, pole_pairs >= 1, Lq0 >= Ld0 > 0, limits > 0, losses >= 0).
    void validate() const;

    double ld(double i_d, double i_q) const;
    double lq(double i_d, double i_q) const;
    double lambda_m(double i_d, double i_q) const;

    double omega_e(double omega_mech) const { return pole_pairs * omega_mech; }
};

// One solved point on the torque-speed plane.
struct OperatingPoint {
    double omega_mech{0.0}; // mechanical speed [rad/s]
    double torque{0.0};     // electromagnetic torque [N*m]
    double i_s{0.0};        // current amplitude [A]
    double gamma_deg{0.0};  // commutation angle [deg]
    double i_d{0.0};
    double i_q{0.0};
    double v_d{0.0};
    double v_q{0.0};
    double eta{0.0};        // efficiency [0,1]
    bool feasible{true};

    double v_mag() const { return std::hypot(v_d, v_q); }
};

struct Losses {
    double stator_core{0.0};
    double rotor_core{0.0};
    double copper{0.0};
    double mechanical{0.0};

    double total() const { return stator_core + rotor_core + copper + mechanical; }
};

// The eight controllable magnet-sizing variables, all in mm except the cavity
// arcs (mechanical degrees).
struct DesignVector {
    std::array<double, 8> v{};

    double& w_m() { return v[0]; }
    double& t_m() { return v[1]; }
    double& l_m() { return v[2]; }
    double& w_w1() { return v[3]; }
    double& w_g() { return v[4]; }
    double& alpha_m1() { return v[5]; }
    double& alpha_m2() { return v[6]; }
    double& alpha_m3() { return v[7]; }

    double w_m() const { return v[0]; }
    double t_m() const { return v[1]; }
    double l_m() const { return v[2]; }
    double w_w1() const { return v[3]; }
    double w_g() const { return v[4]; }
    double alpha_m1() const { return v[5]; }
    double alpha_m2() const { return v[6]; }
    double alpha_m3() const { return v[7]; }

    double mean_cavity_arc() const { return (v[5] + v[6] + v[7]) / 3.0; }
};

inline constexpr std::array<const char*, 8> kDesignFieldNames = {
    "W_m", "T_m", "L_m", "W_w1", "W_g", "alpha_m1", "alpha_m2", "alpha_m3"};

// Bounds and per-field noise levels for the design variables. W_w1, T_m, L_m
// and W_m bounds come from the rotor parameter table; the separation gap and
// cavity-arc ranges have no tabulated row and are configuration values.
struct DesignSpace {
    std::array<Interval, 8> bounds{};
    std::array<double, 8> noise{}; // std-dev per field, same units as the field

    bool contains(const DesignVector& d) const;
    DesignVector clamp(const DesignVector& d) const;

    DesignVector denorm(std::span<const double> u) const;
    std::array<double, 8> norm(const DesignVector& d) const;

    static DesignSpace reference();
};

// Tabulated reference design (the unmodified rotor) and the machine it maps to.
DesignVector reference_design();
MachineParams reference_machine();

// i_d = -i_s sin(gamma), i_q = i_s cos(gamma); gamma in degrees, [0, 90].
// Throws std::domain_error outside that range or for i_s < 0.
struct DqCurrents {
    double i_d;
    double i_q;
};
DqCurrents dq_currents(double i_s, double gamma_deg);

// Steady-state dq voltages with inductances evaluated at (i_d, i_q).
struct DqVoltages {
    double v_d;
    double v_q;
};
DqVoltages dq_voltages(const MachineParams& m, double i_d, double i_q, double omega_e);

double torque(const MachineParams& m, double i_d, double i_q);

// dT_e/dgamma in N*m per radian at (i_s, gamma). Parameter partials with
// respect to gamma are supplied by the machine model; they are zero for the
// constant-parameter evaluator and follow the saturation law otherwise.
double torque_gamma_gradient(const MachineParams& m, double i_s, double gamma_deg);

// Magnet volume per pole in cm^3 from mm dimensions.
double magnet_volume(const DesignVector& d, int blocks_per_pole);

// Closed-form geometry-to-parameter map, no bounds handling. PM flux scales
// with magnet face area and saturates with thickness through an equivalent
// airgap; inductances move affinely with the mean cavity arc and the window
// width, keeping the saliency ratio inside [1.5, 3.5] over the design box.
// Limits and loss coefficients are inherited from the reference machine
// (magnet sizing does not alter the inverter or the winding).
MachineParams params_from_geometry(const DesignVector& d);

// Bounds-checked evaluation: rejects a base design outside the space (returns
// nullopt as the infeasible marker), applies the additive noise draw, clamps
// the perturbed design to the bounds, then maps through params_from_geometry.
std::optional<MachineParams> evaluate_design(const DesignVector& d,
                                             const DesignSpace& space,
                                             const std::array<double, 8>& noise_draw);

Losses loss_model(const MachineParams& m, const OperatingPoint& op);

// eta = P_out / (P_out + total losses); defined as 0 at P_out = 0.
double efficiency(const Losses& losses, double p_out);

// sigma_rf = B_r^2 / (2 mu_0).
double radial_force_density(double b_r);

// 1 - B_r2/B_r1 in [0,1]. Throws std::domain_error for B_r1 <= 0 or
// B_r2 outside [0, B_r1].
double demag_ratio(double b_r1, double b_r2);

}  // namespace mlhr::motor
