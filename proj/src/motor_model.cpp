#include "mlhr/motor_model.hpp"

#include <stdexcept>

namespace mlhr::motor {

namespace {

// Reference machine constants. The electrical parameters are the anchor point
// of the geometry map; loss coefficients are calibrated so full-load copper
// loss lands near 6.3 kW and a premium-efficiency island exists in the
// mid-speed band.
constexpr double kRefRs = 0.105;          // ohm
constexpr int kRefPolePairs = 4;          // 8-pole machine
constexpr double kRefLambdaM = 0.085;     // Wb
constexpr double kRefLd = 1.0e-3;         // H
constexpr double kRefLq = 2.2e-3;         // H
constexpr double kRefImax = 200.0;        // A
constexpr double kRefKh = 150.0;
constexpr double kRefKe = 1.0;
constexpr double kRefKmech = 5.0e-4;

// Reference geometry (mm / mech deg) the map is normalized around.
constexpr double kRefWm = 17.88;
constexpr double kRefTm = 7.16;
constexpr double kRefLm = 50.0;
constexpr double kRefWw1 = 0.7;
constexpr double kRefWg = 2.0;
constexpr double kRefAlpha1 = 36.15;
constexpr double kRefAlpha2 = 35.94;
constexpr double kRefAlpha3 = 36.05;
constexpr double kRefAlphaMean = (kRefAlpha1 + kRefAlpha2 + kRefAlpha3) / 3.0;

// Equivalent airgap for the thickness saturation term of the flux map.
constexpr double kGapEquiv = 1.5; // mm

// Leakage sensitivity of PM flux to the separation gap, per mm.
constexpr double kGapLeakage = 0.01;

constexpr double kMu0 = 4.0e-7 * kPi;

} // namespace

void MachineParams::validate() const {
    if (!(r_s > 0.0)) throw std::invalid_argument("MachineParams: R_s must be > 0");
    if (pole_pairs < 1) throw std::invalid_argument("MachineParams: p must be >= 1");
    if (!(ld0 > 0.0)) throw std::invalid_argument("MachineParams: Ld0 must be > 0");
    if (!(lq0 >= ld0)) throw std::invalid_argument("MachineParams: Lq0 must be >= Ld0");
    if (!(i_max > 0.0)) throw std::invalid_argument("MachineParams: I_m must be > 0");
    if (!(v_max > 0.0)) throw std::invalid_argument("MachineParams: V_m must be > 0");
    if (loss.k_h < 0.0 || loss.k_e < 0.0 || loss.k_mech < 0.0)
        throw std::invalid_argument("MachineParams: loss coefficients must be >= 0");
    if (lambda_m0 < 0.0) throw std::invalid_argument("MachineParams: lambda_m0 must be >= 0");
}

double MachineParams::ld(double, double) const { return ld0; }

double MachineParams::lq(double, double i_q) const {
    if (sat_iq <= 0.0) return lq0;
    return lq0 / (1.0 + std::abs(i_q) / sat_iq);
}

double MachineParams::lambda_m(double, double) const { return lambda_m0; }

bool DesignSpace::contains(const DesignVector& d) const {
    for (std::size_t i = 0; i < d.v.size(); ++i)
        if (!bounds[i].contains(d.v[i])) return false;
    return true;
}

DesignVector DesignSpace::clamp(const DesignVector& d) const {
    DesignVector out = d;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = bounds[i].clamp(out.v[i]);
    return out;
}

DesignVector DesignSpace::denorm(std::span<const double> u) const {
    if (u.size() != 8) throw std::invalid_argument("DesignSpace::denorm: need 8 coordinates");
    DesignVector d;
    for (std::size_t i = 0; i < 8; ++i) d.v[i] = bounds[i].denorm(u[i]);
    return d;
}

std::array<double, 8> DesignSpace::norm(const DesignVector& d) const {
    std::array<double, 8> u{};
    for (std::size_t i = 0; i < 8; ++i) u[i] = bounds[i].norm(d.v[i]);
    return u;
}

DesignSpace DesignSpace::reference() {
    DesignSpace s;
    s.bounds[0] = {14.0, 25.0};  // W_m
    s.bounds[1] = {2.0, 7.16};   // T_m
    s.bounds[2] = {45.0, 50.0};  // L_m
    s.bounds[3] = {0.2, 1.2};    // W_w1
    s.bounds[4] = {1.0, 4.0};    // W_g (no tabulated range; configuration value)
    s.bounds[5] = {30.0, 42.0};  // alpha_m1
    s.bounds[6] = {30.0, 42.0};  // alpha_m2
    s.bounds[7] = {30.0, 42.0};  // alpha_m3
    for (std::size_t i = 0; i < 8; ++i) s.noise[i] = 0.01 * s.bounds[i].width();
    return s;
}

DesignVector reference_design() {
    DesignVector d;
    d.v = {kRefWm, kRefTm, kRefLm, kRefWw1, kRefWg, kRefAlpha1, kRefAlpha2, kRefAlpha3};
    return d;
}

MachineParams reference_machine() {
    MachineParams m;
    m.r_s = kRefRs;
    m.pole_pairs = kRefPolePairs;
    m.lambda_m0 = kRefLambdaM;
    m.ld0 = kRefLd;
    m.lq0 = kRefLq;
    m.sat_iq = 0.0; // constant-parameter model by default
    m.i_max = kRefImax;
    m.v_max = 200.0 * std::sqrt(3.0); // 600 V dc-link class, phase amplitude
    m.loss = {kRefKh, kRefKe, kRefKmech};
    return m;
}

DqCurrents dq_currents(double i_s, double gamma_deg) {
    if (i_s < 0.0) throw std::domain_error("dq_currents: i_s must be >= 0");
    if (gamma_deg < 0.0 || gamma_deg > 90.0)
        throw std::domain_error("dq_currents: gamma must lie in [0, 90] deg");
    const double g = deg2rad(gamma_deg);
    return {-i_s * std::sin(g), i_s * std::cos(g)};
}

DqVoltages dq_voltages(const MachineParams& m, double i_d, double i_q, double omega_e) {
    const double ld = m.ld(i_d, i_q);
    const double lq = m.lq(i_d, i_q);
    const double lam = m.lambda_m(i_d, i_q);
    return {m.r_s * i_d - omega_e * lq * i_q,
            m.r_s * i_q + omega_e * ld * i_d + omega_e * lam};
}

double torque(const MachineParams& m, double i_d, double i_q) {
    const double ld = m.ld(i_d, i_q);
    const double lq = m.lq(i_d, i_q);
    const double lam = m.lambda_m(i_d, i_q);
    return 1.5 * m.pole_pairs * (lam + (ld - lq) * i_d) * i_q;
}

double torque_gamma_gradient(const MachineParams& m, double i_s, double gamma_deg) {
    const auto [i_d, i_q] = dq_currents(i_s, gamma_deg);
    const double g = deg2rad(gamma_deg);
    const double did = -i_s * std::cos(g); // di_d/dgamma
    const double diq = -i_s * std::sin(g); // di_q/dgamma

    const double ld = m.ld(i_d, i_q);
    const double lq = m.lq(i_d, i_q);
    const double lam = m.lambda_m(i_d, i_q);

    // Parameter partials. Only the q-axis saturation law contributes: with
    // L_q = Lq0/(1 + |i_q|/s) and i_q >= 0 on [0, 90] deg,
    // dL_q/dgamma = dL_q/di_q * di_q/dgamma.
    double dlq = 0.0;
    if (m.sat_iq > 0.0) {
        const double denom = 1.0 + std::abs(i_q) / m.sat_iq;
        const double dlq_diq = -m.lq0 / (denom * denom) / m.sat_iq * (i_q >= 0.0 ? 1.0 : -1.0);
        dlq = dlq_diq * diq;
    }

    return 1.5 * m.pole_pairs *
           (((ld - lq) * did - dlq * i_d) * i_q + (lam + (ld - lq) * i_d) * diq);
}

double magnet_volume(const DesignVector& d, int blocks_per_pole) {
    if (blocks_per_pole != 1 && blocks_per_pole != 2)
        throw std::domain_error("magnet_volume: blocks_per_pole must be 1 or 2");
    return blocks_per_pole * d.w_m() * d.t_m() * d.l_m() / 1000.0;
}

MachineParams params_from_geometry(const DesignVector& d) {
    MachineParams m = reference_machine();

    // PM flux: face-area scaling times a thickness reluctance divider,
    // normalized so the reference geometry reproduces lambda_m exactly, with
    // a mild leakage penalty for wider separation gaps.
    const double area = (d.w_m() * d.l_m()) / (kRefWm * kRefLm);
    const double thick = (d.t_m() / (d.t_m() + kGapEquiv)) / (kRefTm / (kRefTm + kGapEquiv));
    const double leak = 1.0 - kGapLeakage * (d.w_g() - kRefWg);
    m.lambda_m0 = kRefLambdaM * area * thick * std::max(0.0, leak);

    // Inductances: affine in the mean cavity arc and the window width. The
    // coefficients keep L_q/L_d within [1.97, 2.45] over the bounds box.
    const double arc = d.mean_cavity_arc() / kRefAlphaMean - 1.0;
    const double win = d.w_w1() - kRefWw1;
    m.ld0 = kRefLd * (1.0 + 0.15 * arc + 0.05 * win);
    m.lq0 = kRefLq * (1.0 + 0.05 * arc - 0.10 * win);
    return m;
}

std::optional<MachineParams> evaluate_design(const DesignVector& d,
                                             const DesignSpace& space,
                                             const std::array<double, 8>& noise_draw) {
    if (!space.contains(d)) return std::nullopt;
    DesignVector perturbed = d;
    for (std::size_t i = 0; i < 8; ++i) perturbed.v[i] += noise_draw[i];
    return params_from_geometry(space.clamp(perturbed));
}

Losses loss_model(const MachineParams& m, const OperatingPoint& op) {
    Losses l;
    l.copper = 1.5 * m.r_s * op.i_s * op.i_s;

    const double f_e = std::abs(m.omega_e(op.omega_mech)) / (2.0 * kPi);
    const double ld = m.ld(op.i_d, op.i_q);
    const double flux = m.lambda_m(op.i_d, op.i_q) + ld * op.i_d; // d-axis flux proxy
    const double core = m.loss.k_h * f_e * flux * flux + m.loss.k_e * f_e * f_e * flux * flux;
    l.stator_core = 0.85 * core;
    l.rotor_core = 0.15 * core;

    l.mechanical = m.loss.k_mech * op.omega_mech * op.omega_mech;
    return l;
}

double efficiency(const Losses& losses, double p_out) {
    if (p_out < 0.0) throw std::domain_error("efficiency: P_out must be >= 0");
    if (p_out == 0.0) return 0.0;
    return p_out / (p_out + losses.total());
}

double radial_force_density(double b_r) { return b_r * b_r / (2.0 * kMu0); }

double demag_ratio(double b_r1, double b_r2) {
    if (b_r1 <= 0.0) throw std::domain_error("demag_ratio: B_r1 must be > 0");
    if (b_r2 < 0.0 || b_r2 > b_r1)
        throw std::domain_error("demag_ratio: B_r2 must lie in [0, B_r1]");
    return 1.0 - b_r2 / b_r1;
}

}  // namespace mlhr::motor
