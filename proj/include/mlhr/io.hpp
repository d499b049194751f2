// Serialization boundary: JSON configuration blocks for the domain types and
// the CSV artifact formats. Every number written out passes through the
// 9-significant-digit formatter so identical runs produce identical bytes.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mlhr/motor_model.hpp"
#include "mlhr/optimizer.hpp"
#include "mlhr/sampling.hpp"
#include "mlhr/trajectory.hpp"
#include "mlhr/vehicle.hpp"

namespace mlhr::io {

using nlohmann::json;

// Thrown by the CSV readers with a message naming the offending file line.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Machine block: keys R_s, p, lambda_m0, Ld0, Lq0, sat_iq, I_m, V_m and a
// nested loss_coeffs {k_h, k_e, k_mech}. Missing sat_iq defaults to 0
// (constant inductances); everything else is required. Values are validated.
motor::MachineParams machine_from_json(const json& j);
json machine_to_json(const motor::MachineParams& m);

// Design block: the eight named magnet variables, all required.
motor::DesignVector design_from_json(const json& j);
json design_to_json(const motor::DesignVector& d);

// Vehicle block: keys m0, m1, m_app, R_w, C_d, A, C_r, L, a_front, H_CG,
// G_r, eta_trans, mu_max, T_m_max; optional rho_air, g, K (rolling-speed
// coefficient). Validated on load.
vehicle::VehicleParams vehicle_from_json(const json& j);
json vehicle_to_json(const vehicle::VehicleParams& vp);

// Optimizer block; absent keys keep the Nsga2Config defaults. Validated.
optimizer::Nsga2Config nsga2_config_from_json(const json& j);

// Drive cycle CSV with header `t_s,v_mps`. Malformed rows raise ParseError
// naming the 1-based line number; the cycle itself is validated after load.
vehicle::DriveCycle read_drive_cycle_csv(const std::string& path);

// Numeric table with an explicit header row; cells via format9.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Artifact writers. Map rows are speed-major, torque ascending, with the
// header `speed_rad_s,torque_Nm,gamma_deg,i_s_A,eta,feasible`; operating
// points use `t_s,omega_mech_rad_s,torque_Nm,feasible`; history uses
// `generation,true_evals,hypervolume,best_cost`. Feasibility serializes as
// 1/0.
void write_map_csv(const std::string& path, const traj::TorqueSpeedMap& map);
void write_points_csv(const std::string& path, const std::vector<vehicle::CyclePoint>& pts);
void write_history_csv(const std::string& path, const std::vector<optimizer::HistoryRow>& rows);

// Final front as JSON: per member the normalized and physical coordinates,
// objectives, and constraint violations, plus run totals.
json front_to_json(const optimizer::Nsga2Result& result);

// Text file helpers; write_text creates parent directories as needed.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// round9 applied recursively to every number in a JSON tree, so dumped
// documents are stable across platforms and reruns.
json round9_tree(json j);

}  // namespace mlhr::io
