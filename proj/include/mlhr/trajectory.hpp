// Current-trajectory solvers (MTPA and MTPV), torque-speed map generation,
// the torque-per-commutation-angle metric, and premium-efficiency statistics.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mlhr/motor_model.hpp"

namespace mlhr::traj {

using motor::MachineParams;
using motor::OperatingPoint;

// Minimum-current operating point reaching t_ref, subject to i_s <= I_m.
// Speed-independent: voltages and eta are left zero (trajectory_plan fills
// them). When t_ref exceeds the current-limited capability the result is
// marked infeasible and carries the maximum attainable torque instead.
OperatingPoint mtpa_solve(const MachineParams& m, double t_ref);

// Minimum-voltage operating point reaching t_ref at electrical speed omega_e,
// subject to both |v| <= V_m and i_s <= I_m. Infeasible targets yield the
// maximum torque attainable under both limits at that speed, marked
// infeasible. omega_e must be positive.
OperatingPoint mtpv_solve(const MachineParams& m, double t_ref, double omega_e);

// Full planner: MTPA when it is voltage-feasible at omega_e = p*omega_mech,
// MTPV otherwise. Fills voltages, efficiency, and the feasible flag.
OperatingPoint trajectory_plan(const MachineParams& m, double t_ref, double omega_mech);

struct TorqueSpeedMap {
    std::vector<double> speed_axis;            // mech rad/s, strictly increasing
    std::vector<double> torque_axis;           // N*m, strictly increasing
    std::vector<OperatingPoint> cells;         // speed-major, torque ascending

    OperatingPoint& at(std::size_t si, std::size_t ti) {
        return cells[si * torque_axis.size() + ti];
    }
    const OperatingPoint& at(std::size_t si, std::size_t ti) const {
        return cells[si * torque_axis.size() + ti];
    }
};

// lo, lo+step, ... up to hi inclusive (within a half-step tolerance).
std::vector<double> make_axis(double lo, double hi, double step);

// Solves every (speed, torque) grid cell. Cells are independent; workers > 1
// fans them out, results land by cell index so output is scheduling-invariant.
TorqueSpeedMap build_map(const MachineParams& m, std::vector<double> speed_axis,
                         std::vector<double> torque_axis, int workers = 1);

// Speed-region boundaries for the torque-per-angle metric, mech rad/s:
// low [0, 380), accelerating [380, 650), high [650, 1000].
inline constexpr double kRegionLowHi = 380.0;
inline constexpr double kRegionAccelHi = 650.0;
inline constexpr double kRegionHighHi = 1000.0;

struct TpcaReport {
    double low{0.0};
    double accelerating{0.0};
    double high{0.0};
    double total{0.0};
    std::vector<std::string> warnings; // regions with no usable cell
};

// Per region: max over speeds of (max feasible torque at the speed) divided
// by the commutation angle (deg) of that max-torque cell. Ties between cells
// with equal torque go to the smaller angle; zero-angle cells cannot
// contribute a finite ratio and are skipped.
TpcaReport tpca(const TorqueSpeedMap& map);

struct PremiumStats {
    double area_fraction{0.0};        // premium feasible cells / feasible cells
    std::size_t count_in_premium{0};  // supplied points whose nearest cell is premium
};

PremiumStats premium_region_stats(const TorqueSpeedMap& map,
                                  const std::vector<OperatingPoint>& points,
                                  double threshold);

struct TorqueCurve {
    double i_s{0.0};
    std::vector<double> gamma_deg;  // sample grid over [0, 90]
    std::vector<double> torque;     // torque at each sample
    double gamma_opt_deg{0.0};      // refined argmax angle
    double torque_opt{0.0};         // torque at the optimum
};

// Torque versus angle at fixed current amplitude, one curve per entry of
// `currents`, plus the refined per-curve optimum locus.
std::vector<TorqueCurve> constant_torque_trajectories(const MachineParams& m,
                                                      const std::vector<double>& currents,
                                                      double gamma_step_deg = 0.5);

}  // namespace mlhr::traj
