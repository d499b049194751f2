#include "mlhr/trajectory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlhr::traj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kScanPoints = 1024;     // coarse angle grid before refinement
constexpr double kGammaTol = 1e-9;    // golden-section width target, deg
constexpr double kLimitSlack = 1e-9;  // relative slack on inverter limits

// Golden-section minimizer; f must be defined on [lo, hi].
template <typename F>
double golden_min(F&& f, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

bool uses_saturation(const MachineParams& m) { return m.sat_iq > 0.0; }

// Smallest i_s in [0, cap] whose torque at the given angle equals t_ref.
// Torque is strictly increasing in i_s at fixed angle (for gamma < 90 deg and
// lambda_m, saliency >= 0), so the root is unique when it exists.
struct IsRoot {
    bool ok{false};
    double i_s{0.0};
};

IsRoot solve_is(const MachineParams& m, double gamma_deg, double t_ref, double cap) {
    if (t_ref == 0.0) return {true, 0.0};
    if (t_ref < 0.0) return {};
    const double g = deg2rad(gamma_deg);
    const double cs = std::cos(g);
    const double sn = std::sin(g);

    if (!uses_saturation(m)) {
        // T(i) = a*i + b*i^2 with a, b >= 0 on [0, 90] deg.
        const double a = 1.5 * m.pole_pairs * m.lambda_m0 * cs;
        const double b = 1.5 * m.pole_pairs * (m.lq0 - m.ld0) * sn * cs;
        double root;
        if (b > 1e-30) {
            const double disc = a * a + 4.0 * b * t_ref;
            root = (-a + std::sqrt(disc)) / (2.0 * b);
        } else if (a > 1e-30) {
            root = t_ref / a;
        } else {
            return {};
        }
        if (root > cap * (1.0 + 1e-12)) return {};
        return {true, std::min(root, cap)};
    }

    // Saturation makes the closed form invalid; bisect (torque still
    // increases with current at fixed angle).
    auto torque_at = [&](double i_s) {
        const auto c = motor::dq_currents(i_s, gamma_deg);
        return motor::torque(m, c.i_d, c.i_q);
    };
    if (torque_at(cap) < t_ref) return {};
    double lo = 0.0, hi = cap;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, cap); ++it) {
        const double mid = 0.5 * (lo + hi);
        (torque_at(mid) < t_ref ? lo : hi) = mid;
    }
    return {true, 0.5 * (lo + hi)};
}

OperatingPoint make_point(const MachineParams& m, double i_s, double gamma_deg,
                          double omega_mech, bool feasible) {
    OperatingPoint op;
    op.omega_mech = omega_mech;
    op.i_s = i_s;
    op.gamma_deg = gamma_deg;
    const auto c = motor::dq_currents(i_s, gamma_deg);
    op.i_d = c.i_d;
    op.i_q = c.i_q;
    op.torque = motor::torque(m, op.i_d, op.i_q);
    const auto v = motor::dq_voltages(m, op.i_d, op.i_q, m.omega_e(omega_mech));
    op.v_d = v.v_d;
    op.v_q = v.v_q;
    op.feasible = feasible;
    const double p_out = std::max(0.0, op.torque * op.omega_mech);
    op.eta = motor::efficiency(motor::loss_model(m, op), p_out);
    return op;
}

// Voltage-feasible current range along a fixed angle ray, returning the
// largest admissible i_s in [0, cap], or nothing when the whole ray violates
// the voltage limit. Constant-parameter machines admit an exact quadratic;
// saturation falls back to a scan plus bisection refinement.
struct RayCap {
    bool ok{false};
    double i_hi{0.0};
    double i_lo{0.0};
};

RayCap voltage_ray_cap(const MachineParams& m, double gamma_deg, double omega_e, double cap) {
    const double vlim2 = m.v_max * m.v_max * (1.0 + kLimitSlack);
    const double g = deg2rad(gamma_deg);
    const double cs = std::cos(g);
    const double sn = std::sin(g);

    auto vmag2 = [&](double i_s) {
        const auto c = motor::dq_currents(i_s, gamma_deg);
        const auto v = motor::dq_voltages(m, c.i_d, c.i_q, omega_e);
        return v.v_d * v.v_d + v.v_q * v.v_q;
    };

    if (!uses_saturation(m)) {
        // v_d = alpha*i_s, v_q = beta*i_s + omega*lambda: |v|^2 is quadratic.
        const double alpha = -m.r_s * sn - omega_e * m.lq0 * cs;
        const double beta = m.r_s * cs - omega_e * m.ld0 * sn;
        const double a = alpha * alpha + beta * beta;
        const double b = 2.0 * beta * omega_e * m.lambda_m0;
        const double c = omega_e * omega_e * m.lambda_m0 * m.lambda_m0 - vlim2;
        if (a < 1e-300) return c <= 0.0 ? RayCap{true, cap, 0.0} : RayCap{};
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return {};
        const double sq = std::sqrt(disc);
        const double r1 = (-b - sq) / (2.0 * a);
        const double r2 = (-b + sq) / (2.0 * a);
        const double lo = std::max(0.0, r1);
        const double hi = std::min(cap, r2);
        if (hi < lo) return {};
        return {true, hi, lo};
    }

    // Saturated machine: locate the admissible segment containing the largest
    // feasible current by scanning down from the cap.
    constexpr int kSteps = 256;
    double hi = -1.0;
    for (int j = kSteps; j >= 0; --j) {
        const double i_s = cap * j / kSteps;
        if (vmag2(i_s) <= vlim2) {
            hi = i_s;
            break;
        }
    }
    if (hi < 0.0) return {};
    // Refine the upper edge unless the cap itself is admissible.
    if (hi < cap) {
        double lo = hi, up = std::min(cap, hi + cap / kSteps);
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + up);
            (vmag2(mid) <= vlim2 ? lo : up) = mid;
        }
        hi = lo;
    }
    // Walk down to the segment's lower edge.
    double lo_edge = 0.0;
    if (vmag2(0.0) > vlim2) {
        double bad = 0.0, good = hi;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (bad + good);
            (vmag2(mid) <= vlim2 ? good : bad) = mid;
        }
        lo_edge = good;
    }
    return {true, hi, lo_edge};
}

// Maximum torque attainable under both inverter limits at omega_e (> 0),
// returned as an infeasible-target fallback point.
OperatingPoint max_attainable(const MachineParams& m, double omega_e) {
    const double omega_mech = omega_e / m.pole_pairs;
    auto torque_for_gamma = [&](double gamma) {
        const auto ray = voltage_ray_cap(m, gamma, omega_e, m.i_max);
        if (!ray.ok) return -kInf;
        const auto c = motor::dq_currents(ray.i_hi, gamma);
        return motor::torque(m, c.i_d, c.i_q);
    };

    int best = -1;
    double best_t = -kInf;
    for (int j = 0; j < kScanPoints; ++j) {
        const double gamma = 90.0 * j / (kScanPoints - 1);
        const double t = torque_for_gamma(gamma);
        if (t > best_t) {
            best_t = t;
            best = j;
        }
    }
    if (best < 0 || !std::isfinite(best_t)) {
        OperatingPoint op = make_point(m, 0.0, 0.0, omega_mech, false);
        return op;
    }
    const double lo = 90.0 * std::max(0, best - 1) / (kScanPoints - 1);
    const double hi = 90.0 * std::min(kScanPoints - 1, best + 1) / (kScanPoints - 1);
    const double gamma = golden_min([&](double x) { return -torque_for_gamma(x); }, lo, hi, kGammaTol);
    const auto ray = voltage_ray_cap(m, gamma, omega_e, m.i_max);
    const double i_s = ray.ok ? ray.i_hi : 0.0;
    return make_point(m, i_s, gamma, omega_mech, false);
}

} // namespace

OperatingPoint mtpa_solve(const MachineParams& m, double t_ref) {
    m.validate();
    if (t_ref < 0.0) throw std::domain_error("mtpa_solve: T_ref must be >= 0");
    if (t_ref == 0.0) {
        OperatingPoint op;
        op.feasible = true;
        return op;
    }

    auto current_for_gamma = [&](double gamma) {
        const auto r = solve_is(m, gamma, t_ref, m.i_max);
        return r.ok ? r.i_s : kInf;
    };

    int best = -1;
    double best_i = kInf;
    for (int j = 0; j < kScanPoints; ++j) {
        const double gamma = 90.0 * j / (kScanPoints - 1);
        const double i = current_for_gamma(gamma);
        if (i < best_i) {
            best_i = i;
            best = j;
        }
    }
    // Strip the standstill voltage/efficiency fill: this solver's result is
    // speed-independent by contract.
    auto bare = [&](double i_s, double gamma, bool feasible) {
        OperatingPoint op = make_point(m, i_s, gamma, 0.0, feasible);
        op.v_d = op.v_q = 0.0;
        op.eta = 0.0;
        return op;
    };

    if (best < 0) {
        // Current limit cannot reach t_ref anywhere; report the capability.
        auto torque_at_cap = [&](double gamma) {
            const auto c = motor::dq_currents(m.i_max, gamma);
            return -motor::torque(m, c.i_d, c.i_q);
        };
        const double gamma = golden_min(torque_at_cap, 0.0, 90.0, kGammaTol);
        return bare(m.i_max, gamma, false);
    }

    const double lo = 90.0 * std::max(0, best - 1) / (kScanPoints - 1);
    const double hi = 90.0 * std::min(kScanPoints - 1, best + 1) / (kScanPoints - 1);
    const double gamma = golden_min(current_for_gamma, lo, hi, kGammaTol);
    const auto root = solve_is(m, gamma, t_ref, m.i_max);
    if (!root.ok) {
        // Refined angle fell outside the feasible sliver; keep the scan point.
        const double g0 = 90.0 * best / (kScanPoints - 1);
        return bare(current_for_gamma(g0), g0, true);
    }
    return bare(root.i_s, gamma, true);
}

OperatingPoint mtpv_solve(const MachineParams& m, double t_ref, double omega_e) {
    m.validate();
    if (t_ref < 0.0) throw std::domain_error("mtpv_solve: T_ref must be >= 0");
    if (!(omega_e > 0.0)) throw std::domain_error("mtpv_solve: omega_e must be > 0");
    const double omega_mech = omega_e / m.pole_pairs;
    const double vlim = m.v_max * (1.0 + kLimitSlack);

    if (t_ref == 0.0) {
        // Zero torque: i_q = 0, so |v|^2 = (R_s i_d)^2 + omega^2 (lambda + L_d i_d)^2,
        // a quadratic minimized at the flux-weakening vertex below.
        const double r2 = m.r_s * m.r_s;
        const double wl = omega_e * omega_e * m.ld0;
        double i_d = -(wl * m.lambda_m0) / (r2 + wl * m.ld0);
        i_d = std::max(i_d, -m.i_max);
        const double i_s = -i_d;
        OperatingPoint op = make_point(m, i_s, i_s > 0.0 ? 90.0 : 0.0, omega_mech, true);
        op.feasible = op.v_mag() <= vlim;
        if (!op.feasible) {
            OperatingPoint fb = max_attainable(m, omega_e);
            return fb;
        }
        return op;
    }

    auto voltage2_for_gamma = [&](double gamma) {
        const auto r = solve_is(m, gamma, t_ref, m.i_max);
        if (!r.ok) return kInf;
        const auto c = motor::dq_currents(r.i_s, gamma);
        const auto v = motor::dq_voltages(m, c.i_d, c.i_q, omega_e);
        return v.v_d * v.v_d + v.v_q * v.v_q;
    };

    int best = -1;
    double best_v = kInf;
    for (int j = 0; j < kScanPoints; ++j) {
        const double gamma = 90.0 * j / (kScanPoints - 1);
        const double v2 = voltage2_for_gamma(gamma);
        if (v2 < best_v) {
            best_v = v2;
            best = j;
        }
    }
    if (best < 0) return max_attainable(m, omega_e);

    const double lo = 90.0 * std::max(0, best - 1) / (kScanPoints - 1);
    const double hi = 90.0 * std::min(kScanPoints - 1, best + 1) / (kScanPoints - 1);
    const double gamma = golden_min(voltage2_for_gamma, lo, hi, kGammaTol);
    const auto root = solve_is(m, gamma, t_ref, m.i_max);
    const double use_gamma = root.ok ? gamma : 90.0 * best / (kScanPoints - 1);
    const auto use_root = root.ok ? root : solve_is(m, use_gamma, t_ref, m.i_max);
    if (!use_root.ok) return max_attainable(m, omega_e);

    OperatingPoint op = make_point(m, use_root.i_s, use_gamma, omega_mech, true);
    if (op.v_mag() > vlim) return max_attainable(m, omega_e);
    return op;
}

OperatingPoint trajectory_plan(const MachineParams& m, double t_ref, double omega_mech) {
    m.validate();
    if (t_ref < 0.0) throw std::domain_error("trajectory_plan: T_ref must be >= 0");
    if (omega_mech < 0.0) throw std::domain_error("trajectory_plan: omega_mech must be >= 0");
    const double omega_e = m.omega_e(omega_mech);
    const double vlim = m.v_max * (1.0 + kLimitSlack);

    OperatingPoint mtpa = mtpa_solve(m, t_ref);
    if (mtpa.feasible) {
        OperatingPoint op = make_point(m, mtpa.i_s, mtpa.gamma_deg, omega_mech, true);
        if (op.v_mag() <= vlim) return op;
    }
    if (omega_e <= 0.0) {
        // Standstill: the voltage drop is purely resistive and MTPV is
        // undefined, so report the MTPA point with both limits re-checked.
        OperatingPoint op = make_point(m, mtpa.i_s, mtpa.gamma_deg, omega_mech, false);
        op.feasible = mtpa.feasible && op.v_mag() <= vlim;
        return op;
    }
    return mtpv_solve(m, t_ref, omega_e);
}

std::vector<double> make_axis(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("make_axis: bad range");
    std::vector<double> axis;
    for (double v = lo; v <= hi + 0.5 * step; v += step) axis.push_back(v);
    while (!axis.empty() && axis.back() > hi + 1e-12 * std::max(1.0, std::abs(hi)))
        axis.pop_back();
    return axis;
}

TorqueSpeedMap build_map(const MachineParams& m, std::vector<double> speed_axis,
                         std::vector<double> torque_axis, int workers) {
    m.validate();
    auto strictly_increasing = [](const std::vector<double>& a) {
        for (std::size_t i = 1; i < a.size(); ++i)
            if (a[i] <= a[i - 1]) return false;
        return true;
    };
    if (speed_axis.empty() || torque_axis.empty())
        throw std::invalid_argument("build_map: axes must be non-empty");
    if (!strictly_increasing(speed_axis) || !strictly_increasing(torque_axis))
        throw std::invalid_argument("build_map: axes must be strictly increasing");

    TorqueSpeedMap map;
    map.speed_axis = std::move(speed_axis);
    map.torque_axis = std::move(torque_axis);
    const std::size_t nt = map.torque_axis.size();
    map.cells.resize(map.speed_axis.size() * nt);
    parallel_for(map.cells.size(), workers, [&](std::size_t idx) {
        const std::size_t si = idx / nt;
        const std::size_t ti = idx % nt;
        map.cells[idx] = trajectory_plan(m, map.torque_axis[ti], map.speed_axis[si]);
    });
    return map;
}

TpcaReport tpca(const TorqueSpeedMap& map) {
    if (map.cells.empty()) throw std::invalid_argument("tpca: empty map");
    TpcaReport rep;
    bool seen[3] = {false, false, false};
    double value[3] = {0.0, 0.0, 0.0};

    const std::size_t nt = map.torque_axis.size();
    for (std::size_t si = 0; si < map.speed_axis.size(); ++si) {
        const double w = map.speed_axis[si];
        int region;
        if (w < kRegionLowHi)
            region = 0;
        else if (w < kRegionAccelHi)
            region = 1;
        else if (w <= kRegionHighHi)
            region = 2;
        else
            continue;

        // Max-torque feasible cell at this speed; equal torques resolve to
        // the smaller angle.
        bool found = false;
        double best_t = 0.0, best_gamma = 0.0;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const auto& op = map.at(si, ti);
            if (!op.feasible) continue;
            if (!found || op.torque > best_t ||
                (op.torque == best_t && op.gamma_deg < best_gamma)) {
                best_t = op.torque;
                best_gamma = op.gamma_deg;
                found = true;
            }
        }
        if (!found || best_gamma <= 0.0) continue;
        const double ratio = best_t / best_gamma;
        if (!seen[region] || ratio > value[region]) {
            value[region] = ratio;
            seen[region] = true;
        }
    }

    static const char* names[3] = {"low", "accelerating", "high"};
    for (int r = 0; r < 3; ++r)
        if (!seen[r])
            rep.warnings.push_back(std::string(names[r]) +
                                   " region has no usable feasible cell; value set to 0");
    rep.low = value[0];
    rep.accelerating = value[1];
    rep.high = value[2];
    rep.total = rep.low + rep.accelerating + rep.high;
    return rep;
}

namespace {

std::size_t nearest_index(const std::vector<double>& axis, double x) {
    std::size_t best = 0;
    double best_d = std::abs(axis[0] - x);
    for (std::size_t i = 1; i < axis.size(); ++i) {
        const double d = std::abs(axis[i] - x);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

} // namespace

PremiumStats premium_region_stats(const TorqueSpeedMap& map,
                                  const std::vector<OperatingPoint>& points,
                                  double threshold) {
    if (map.cells.empty()) throw std::invalid_argument("premium_region_stats: empty map");
    if (threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("premium_region_stats: threshold must lie in [0, 1]");

    std::size_t feasible = 0, premium = 0;
    for (const auto& op : map.cells) {
        if (!op.feasible) continue;
        ++feasible;
        if (op.eta >= threshold) ++premium;
    }
    PremiumStats stats;
    stats.area_fraction = feasible ? double(premium) / double(feasible) : 0.0;

    for (const auto& pt : points) {
        const std::size_t si = nearest_index(map.speed_axis, pt.omega_mech);
        const std::size_t ti = nearest_index(map.torque_axis, pt.torque);
        const auto& cell = map.at(si, ti);
        if (cell.feasible && cell.eta >= threshold) ++stats.count_in_premium;
    }
    return stats;
}

std::vector<TorqueCurve> constant_torque_trajectories(const MachineParams& m,
                                                      const std::vector<double>& currents,
                                                      double gamma_step_deg) {
    m.validate();
    if (!(gamma_step_deg > 0.0))
        throw std::invalid_argument("constant_torque_trajectories: step must be > 0");
    std::vector<TorqueCurve> curves;
    curves.reserve(currents.size());
    for (const double i_s : currents) {
        if (!(i_s > 0.0))
            throw std::invalid_argument("constant_torque_trajectories: currents must be > 0");
        TorqueCurve c;
        c.i_s = i_s;
        auto torque_at = [&](double gamma) {
            const auto dq = motor::dq_currents(i_s, gamma);
            return motor::torque(m, dq.i_d, dq.i_q);
        };
        std::size_t best = 0;
        for (double g = 0.0; g <= 90.0 + 1e-12; g += gamma_step_deg) {
            const double gamma = std::min(g, 90.0);
            c.gamma_deg.push_back(gamma);
            c.torque.push_back(torque_at(gamma));
            if (c.torque.back() > c.torque[best]) best = c.torque.size() - 1;
        }
        const double lo = c.gamma_deg[best > 0 ? best - 1 : 0];
        const double hi = c.gamma_deg[std::min(best + 1, c.gamma_deg.size() - 1)];
        c.gamma_opt_deg = golden_min([&](double g) { return -torque_at(g); }, lo, hi, kGammaTol);
        c.torque_opt = torque_at(c.gamma_opt_deg);
        curves.push_back(std::move(c));
    }
    return curves;
}

}  // namespace mlhr::traj
