#include "mlhr/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlhr/common.hpp"

namespace mlhr::io {

namespace {

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw std::invalid_argument(std::string("config: missing numeric field '") + key + "'");
    }
    return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
        throw std::invalid_argument(std::string("config: field '") + key + "' must be numeric");
    }
    return j[key].get<double>();
}

} // namespace

motor::MachineParams machine_from_json(const json& j) {
    motor::MachineParams m;
    m.r_s = require_number(j, "R_s");
    m.pole_pairs = static_cast<int>(require_number(j, "p"));
    m.lambda_m0 = require_number(j, "lambda_m0");
    m.ld0 = require_number(j, "Ld0");
    m.lq0 = require_number(j, "Lq0");
    m.sat_iq = number_or(j, "sat_iq", 0.0);
    m.i_max = require_number(j, "I_m");
    m.v_max = require_number(j, "V_m");
    if (j.contains("loss_coeffs")) {
        const json& lc = j["loss_coeffs"];
        m.loss.k_h = number_or(lc, "k_h", 0.0);
        m.loss.k_e = number_or(lc, "k_e", 0.0);
        m.loss.k_mech = number_or(lc, "k_mech", 0.0);
    }
    m.validate();
    return m;
}

json machine_to_json(const motor::MachineParams& m) {
    json j;
    j["R_s"] = round9(m.r_s);
    j["p"] = m.pole_pairs;
    j["lambda_m0"] = round9(m.lambda_m0);
    j["Ld0"] = round9(m.ld0);
    j["Lq0"] = round9(m.lq0);
    j["sat_iq"] = round9(m.sat_iq);
    j["I_m"] = round9(m.i_max);
    j["V_m"] = round9(m.v_max);
    j["loss_coeffs"] = {{"k_h", round9(m.loss.k_h)},
                        {"k_e", round9(m.loss.k_e)},
                        {"k_mech", round9(m.loss.k_mech)}};
    return j;
}

motor::DesignVector design_from_json(const json& j) {
    motor::DesignVector d;
    for (std::size_t i = 0; i < motor::kDesignFieldNames.size(); ++i) {
        d.v[i] = require_number(j, motor::kDesignFieldNames[i]);
    }
    return d;
}

json design_to_json(const motor::DesignVector& d) {
    json j;
    for (std::size_t i = 0; i < motor::kDesignFieldNames.size(); ++i) {
        j[motor::kDesignFieldNames[i]] = round9(d.v[i]);
    }
    return j;
}

vehicle::VehicleParams vehicle_from_json(const json& j) {
    vehicle::VehicleParams vp;
    vp.m0 = require_number(j, "m0");
    vp.m1 = require_number(j, "m1");
    vp.m_app = require_number(j, "m_app");
    vp.r_w = require_number(j, "R_w");
    vp.c_d = require_number(j, "C_d");
    vp.area = require_number(j, "A");
    vp.c_r = require_number(j, "C_r");
    vp.wheelbase = require_number(j, "L");
    vp.a_front = require_number(j, "a_front");
    vp.h_cg = require_number(j, "H_CG");
    vp.gear = require_number(j, "G_r");
    vp.eta_trans = require_number(j, "eta_trans");
    vp.mu_max = require_number(j, "mu_max");
    vp.t_m_max = require_number(j, "T_m_max");
    vp.rho_air = number_or(j, "rho_air", 1.225);
    vp.g = number_or(j, "g", 9.81);
    vp.k_roll = number_or(j, "K", 0.0);
    vp.validate();
    return vp;
}

json vehicle_to_json(const vehicle::VehicleParams& vp) {
    json j;
    j["m0"] = round9(vp.m0);
    j["m1"] = round9(vp.m1);
    j["m_app"] = round9(vp.m_app);
    j["R_w"] = round9(vp.r_w);
    j["C_d"] = round9(vp.c_d);
    j["A"] = round9(vp.area);
    j["C_r"] = round9(vp.c_r);
    j["L"] = round9(vp.wheelbase);
    j["a_front"] = round9(vp.a_front);
    j["H_CG"] = round9(vp.h_cg);
    j["G_r"] = round9(vp.gear);
    j["eta_trans"] = round9(vp.eta_trans);
    j["mu_max"] = round9(vp.mu_max);
    j["T_m_max"] = round9(vp.t_m_max);
    j["rho_air"] = round9(vp.rho_air);
    j["g"] = round9(vp.g);
    j["K"] = round9(vp.k_roll);
    return j;
}

optimizer::Nsga2Config nsga2_config_from_json(const json& j) {
    optimizer::Nsga2Config cfg;
    cfg.pop_size = static_cast<std::size_t>(number_or(j, "pop_size", double(cfg.pop_size)));
    cfg.max_generations =
        static_cast<int>(number_or(j, "max_generations", double(cfg.max_generations)));
    cfg.p_crossover = number_or(j, "p_crossover", cfg.p_crossover);
    cfg.p_mutation = number_or(j, "p_mutation", cfg.p_mutation);
    cfg.elitism_rate = number_or(j, "elitism_rate", cfg.elitism_rate);
    cfg.seed = static_cast<std::uint64_t>(number_or(j, "seed", double(cfg.seed)));
    cfg.mlhr_batch = static_cast<std::size_t>(number_or(j, "mlhr_batch", double(cfg.mlhr_batch)));
    cfg.mlhr_oversample =
        static_cast<std::size_t>(number_or(j, "mlhr_oversample", double(cfg.mlhr_oversample)));
    cfg.validate();
    return cfg;
}

vehicle::DriveCycle read_drive_cycle_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open cycle file");

    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
            s.pop_back();
        }
        return s;
    };

    std::string line;
    if (!std::getline(in, line) || strip(line) != "t_s,v_mps") {
        throw ParseError(path + " line 1: expected header 't_s,v_mps'");
    }

    vehicle::DriveCycle cycle;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ParseError(path + " line " + std::to_string(lineno) +
                             ": expected exactly two comma-separated values");
        }
        auto parse = [&](const std::string& cell) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cell.size() || cell.empty()) {
                throw ParseError(path + " line " + std::to_string(lineno) +
                                 ": malformed number '" + cell + "'");
            }
            return value;
        };
        cycle.t.push_back(parse(line.substr(0, comma)));
        cycle.v.push_back(parse(line.substr(comma + 1)));
    }
    try {
        cycle.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
    return cycle;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << (c ? "," : "") << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "," : "") << format9(row[c]);
        }
        out << '\n';
    }
    write_text(path, out.str());
}

void write_map_csv(const std::string& path, const traj::TorqueSpeedMap& map) {
    std::vector<std::vector<double>> rows;
    rows.reserve(map.cells.size());
    for (std::size_t si = 0; si < map.speed_axis.size(); ++si) {
        for (std::size_t ti = 0; ti < map.torque_axis.size(); ++ti) {
            const auto& cell = map.at(si, ti);
            rows.push_back({map.speed_axis[si], map.torque_axis[ti], cell.gamma_deg,
                            cell.i_s, cell.eta, cell.feasible ? 1.0 : 0.0});
        }
    }
    write_csv(path, {"speed_rad_s", "torque_Nm", "gamma_deg", "i_s_A", "eta", "feasible"},
              rows);
}

void write_points_csv(const std::string& path, const std::vector<vehicle::CyclePoint>& pts) {
    std::vector<std::vector<double>> rows;
    rows.reserve(pts.size());
    for (const auto& p : pts) {
        rows.push_back({p.t, p.omega_mech, p.torque, p.feasible ? 1.0 : 0.0});
    }
    write_csv(path, {"t_s", "omega_mech_rad_s", "torque_Nm", "feasible"}, rows);
}

void write_history_csv(const std::string& path, const std::vector<optimizer::HistoryRow>& rows) {
    std::vector<std::vector<double>> table;
    table.reserve(rows.size());
    for (const auto& r : rows) {
        table.push_back({double(r.generation), double(r.true_evals), r.hypervolume, r.best_cost});
    }
    write_csv(path, {"generation", "true_evals", "hypervolume", "best_cost"}, table);
}

json front_to_json(const optimizer::Nsga2Result& result) {
    json j;
    j["true_evals"] = result.true_evals;
    j["aborted"] = result.aborted;
    j["generation_found"] = result.front.generation_found;
    j["hypervolume"] =
        round9(result.history.empty() ? 0.0 : result.history.back().hypervolume);
    json members = json::array();
    for (const auto& ind : result.front.members) {
        json row;
        row["u"] = ind.u;
        row["x"] = ind.x;
        row["objectives"] = ind.objectives;
        row["violations"] = ind.violations;
        members.push_back(round9_tree(std::move(row)));
    }
    j["front"] = std::move(members);
    return j;
}

void write_text(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json round9_tree(json j) {
    if (j.is_number_float()) return round9(j.get<double>());
    if (j.is_array() || j.is_object()) {
        for (auto& item : j) item = round9_tree(std::move(item));
    }
    return j;
}

}  // namespace mlhr::io
