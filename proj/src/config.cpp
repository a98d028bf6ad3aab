#include "ssctm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ssctm/errors.hpp"

namespace ssctm {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_numbers(const std::string& s, int line) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(line, "not a number: '" + tok + "'");
        }
    }
    return out;
}

std::string fmt(double x) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_row(const std::vector<double>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ' ';
        out += fmt(xs[i]);
    }
    return out;
}

}  // namespace

LoadedConfig parse_config(const std::string& text) {
    LoadedConfig out;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line = 0;

    std::vector<double> l, v, w, njam, beta, U, alpha;
    std::vector<std::vector<double>> capacity, rate, kp, ki;
    std::vector<double> pol_u, pol_kappa;
    std::optional<double> alinea_gain, alinea_period;
    std::vector<double> alinea_ncrit, metaline_ncrit;
    std::optional<double> metaline_period;
    std::optional<double> dt_s, queue_cap;
    std::optional<long long> horizon, seed, init_mode;
    std::vector<double> lanes, init_q, init_n, metered_row;
    std::vector<std::pair<double, std::vector<double>>> demand_rows;
    std::optional<double> ctrl_start_hr, ctrl_end_hr, sim_start_hr;

    while (std::getline(is, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line, "unterminated section header");
            section = s.substr(1, s.size() - 2);
            if (section != "highway" && section != "buffers" && section != "markov" &&
                section != "policy" && section != "baseline" && section != "sim")
                throw ParseError(line, "unknown section [" + section + "]");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected key = values");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        std::vector<double> nums = parse_numbers(val, line);

        auto want = [&](bool cond, const char* what) {
            if (!cond) throw ParseError(line, std::string("bad value for ") + what);
        };

        if (section == "highway") {
            if (key == "l") l = nums;
            else if (key == "v") v = nums;
            else if (key == "w") w = nums;
            else if (key == "n_jam") njam = nums;
            else if (key == "beta") beta = nums;
            else throw ParseError(line, "unknown key '" + key + "' in [highway]");
        } else if (section == "buffers") {
            if (key == "U") U = nums;
            else if (key == "alpha") alpha = nums;
            else throw ParseError(line, "unknown key '" + key + "' in [buffers]");
        } else if (section == "markov") {
            if (key == "capacity") capacity.push_back(nums);
            else if (key == "rate") rate.push_back(nums);
            else throw ParseError(line, "unknown key '" + key + "' in [markov]");
        } else if (section == "policy") {
            if (key == "u") pol_u = nums;
            else if (key == "kappa") pol_kappa = nums;
            else throw ParseError(line, "unknown key '" + key + "' in [policy]");
        } else if (section == "baseline") {
            if (key == "alinea_gain") { want(nums.size() == 1, key.c_str()); alinea_gain = nums[0]; }
            else if (key == "alinea_period_s") { want(nums.size() == 1, key.c_str()); alinea_period = nums[0]; }
            else if (key == "alinea_ncrit") alinea_ncrit = nums;
            else if (key == "metaline_kp") kp.push_back(nums);
            else if (key == "metaline_ki") ki.push_back(nums);
            else if (key == "metaline_ncrit") metaline_ncrit = nums;
            else if (key == "metaline_period_s") { want(nums.size() == 1, key.c_str()); metaline_period = nums[0]; }
            else throw ParseError(line, "unknown key '" + key + "' in [baseline]");
        } else if (section == "sim") {
            if (key == "dt_s") { want(nums.size() == 1, key.c_str()); dt_s = nums[0]; }
            else if (key == "horizon_steps") { want(nums.size() == 1, key.c_str()); horizon = llround(nums[0]); }
            else if (key == "seed") { want(nums.size() == 1, key.c_str()); seed = llround(nums[0]); }
            else if (key == "queue_cap_veh_per_lane") { want(nums.size() == 1, key.c_str()); queue_cap = nums[0]; }
            else if (key == "lanes") lanes = nums;
            else if (key == "initial_mode") { want(nums.size() == 1, key.c_str()); init_mode = llround(nums[0]); }
            else if (key == "initial_q") init_q = nums;
            else if (key == "initial_n") init_n = nums;
            else if (key == "demand") {
                want(nums.size() >= 2, key.c_str());
                demand_rows.emplace_back(nums[0], std::vector<double>(nums.begin() + 1, nums.end()));
            }
            else if (key == "control_start_hr") { want(nums.size() == 1, key.c_str()); ctrl_start_hr = nums[0]; }
            else if (key == "control_end_hr") { want(nums.size() == 1, key.c_str()); ctrl_end_hr = nums[0]; }
            else if (key == "metered") metered_row = nums;
            else if (key == "sim_start_hr") { want(nums.size() == 1, key.c_str()); sim_start_hr = nums[0]; }
            else throw ParseError(line, "unknown key '" + key + "' in [sim]");
        } else {
            throw ParseError(line, "key before any section");
        }
    }

    const int K = static_cast<int>(l.size());
    if (K == 0) throw ValidationError("highway.l", "missing");
    auto need_k = [&](const std::vector<double>& xs, const char* name) {
        if (static_cast<int>(xs.size()) != K)
            throw ValidationError(std::string("highway.") + name,
                                  "expected " + std::to_string(K) + " entries");
    };
    need_k(v, "v");
    need_k(w, "w");
    need_k(njam, "n_jam");
    need_k(beta, "beta");
    if (static_cast<int>(U.size()) != K) throw ValidationError("buffers.U", "expected K entries");
    if (static_cast<int>(alpha.size()) != K)
        throw ValidationError("buffers.alpha", "expected K entries");

    out.highway.cells.resize(K);
    out.highway.buffers.resize(K);
    for (int k = 0; k < K; ++k) {
        out.highway.cells[k] = CellParams{l[k], v[k], w[k], njam[k], beta[k]};
        out.highway.buffers[k] = BufferParams{U[k], alpha[k]};
    }
    out.markov.mode_count = static_cast<int>(capacity.size());
    out.markov.capacities = capacity;
    out.markov.transition_rates_per_hr = rate;
    validate(out.highway, out.markov);

    if (!pol_u.empty() || !pol_kappa.empty()) {
        AffineControlPolicy p{pol_u, pol_kappa};
        validate_policy(out.highway, p);
        out.policy = p;
    }

    std::vector<double> ncrit_default(K);
    for (int k = 0; k < K; ++k) ncrit_default[k] = critical_density(out.highway, out.markov, k);
    if (alinea_gain) {
        AlineaSpec a;
        a.gain = *alinea_gain;
        a.period_s = alinea_period.value_or(10.0);
        a.n_crit = alinea_ncrit.empty() ? ncrit_default : alinea_ncrit;
        if (static_cast<int>(a.n_crit.size()) != K)
            throw ValidationError("baseline.alinea_ncrit", "expected K entries");
        out.alinea = a;
    }
    if (!kp.empty() || !ki.empty()) {
        MetalineSpec m;
        m.KP = kp;
        m.KI = ki;
        m.period_s = metaline_period.value_or(10.0);
        m.n_crit = metaline_ncrit.empty() ? ncrit_default : metaline_ncrit;
        if (static_cast<int>(kp.size()) != K - 1 || static_cast<int>(ki.size()) != K - 1)
            throw ValidationError("baseline.metaline_kp", "expected K-1 rows");
        for (const auto& row : kp)
            if (static_cast<int>(row.size()) != K)
                throw ValidationError("baseline.metaline_kp", "expected K entries per row");
        for (const auto& row : ki)
            if (static_cast<int>(row.size()) != K)
                throw ValidationError("baseline.metaline_ki", "expected K entries per row");
        if (static_cast<int>(m.n_crit.size()) != K)
            throw ValidationError("baseline.metaline_ncrit", "expected K entries");
        out.metaline = m;
    }

    out.sim.dt_hr = dt_s.value_or(10.0) / 3600.0;
    out.sim.horizon_steps = horizon.value_or(0);
    out.sim.seed = static_cast<uint64_t>(seed.value_or(0));
    if (queue_cap) out.sim.queue_cap_veh_per_lane = *queue_cap;
    out.sim.lanes_per_ramp = lanes;
    out.sim.initial_state.mode = static_cast<int>(init_mode.value_or(1));
    out.sim.initial_state.queues_veh = init_q.empty() ? std::vector<double>(K, 0.0) : init_q;
    out.sim.initial_state.densities_veh_per_km =
        init_n.empty() ? std::vector<double>(K, 0.0) : init_n;
    for (const auto& [hr, row] : demand_rows) {
        DemandStep ds;
        ds.start_step = llround(hr / out.sim.dt_hr);
        ds.alpha = row;
        out.sim.demand_schedule.push_back(ds);
    }
    if (ctrl_start_hr) out.sim.control_start_step = llround(*ctrl_start_hr / out.sim.dt_hr);
    if (ctrl_end_hr) out.sim.control_end_step = llround(*ctrl_end_hr / out.sim.dt_hr);
    out.has_sim = dt_s.has_value() || horizon.has_value();
    out.sim_start_hr = sim_start_hr.value_or(0.0);

    out.metered.assign(std::max(0, K - 1), true);
    if (!metered_row.empty()) {
        if (static_cast<int>(metered_row.size()) != K - 1)
            throw ValidationError("sim.metered", "expected K-1 entries");
        for (int i = 0; i < K - 1; ++i) out.metered[i] = metered_row[i] != 0.0;
    } else {
        // Ramps without demand anywhere in the schedule are not metered.
        for (int i = 0; i < K - 1; ++i) {
            double peak = out.highway.buffers[i + 1].demand_veh_per_hr;
            for (const DemandStep& ds : out.sim.demand_schedule)
                peak = std::max(peak, ds.alpha[i + 1]);
            out.metered[i] = peak > 0.0;
        }
    }

    if (out.has_sim) validate_sim(out.highway, out.markov, out.sim);
    return out;
}

HighwayConfig peak_demand_highway(const LoadedConfig& cfg) {
    HighwayConfig out = cfg.highway;
    for (size_t k = 0; k < out.buffers.size(); ++k) {
        double peak = out.buffers[k].demand_veh_per_hr;
        for (const DemandStep& ds : cfg.sim.demand_schedule)
            peak = std::max(peak, ds.alpha[k]);
        out.buffers[k].demand_veh_per_hr =
            std::min(peak, out.buffers[k].capacity_veh_per_hr);
    }
    return out;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("config", "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string write_config(const LoadedConfig& cfg) {
    std::ostringstream os;
    const int K = cfg.highway.num_cells();
    auto col = [&](auto get) {
        std::vector<double> xs(K);
        for (int k = 0; k < K; ++k) xs[k] = get(k);
        return fmt_row(xs);
    };
    os << "[highway]\n";
    os << "l = " << col([&](int k) { return cfg.highway.cells[k].length_km; }) << "\n";
    os << "v = " << col([&](int k) { return cfg.highway.cells[k].free_flow_speed_kmh; }) << "\n";
    os << "w = " << col([&](int k) { return cfg.highway.cells[k].congestion_wave_speed_kmh; })
       << "\n";
    os << "n_jam = " << col([&](int k) { return cfg.highway.cells[k].jam_density_veh_per_km; })
       << "\n";
    os << "beta = " << col([&](int k) { return cfg.highway.cells[k].mainline_ratio; }) << "\n";
    os << "[buffers]\n";
    os << "U = " << col([&](int k) { return cfg.highway.buffers[k].capacity_veh_per_hr; })
       << "\n";
    os << "alpha = " << col([&](int k) { return cfg.highway.buffers[k].demand_veh_per_hr; })
       << "\n";
    os << "[markov]\n";
    for (const auto& row : cfg.markov.capacities) os << "capacity = " << fmt_row(row) << "\n";
    for (const auto& row : cfg.markov.transition_rates_per_hr)
        os << "rate = " << fmt_row(row) << "\n";
    if (cfg.policy) {
        os << "[policy]\n";
        os << "u = " << fmt_row(cfg.policy->u_veh_per_hr) << "\n";
        os << "kappa = " << fmt_row(cfg.policy->kappa_kmh) << "\n";
    }
    if (cfg.alinea || cfg.metaline) {
        os << "[baseline]\n";
        if (cfg.alinea) {
            os << "alinea_gain = " << fmt(cfg.alinea->gain) << "\n";
            os << "alinea_period_s = " << fmt(cfg.alinea->period_s) << "\n";
            os << "alinea_ncrit = " << fmt_row(cfg.alinea->n_crit) << "\n";
        }
        if (cfg.metaline) {
            for (const auto& row : cfg.metaline->KP)
                os << "metaline_kp = " << fmt_row(row) << "\n";
            for (const auto& row : cfg.metaline->KI)
                os << "metaline_ki = " << fmt_row(row) << "\n";
            os << "metaline_ncrit = " << fmt_row(cfg.metaline->n_crit) << "\n";
            os << "metaline_period_s = " << fmt(cfg.metaline->period_s) << "\n";
        }
    }
    os << "[sim]\n";
    os << "dt_s = " << fmt(cfg.sim.dt_hr * 3600.0) << "\n";
    os << "horizon_steps = " << cfg.sim.horizon_steps << "\n";
    os << "seed = " << cfg.sim.seed << "\n";
    if (cfg.sim.queue_cap_veh_per_lane)
        os << "queue_cap_veh_per_lane = " << fmt(*cfg.sim.queue_cap_veh_per_lane) << "\n";
    if (!cfg.sim.lanes_per_ramp.empty())
        os << "lanes = " << fmt_row(cfg.sim.lanes_per_ramp) << "\n";
    os << "initial_mode = " << cfg.sim.initial_state.mode << "\n";
    os << "initial_q = " << fmt_row(cfg.sim.initial_state.queues_veh) << "\n";
    os << "initial_n = " << fmt_row(cfg.sim.initial_state.densities_veh_per_km) << "\n";
    for (const DemandStep& ds : cfg.sim.demand_schedule) {
        std::vector<double> row{ds.start_step * cfg.sim.dt_hr};
        row.insert(row.end(), ds.alpha.begin(), ds.alpha.end());
        os << "demand = " << fmt_row(row) << "\n";
    }
    if (cfg.sim.control_start_step)
        os << "control_start_hr = " << fmt(*cfg.sim.control_start_step * cfg.sim.dt_hr) << "\n";
    if (cfg.sim.control_end_step)
        os << "control_end_hr = " << fmt(*cfg.sim.control_end_step * cfg.sim.dt_hr) << "\n";
    if (cfg.sim_start_hr != 0.0) os << "sim_start_hr = " << fmt(cfg.sim_start_hr) << "\n";
    {
        std::vector<double> m(cfg.metered.size());
        for (size_t i = 0; i < m.size(); ++i) m[i] = cfg.metered[i] ? 1.0 : 0.0;
        if (!m.empty()) os << "metered = " << fmt_row(m) << "\n";
    }
    return os.str();
}

}  // namespace ssctm
