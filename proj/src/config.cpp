#include "detc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "detc/io.hpp"
#include "detc/plant_scripted.hpp"

namespace detc {
namespace {

struct Entry {
    std::string key, value;
    int line = 0;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const Entry& e, const std::string& what) {
    throw ConfigError("line " + std::to_string(e.line) + ": " + e.key + ": " + what);
}

double to_double(const Entry& e, const std::string& tok) {
    double v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        fail(e, "expected a number, got '" + tok + "'");
    return v;
}

std::vector<std::string> tokens_of(const std::string& value) {
    std::vector<std::string> toks;
    std::istringstream in(value);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

std::vector<double> to_list(const Entry& e) {
    std::vector<double> out;
    for (const std::string& t : tokens_of(e.value)) out.push_back(to_double(e, t));
    return out;
}

double one_double(const Entry& e) {
    auto v = to_list(e);
    if (v.size() != 1) fail(e, "expected exactly one number");
    return v[0];
}

std::vector<double> n_doubles(const Entry& e, std::size_t n) {
    auto v = to_list(e);
    if (v.size() != n) fail(e, "expected " + std::to_string(n) + " numbers");
    return v;
}

std::int64_t one_int(const Entry& e) {
    const double v = one_double(e);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) fail(e, "expected an integer");
    return i;
}

bool one_bool(const Entry& e) {
    const std::string v = trim(e.value);
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    fail(e, "expected a boolean (0/1/true/false)");
}

std::vector<int> to_int_list(const Entry& e) {
    std::vector<int> out;
    for (double v : to_list(e)) {
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) fail(e, "expected integers");
        out.push_back(i);
    }
    return out;
}

// Quaternion ICs default to the identity so added vehicles start at rest.
void resize_attitude_ics(AttitudeParams& a, int n) {
    a.vehicles = n;
    a.q0.resize(static_cast<std::size_t>(n), Eigen::Vector4d(1, 0, 0, 0));
    a.rate0.resize(static_cast<std::size_t>(n), Eigen::Vector3d::Zero());
    a.h0.resize(static_cast<std::size_t>(n), 1.0);
}

int ic_index(const Entry& e, const std::string& tail, AttitudeParams& a) {
    Entry idx = e;
    idx.value = tail;
    const auto i = one_int(idx);
    if (i < 0) fail(e, "vehicle index must be nonnegative");
    if (i >= a.vehicles) resize_attitude_ics(a, static_cast<int>(i) + 1);
    return static_cast<int>(i);
}

void apply_plant(RunConfig& cfg, const Entry& e, const std::string& sub) {
    AttitudeParams& a = cfg.attitude;
    if (sub == "kind") {
        const std::string v = trim(e.value);
        if (v != "attitude" && v != "frozen") fail(e, "unknown plant kind '" + v + "'");
        cfg.plant_kind = v;
    } else if (sub == "vehicles") {
        const auto n = one_int(e);
        if (n <= 0) fail(e, "need at least one vehicle");
        resize_attitude_ics(a, static_cast<int>(n));
    } else if (sub == "inertia") {
        const auto v = n_doubles(e, 3);
        a.inertia = Eigen::Vector3d(v[0], v[1], v[2]);
    } else if (sub == "attitude_gain") {
        a.attitude_gain = one_double(e);
    } else if (sub == "rate_gain") {
        const auto v = to_list(e);
        if (v.size() == 1)
            a.rate_gain = v[0] * Eigen::Matrix3d::Identity();
        else if (v.size() == 3)
            a.rate_gain = Eigen::Vector3d(v[0], v[1], v[2]).asDiagonal();
        else if (v.size() == 9)
            a.rate_gain = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
        else
            fail(e, "expected 1, 3, or 9 numbers");
    } else if (sub == "hysteresis_margin") {
        a.hysteresis_margin = one_double(e);
    } else if (sub.rfind("q0.", 0) == 0) {
        const int i = ic_index(e, sub.substr(3), a);
        const auto v = n_doubles(e, 4);
        a.q0[static_cast<std::size_t>(i)] = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
    } else if (sub.rfind("rate0.", 0) == 0) {
        const int i = ic_index(e, sub.substr(6), a);
        const auto v = n_doubles(e, 3);
        a.rate0[static_cast<std::size_t>(i)] = Eigen::Vector3d(v[0], v[1], v[2]);
    } else if (sub.rfind("h0.", 0) == 0) {
        const int i = ic_index(e, sub.substr(3), a);
        a.h0[static_cast<std::size_t>(i)] = one_double(e);
    } else {
        fail(e, "unknown key");
    }
}

void apply_sim(RunConfig& cfg, const Entry& e, const std::string& sub) {
    SimOptions& s = cfg.sim;
    if (sub == "horizon") s.horizon = one_double(e);
    else if (sub == "dt") s.dt = one_double(e);
    else if (sub == "seed") s.seed = static_cast<std::uint64_t>(one_int(e));
    else if (sub == "sample_every") s.sample_every = static_cast<int>(one_int(e));
    else if (sub == "u_grid_dt") s.u_grid_dt = one_double(e);
    else if (sub == "record_trace") s.record_trace = one_bool(e);
    else if (sub == "record_events") s.record_events = one_bool(e);
    else if (sub == "divergence_norm") s.divergence_norm = one_double(e);
    else if (sub == "initial_tau_e") s.initial_tau_e = one_double(e);
    else fail(e, "unknown key");
}

void apply_net(NetConfig& n, const Entry& e, const std::string& sub) {
    TimingParams& t = n.timing;
    if (sub == "protocol") {
        const std::string v = trim(e.value);
        if (v == "sampled_data") n.protocol = ProtocolKind::sampled_data;
        else if (v == "round_robin") n.protocol = ProtocolKind::round_robin;
        else if (v == "largest_error_first") n.protocol = ProtocolKind::largest_error_first;
        else fail(e, "unknown protocol '" + v + "'");
    } else if (sub == "nodes") {
        n.nodes = to_int_list(e);
    } else if (sub == "L") {
        const auto v = n_doubles(e, 2);
        t.L0 = v[0];
        t.L1 = v[1];
    } else if (sub == "gamma") {
        const auto v = n_doubles(e, 2);
        t.gamma0 = v[0];
        t.gamma1 = v[1];
    } else if (sub == "lambda") {
        t.lambda = one_double(e);
    } else if (sub == "rho") {
        const auto v = n_doubles(e, 2);
        t.rho0 = v[0];
        t.rho1 = v[1];
    } else if (sub == "rho_tilde") {
        t.rho_tilde = one_double(e);
    } else if (sub == "tau_miet") {
        const auto v = n_doubles(e, 2);
        t.tau_miet0 = v[0];
        t.tau_miet1 = v[1];
    } else if (sub == "tau_mad") {
        t.tau_mad = one_double(e);
    } else if (sub == "vartheta") {
        t.vartheta = one_double(e);
    } else if (sub == "phi_mode") {
        const std::string v = trim(e.value);
        if (v == "derived") t.phi_mode = PhiEndpointMode::derived;
        else if (v == "override") t.phi_mode = PhiEndpointMode::override_values;
        else fail(e, "unknown clock endpoint mode '" + v + "'");
    } else if (sub == "phi_end") {
        const auto v = n_doubles(e, 2);
        t.phi_override0 = v[0];
        t.phi_override1 = v[1];
    } else if (sub == "attack_rate") {
        n.attack_rate = one_double(e);
    } else if (sub == "design_rate") {
        n.design_rate = one_double(e);
    } else if (sub == "delay") {
        const auto v = n_doubles(e, 2);
        n.delay.rate = v[0];
        n.delay.bound = v[1];
    } else if (sub == "fixed_delay") {
        n.fixed_delay = one_double(e);
    } else if (sub == "fixed_reset") {
        n.fixed_reset = one_double(e);
    } else if (sub == "attacks") {
        n.attacks = to_list(e);
    } else if (sub == "reset_coupled") {
        n.reset_coupled = one_bool(e);
    } else if (sub == "e0") {
        n.e0 = to_list(e);
    } else if (sub == "trigger.varrho") {
        n.ov_varrho = one_double(e);
    } else if (sub == "trigger.delta_chi") {
        n.ov_delta_chi = one_double(e);
    } else if (sub == "trigger.gammabar0") {
        n.ov_gammabar0 = one_double(e);
    } else if (sub == "trigger.gammabar1") {
        n.ov_gammabar1 = one_double(e);
    } else if (sub == "trigger.chi_reset") {
        n.ov_chi_reset = one_double(e);
    } else if (sub == "trigger.ramp_slope") {
        n.ov_ramp_slope = one_double(e);
    } else if (sub == "trigger.m1_predetect") {
        n.ov_m1_predetect = one_double(e);
    } else {
        fail(e, "unknown key");
    }
}

} // namespace

RunConfig parse_config(const std::string& text) {
    std::vector<Entry> entries;
    {
        std::istringstream in(text);
        std::string raw;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            if (auto pos = raw.find('#'); pos != std::string::npos) raw.erase(pos);
            const std::string s = trim(raw);
            if (s.empty()) continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line) + ": expected key = value");
            Entry e;
            e.key = trim(s.substr(0, eq));
            e.value = trim(s.substr(eq + 1));
            e.line = line;
            if (e.key.empty())
                throw ConfigError("line " + std::to_string(line) + ": empty key");
            entries.push_back(std::move(e));
        }
    }

    RunConfig cfg;
    cfg.attitude = default_attitude_params();

    int networks = 0;
    for (const Entry& e : entries)
        if (e.key == "networks") {
            const auto n = one_int(e);
            if (n <= 0) fail(e, "need at least one network");
            networks = static_cast<int>(n);
        }
    cfg.nets.resize(static_cast<std::size_t>(networks));

    // Broadcast net entries apply before indexed ones regardless of file order.
    std::vector<const Entry*> broadcast, indexed;
    for (const Entry& e : entries) {
        if (e.key == "networks") continue;
        if (e.key.rfind("net.", 0) == 0) {
            if (e.key.rfind("net.*.", 0) == 0)
                broadcast.push_back(&e);
            else
                indexed.push_back(&e);
            continue;
        }
        if (e.key.rfind("plant.", 0) == 0)
            apply_plant(cfg, e, e.key.substr(6));
        else if (e.key.rfind("sim.", 0) == 0)
            apply_sim(cfg, e, e.key.substr(4));
        else if (e.key == "mc.runs")
            cfg.mc_runs = static_cast<int>(one_int(e));
        else
            fail(e, "unknown key");
    }

    for (const Entry* e : broadcast) {
        if (cfg.nets.empty()) fail(*e, "set networks before configuring them");
        for (NetConfig& n : cfg.nets) apply_net(n, *e, e->key.substr(6));
    }
    for (const Entry* e : indexed) {
        const auto dot = e->key.find('.', 4);
        if (dot == std::string::npos) fail(*e, "expected net.<i>.<key>");
        Entry idx = *e;
        idx.value = e->key.substr(4, dot - 4);
        const auto i = one_int(idx);
        if (i < 0 || i >= static_cast<std::int64_t>(cfg.nets.size()))
            fail(*e, "network index out of range");
        apply_net(cfg.nets[static_cast<std::size_t>(i)], *e, e->key.substr(dot + 1));
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

const char* protocol_name(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::sampled_data: return "sampled_data";
        case ProtocolKind::round_robin: return "round_robin";
        case ProtocolKind::largest_error_first: return "largest_error_first";
    }
    return "?";
}

void put_list(std::ostream& os, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? " " : "") << format_double(v[i]);
}

} // namespace

std::string serialize(const RunConfig& cfg) {
    std::ostringstream os;
    os << "plant.kind = " << cfg.plant_kind << "\n";
    if (cfg.plant_kind == "attitude") {
        const AttitudeParams& a = cfg.attitude;
        os << "plant.vehicles = " << a.vehicles << "\n";
        os << "plant.inertia = ";
        put_list(os, {a.inertia.x(), a.inertia.y(), a.inertia.z()});
        os << "\nplant.attitude_gain = " << format_double(a.attitude_gain) << "\n";
        os << "plant.rate_gain = ";
        std::vector<double> kflat;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) kflat.push_back(a.rate_gain(r, c));
        put_list(os, kflat);
        os << "\nplant.hysteresis_margin = " << format_double(a.hysteresis_margin) << "\n";
        for (int i = 0; i < a.vehicles; ++i) {
            const auto u = static_cast<std::size_t>(i);
            os << "plant.q0." << i << " = ";
            put_list(os, {a.q0[u](0), a.q0[u](1), a.q0[u](2), a.q0[u](3)});
            os << "\nplant.rate0." << i << " = ";
            put_list(os, {a.rate0[u].x(), a.rate0[u].y(), a.rate0[u].z()});
            os << "\nplant.h0." << i << " = " << format_double(a.h0[u]) << "\n";
        }
    }
    os << "networks = " << cfg.nets.size() << "\n";
    for (std::size_t i = 0; i < cfg.nets.size(); ++i) {
        const NetConfig& n = cfg.nets[i];
        const TimingParams& t = n.timing;
        const std::string p = "net." + std::to_string(i) + ".";
        os << p << "protocol = " << protocol_name(n.protocol) << "\n";
        os << p << "nodes =";
        for (int s : n.nodes) os << ' ' << s;
        os << "\n";
        os << p << "L = " << format_double(t.L0) << ' ' << format_double(t.L1) << "\n";
        os << p << "gamma = " << format_double(t.gamma0) << ' ' << format_double(t.gamma1) << "\n";
        os << p << "lambda = " << format_double(t.lambda) << "\n";
        os << p << "rho = " << format_double(t.rho0) << ' ' << format_double(t.rho1) << "\n";
        os << p << "rho_tilde = " << format_double(t.rho_tilde) << "\n";
        os << p << "tau_miet = " << format_double(t.tau_miet0) << ' '
           << format_double(t.tau_miet1) << "\n";
        os << p << "tau_mad = " << format_double(t.tau_mad) << "\n";
        os << p << "vartheta = " << format_double(t.vartheta) << "\n";
        os << p << "phi_mode = "
           << (t.phi_mode == PhiEndpointMode::derived ? "derived" : "override") << "\n";
        if (t.phi_mode == PhiEndpointMode::override_values)
            os << p << "phi_end = " << format_double(t.phi_override0) << ' '
               << format_double(t.phi_override1) << "\n";
        os << p << "attack_rate = " << format_double(n.attack_rate) << "\n";
        if (n.design_rate) os << p << "design_rate = " << format_double(*n.design_rate) << "\n";
        os << p << "delay = " << format_double(n.delay.rate) << ' '
           << format_double(n.delay.bound) << "\n";
        if (n.fixed_delay) os << p << "fixed_delay = " << format_double(*n.fixed_delay) << "\n";
        if (n.fixed_reset) os << p << "fixed_reset = " << format_double(*n.fixed_reset) << "\n";
        if (n.attacks) {
            os << p << "attacks =";
            for (double a : *n.attacks) os << ' ' << format_double(a);
            os << "\n";
        }
        if (n.reset_coupled) os << p << "reset_coupled = 1\n";
        if (!n.e0.empty()) {
            os << p << "e0 = ";
            put_list(os, n.e0);
            os << "\n";
        }
        if (n.ov_varrho) os << p << "trigger.varrho = " << format_double(*n.ov_varrho) << "\n";
        if (n.ov_delta_chi)
            os << p << "trigger.delta_chi = " << format_double(*n.ov_delta_chi) << "\n";
        if (n.ov_gammabar0)
            os << p << "trigger.gammabar0 = " << format_double(*n.ov_gammabar0) << "\n";
        if (n.ov_gammabar1)
            os << p << "trigger.gammabar1 = " << format_double(*n.ov_gammabar1) << "\n";
        if (n.ov_chi_reset)
            os << p << "trigger.chi_reset = " << format_double(*n.ov_chi_reset) << "\n";
        if (n.ov_ramp_slope)
            os << p << "trigger.ramp_slope = " << format_double(*n.ov_ramp_slope) << "\n";
        if (n.ov_m1_predetect)
            os << p << "trigger.m1_predetect = " << format_double(*n.ov_m1_predetect) << "\n";
    }
    const SimOptions& s = cfg.sim;
    os << "sim.horizon = " << format_double(s.horizon) << "\n";
    os << "sim.dt = " << format_double(s.dt) << "\n";
    os << "sim.seed = " << s.seed << "\n";
    os << "sim.sample_every = " << s.sample_every << "\n";
    os << "sim.u_grid_dt = " << format_double(s.u_grid_dt) << "\n";
    os << "sim.record_trace = " << (s.record_trace ? 1 : 0) << "\n";
    os << "sim.record_events = " << (s.record_events ? 1 : 0) << "\n";
    os << "sim.divergence_norm = " << format_double(s.divergence_norm) << "\n";
    os << "sim.initial_tau_e = " << format_double(s.initial_tau_e) << "\n";
    os << "mc.runs = " << cfg.mc_runs << "\n";
    return os.str();
}

std::shared_ptr<const Plant> build_plant(const RunConfig& cfg) {
    if (cfg.plant_kind == "attitude") {
        try {
            return std::make_shared<AttitudePlant>(cfg.attitude);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(std::string("plant: ") + ex.what());
        }
    }
    int dim = 0;
    for (const NetConfig& n : cfg.nets)
        for (int s : n.nodes) dim += s;
    if (dim <= 0) throw ConfigError("frozen plant needs networked nodes");
    return std::make_shared<FrozenPlant>(dim);
}

std::vector<NetworkSetup> build_networks(const RunConfig& cfg) {
    if (cfg.nets.empty()) throw ConfigError("no networks configured");
    std::vector<NetworkSetup> out;
    int offset = 0;
    for (std::size_t i = 0; i < cfg.nets.size(); ++i) {
        const NetConfig& nc = cfg.nets[i];
        const std::string where = "net " + std::to_string(i) + ": ";
        try {
            NetworkSetup ns;
            ns.protocol = make_protocol(nc.protocol, nc.nodes);
            TimingParams tp = nc.timing;
            tp.lambda_exp = nc.design_rate.value_or(nc.attack_rate);
            if (!(tp.lambda_exp > 0))
                throw ConfigError(where + "set attack_rate or design_rate positive");
            if (ns.protocol.lambda > tp.lambda + 1e-12)
                throw ConfigError(where + "protocol contraction " +
                                  format_double(ns.protocol.lambda) +
                                  " exceeds the configured factor " + format_double(tp.lambda));
            ns.timing = tp;
            ns.trigger = make_trigger(tp);
            TriggerCoefficients& c = ns.trigger.coeffs;
            if (nc.ov_varrho) c.varrho_tilde = *nc.ov_varrho;
            if (nc.ov_delta_chi) c.delta_chi = *nc.ov_delta_chi;
            if (nc.ov_gammabar0) c.gammabar0 = *nc.ov_gammabar0;
            if (nc.ov_gammabar1) c.gammabar1 = *nc.ov_gammabar1;
            if (nc.ov_chi_reset) c.chi_reset = *nc.ov_chi_reset;
            if (nc.ov_ramp_slope) c.ramp_slope = *nc.ov_ramp_slope;
            if (nc.ov_m1_predetect) c.m1_predetect = *nc.ov_m1_predetect;
            ns.offset = offset;
            offset += ns.protocol.dim;
            ns.attack_rate = nc.attack_rate;
            ns.delay_law = nc.delay;
            ns.scripted_attacks = nc.attacks;
            ns.fixed_delay = nc.fixed_delay;
            ns.fixed_reset = nc.fixed_reset;
            ns.reset_coupled = nc.reset_coupled;
            out.push_back(std::move(ns));
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(where + ex.what());
        }
    }
    return out;
}

HybridState build_initial_state(const RunConfig& cfg, const Plant& plant,
                                const std::vector<NetworkSetup>& nets) {
    HybridState st = initial_state(plant, plant.default_state(), nets, cfg.sim.initial_tau_e);
    for (std::size_t i = 0; i < cfg.nets.size() && i < nets.size(); ++i) {
        const std::vector<double>& e0 = cfg.nets[i].e0;
        if (e0.empty()) continue;
        if (static_cast<int>(e0.size()) != nets[i].protocol.dim)
            throw ConfigError("net " + std::to_string(i) + ": e0 needs " +
                              std::to_string(nets[i].protocol.dim) + " values");
        for (int d = 0; d < nets[i].protocol.dim; ++d)
            st.e(nets[i].offset + d) = e0[static_cast<std::size_t>(d)];
    }
    return st;
}

} // namespace detc
