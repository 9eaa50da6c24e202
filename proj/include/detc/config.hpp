#ifndef DETC_CONFIG_HPP
#define DETC_CONFIG_HPP

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "detc/hybrid.hpp"
#include "detc/plant.hpp"
#include "detc/plant_attitude.hpp"

namespace detc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Per-network block of a run description. design_rate feeds the certification
// formulas; attack_rate drives the simulated pulse process (0 disables it).
struct NetConfig {
    ProtocolKind protocol = ProtocolKind::sampled_data;
    std::vector<int> nodes;
    TimingParams timing;
    double attack_rate = 0;
    std::optional<double> design_rate;
    DelayLaw delay;
    std::optional<double> fixed_delay;
    std::optional<double> fixed_reset;
    std::optional<std::vector<double>> attacks;
    bool reset_coupled = false;
    std::vector<double> e0;
    std::optional<double> ov_varrho, ov_delta_chi, ov_gammabar0, ov_gammabar1,
        ov_chi_reset, ov_ramp_slope, ov_m1_predetect;
};

struct RunConfig {
    std::string plant_kind = "attitude";
    AttitudeParams attitude;
    std::vector<NetConfig> nets;
    SimOptions sim;
    int mc_runs = 0;
};

// Flat key = value text. '#' starts a comment, values are whitespace-separated
// scalars or lists, net.*.key broadcasts to every network and net.<i>.key
// overrides one regardless of file order. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical text form; parse_config(serialize(c)) reproduces c exactly.
std::string serialize(const RunConfig& cfg);

std::shared_ptr<const Plant> build_plant(const RunConfig& cfg);
std::vector<NetworkSetup> build_networks(const RunConfig& cfg);
HybridState build_initial_state(const RunConfig& cfg, const Plant& plant,
                                const std::vector<NetworkSetup>& nets);

} // namespace detc

#endif
