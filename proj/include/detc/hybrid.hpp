#ifndef DETC_HYBRID_HPP
#define DETC_HYBRID_HPP

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "detc/plant.hpp"
#include "detc/protocol.hpp"
#include "detc/rng.hpp"
#include "detc/stochastic.hpp"
#include "detc/timing.hpp"
#include "detc/trigger.hpp"

namespace detc {

struct HybridTime {
    double t = 0;
    std::int64_t j = 0;
};

struct HybridState {
    Eigen::VectorXd x;                       // plant + controller state
    Eigen::VectorXd e, s;                    // network error and stored correction
    Eigen::VectorXd tau_e, chi, phi0, phi1;  // per-network timers, triggers, clocks
    std::vector<std::int64_t> k;
    std::vector<int> l, m;
};

enum class EventKind { flow_sample, transmission, update_success, update_fail, logic_flip };

const char* event_name(EventKind k);

struct EventRecord {
    EventKind kind = EventKind::flow_sample;
    int net = -1;
    double t = 0;
    std::int64_t j = 0;
    std::int64_t k = 0;  // post-jump
    int l = 0, m = 0;    // post-jump
    double tau_e = 0;    // timer value when the event fired
    double tau_delay = std::numeric_limits<double>::quiet_NaN();
    bool window_hit = false;
};

struct TraceRecord {
    HybridTime tj;
    EventKind kind = EventKind::flow_sample;
    int net = -1;
    double U = 0;
    bool any_blocked = false;  // some network is recovering from a blocked update
    HybridState state;
};

struct NetworkSetup {
    Protocol protocol;
    TimingParams timing;
    TriggerParams trigger;  // usually make_trigger(timing)
    int offset = 0;         // block position in the stacked signal
    double attack_rate = 0; // pulse rate of the attack process; 0 disables it
    DelayLaw delay_law;
    std::optional<std::vector<double>> scripted_attacks;
    std::optional<double> fixed_delay;
    std::optional<double> fixed_reset;  // pins the reset draw scale
    bool reset_coupled = false;         // reset scale = realized attack gap
};

struct SimOptions {
    double horizon = 20.0;
    double dt = 1e-4;
    int sample_every = 10;  // flow samples kept per this many accepted substeps
    std::uint64_t seed = 1;
    bool record_trace = true;
    bool record_events = true;
    double divergence_norm = 1e6;
    double initial_tau_e = -1;  // <0 means: start at the idle deadline
    double u_grid_dt = 0;       // >0: record the certificate on this time grid
};

struct NetTally {
    std::int64_t transmissions = 0, successes = 0, failures = 0, logic_flips = 0;
    double min_gap = std::numeric_limits<double>::infinity();
};

struct SimResult {
    std::vector<TraceRecord> trace;
    std::vector<EventRecord> events;
    HybridState final_state;
    HybridTime final_tj;
    std::vector<NetTally> tally;
    std::vector<AttackTimeline> attacks;  // the realizations actually used
    std::vector<std::pair<double, double>> u_grid;  // (t, certificate)
    std::vector<double> jump_du;  // certificate change across transmissions
    bool diverged = false;
    double diverged_at = 0;
};

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Classical one-step integrator used throughout the engine.
template <typename F>
Eigen::VectorXd rk4_step(const F& f, double t, const Eigen::VectorXd& y, double h) {
    const Eigen::VectorXd k1 = f(t, y);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    const Eigen::VectorXd k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Fresh state on the trigger-idle boundary: zero error/correction/trigger,
// timers at the idle deadline (so every network transmits immediately),
// clocks at their starting value 1/lambda frozen at the deadline endpoint.
HybridState initial_state(const Plant& plant, const Eigen::VectorXd& x0,
                          const std::vector<NetworkSetup>& nets,
                          double initial_tau_e = -1);

// Combined certificate: storage plus per-network gamma_l phi_l W^2 + chi.
double certificate_value(const Plant& plant, const std::vector<NetworkSetup>& nets,
                         const HybridState& st);

class Simulator {
public:
    Simulator(std::shared_ptr<const Plant> plant, std::vector<NetworkSetup> nets,
              SimOptions opts);

    // Runs one realization from the given initial state (default: fresh).
    // Re-entrant: every call re-derives its streams from the seed.
    SimResult run() const;
    SimResult run(const HybridState& from) const;

    const std::vector<NetworkSetup>& networks() const { return nets_; }
    const SimOptions& options() const { return opts_; }
    const Plant& plant() const { return *plant_; }

private:
    std::shared_ptr<const Plant> plant_;
    std::vector<NetworkSetup> nets_;
    SimOptions opts_;
};

} // namespace detc

#endif
