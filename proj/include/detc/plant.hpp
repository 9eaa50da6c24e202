#ifndef DETC_PLANT_HPP
#define DETC_PLANT_HPP

#include <Eigen/Core>

namespace detc {

// Continuous-time plant/controller pair closed over a held signal estimate.
// The simulator owns the network-induced error and integrates it alongside
// the state, so the plant reports both the state flow and the flow of the
// networked signal for a given held estimate.
class Plant {
public:
    virtual ~Plant() = default;

    virtual int state_dim() const = 0;
    virtual int signal_dim() const = 0;

    // Flow with the held estimate sig_hat; fills dx (state) and dsig (signal).
    virtual void flow(const Eigen::VectorXd& x, const Eigen::VectorXd& sig_hat,
                      Eigen::VectorXd& dx, Eigen::VectorXd& dsig) const = 0;

    // Networked signal as a function of the state.
    virtual Eigen::VectorXd signal(const Eigen::VectorXd& x) const = 0;

    // Configured start state (zero unless the plant carries one).
    virtual Eigen::VectorXd default_state() const {
        return Eigen::VectorXd::Zero(state_dim());
    }

    // Storage function used in the combined certificate.
    virtual double storage(const Eigen::VectorXd& x) const = 0;

    // Numerical upkeep after an accepted step (e.g. renormalizing unit
    // subvectors). Must not move the state by more than O(eps).
    virtual void post_step(Eigen::VectorXd&) const {}

    // Guarded discrete events (logic variables). An event is due when its
    // guard is nonpositive; the jump must make the guard positive again.
    virtual int event_count() const { return 0; }
    virtual double event_guard(int, const Eigen::VectorXd&) const { return 1.0; }
    virtual void event_jump(int, Eigen::VectorXd&) const {}
    // Network whose trigger the event also fires, or -1.
    virtual int event_network(int) const { return -1; }
};

} // namespace detc

#endif
