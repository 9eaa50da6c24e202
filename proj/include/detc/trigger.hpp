#ifndef DETC_TRIGGER_HPP
#define DETC_TRIGGER_HPP

#include <cmath>
#include <limits>
#include <stdexcept>

#include "detc/timing.hpp"

namespace detc {

// Triggering strategy of one network. Coefficients default to the values the
// design conditions assume (template_coefficients); they stay configurable so
// alternative published variants can be reproduced.
struct TriggerParams {
    TriggerCoefficients coeffs;
    double tau_miet0 = 0, tau_miet1 = 0, vartheta = 0;
};

inline TriggerParams make_trigger(const TimingParams& p) {
    TriggerParams t;
    t.coeffs = template_coefficients(p);
    t.tau_miet0 = p.tau_miet0;
    t.tau_miet1 = p.tau_miet1;
    t.vartheta = p.vartheta;
    return t;
}

// Detection phase of the trigger variable after a blocked update: a ramp at
// a constant rate wipes the value recorded at detection within a 1/vartheta
// fraction of the retransmission floor, then the rate drops to -1 so the
// variable is guaranteed nonpositive at the floor.
struct TriggerPhase {
    bool ramping = false;
    double ramp_height = 0;    // trigger value when the blocked update landed
    double ramp_end_tau = std::numeric_limits<double>::infinity();

    void on_transmission() { *this = TriggerPhase{}; }
    void on_blocked_update(const TriggerParams& t, double tau_j, double chi_now) {
        ramping = true;
        ramp_height = chi_now;
        ramp_end_tau = tau_j + t.tau_miet1 / t.vartheta;
    }
};

// Flow rate of the trigger variable.
inline double chi_rate(const TriggerParams& t, const TriggerPhase& ph, int l, int m,
                       double tau_e, double chi, double W) {
    const TriggerCoefficients& c = t.coeffs;
    if (m == 0) {
        if (tau_e <= t.tau_miet0) return c.varrho_tilde - c.delta_chi * chi;
        const double gb = l == 0 ? c.gammabar0 : c.gammabar1;
        return c.varrho_tilde - gb * W * W - c.delta_chi * chi;
    }
    if (!ph.ramping) return c.varrho_tilde - c.m1_predetect * chi;
    if (tau_e <= ph.ramp_end_tau) return -ph.ramp_height * c.ramp_slope;
    return -1.0;
}

// Post-transmission reset value; delta is the drawn (or scripted) scale.
inline double chi_reset(const TriggerParams& t, double delta, double W_pre) {
    return t.coeffs.chi_reset * delta * W_pre * W_pre;
}

// Transmission rule: past the floor for the current mode with the trigger
// variable depleted. chi_tol absorbs the localization error of a crossing.
inline bool should_transmit(const TriggerParams& t, int l, int m, double tau_e,
                            double chi, double chi_tol = 0.0) {
    if (l != 0) return false;
    const double floor = m == 1 ? t.tau_miet1 : t.tau_miet0;
    return tau_e >= floor - 1e-12 && chi <= chi_tol;
}

} // namespace detc

#endif
