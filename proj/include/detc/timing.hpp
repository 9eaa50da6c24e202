#ifndef DETC_TIMING_HPP
#define DETC_TIMING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace detc {

// ---------------------------------------------------------------------------
// Clock certificate phi: dphi/dtau = -(2 L phi + gamma (phi^2 + 1)) with
// phi(0) = 1/lambda, lambda in (0, 1). Strictly decreasing; tau_mati is the
// time of descent to lambda. Scalar-templated closed forms, three branches;
// gamma == L is taken as an equality at relative tolerance 1e-12.
// ---------------------------------------------------------------------------

namespace detail {
template <typename T>
void require_clock_domain(T L, T gamma, T lambda) {
    if (!(L > T(0)) || !(gamma > T(0)))
        throw std::invalid_argument("clock rates must be positive");
    if (!(lambda > T(0)) || !(lambda < T(1)))
        throw std::invalid_argument("contraction factor must lie in (0,1)");
}
template <typename T>
bool same_branch(T a, T b) {
    return std::abs(a - b) <= T(1e-12) * std::max(std::abs(a), std::abs(b));
}
} // namespace detail

template <typename T>
T phi_solution(T L, T gamma, T lambda, T t) {
    detail::require_clock_domain(L, gamma, lambda);
    if (!(t >= T(0))) throw std::invalid_argument("clock time must be nonnegative");
    const T phi0 = T(1) / lambda;
    if (detail::same_branch(gamma, L)) {
        return T(-1) + T(1) / (T(1) / (phi0 + T(1)) + L * t);
    }
    const T c = L / gamma;
    const T psi0 = phi0 + c;
    if (gamma > L) {
        const T a = std::sqrt(T(1) - c * c);
        const T arg = std::atan(psi0 / a) - gamma * a * t;
        if (!(arg > T(-1.5707963267948966)))
            throw std::domain_error("clock solution queried past its escape time");
        return -c + a * std::tan(arg);
    }
    const T b = std::sqrt(c * c - T(1));
    // psi0 = 1/lambda + c > c > b, so the coth branch always applies.
    return -c + b / std::tanh(gamma * b * t + std::atanh(b / psi0));
}

// Descent time of phi from 1/lambda to lambda.
template <typename T>
T tau_mati(T L, T gamma, T lambda) {
    detail::require_clock_domain(L, gamma, lambda);
    if (detail::same_branch(gamma, L))
        return (T(1) / L) * (T(1) - lambda) / (T(1) + lambda);
    const T s = std::sqrt(std::abs(gamma * gamma - L * L));
    const T arg = s * (T(1) - lambda * lambda)
                  / (T(2) * lambda * gamma + L * (T(1) + lambda * lambda));
    return (gamma > L ? std::atan(arg) : std::atanh(arg)) / s;
}

// ---------------------------------------------------------------------------
// Per-network timing parameters and the constants derived from them.
// ---------------------------------------------------------------------------

enum class PhiEndpointMode { derived, override_values };

struct TimingParams {
    double L0 = 0, L1 = 0;          // growth rates, idle (l=0) and in-transit (l=1) clocks
    double gamma0 = 0, gamma1 = 0;  // gain constants for the same clocks
    double lambda = 0;              // contraction factor in (0,1)
    double rho0 = 0, rho1 = 0;      // flow decay rates paired with (l=0, l=1)
    double rho_tilde = 0;           // storage decay rate
    double tau_miet0 = 0;           // min inter-transmission time, nominal
    double tau_miet1 = 0;           // min inter-transmission time after a blocked update
    double tau_mad = 0;             // max allowable delay
    double vartheta = 0;            // detection ramp speedup, > 1
    double lambda_exp = 0;          // pulse rate of the attack process
    PhiEndpointMode phi_mode = PhiEndpointMode::derived;
    double phi_override0 = 0, phi_override1 = 0;
};

inline void validate(const TimingParams& p) {
    detail::require_clock_domain(p.L0, p.gamma0, p.lambda);
    detail::require_clock_domain(p.L1, p.gamma1, p.lambda);
    if (!(p.tau_miet0 > 0) || !(p.tau_miet1 > 0))
        throw std::invalid_argument("timer floors must be positive");
    if (!(p.tau_mad >= 0)) throw std::invalid_argument("delay bound must be nonnegative");
    if (!(p.vartheta > 1)) throw std::invalid_argument("ramp speedup must exceed 1");
    if (!(p.lambda_exp > 0)) throw std::invalid_argument("pulse rate must be positive");
    if (!(p.rho0 > 0) || !(p.rho1 > 0) || !(p.rho_tilde > 0))
        throw std::invalid_argument("decay rates must be positive");
    if (p.phi_mode == PhiEndpointMode::override_values &&
        (!(p.phi_override0 > 0) || !(p.phi_override1 > 0)))
        throw std::invalid_argument("clock endpoint overrides must be positive");
}

// Clock endpoints actually in use: the flowed values at tau_miet0, or the
// configured overrides.
struct PhiEndpoints {
    double phi0 = 0, phi1 = 0;
};

inline PhiEndpoints phi_endpoints(const TimingParams& p) {
    if (p.phi_mode == PhiEndpointMode::override_values)
        return {p.phi_override0, p.phi_override1};
    return {phi_solution(p.L0, p.gamma0, p.lambda, p.tau_miet0),
            phi_solution(p.L1, p.gamma1, p.lambda, p.tau_miet0)};
}

// Clock value as a function of the discrete mode and the timer, memoryless:
// pinned to the endpoint after a blocked update, otherwise flowed and frozen
// at tau_miet0.
inline double phi_of(const TimingParams& p, int l, int m, double tau_e) {
    const PhiEndpoints pe = phi_endpoints(p);
    if (m == 1) return l == 0 ? pe.phi0 : pe.phi1;
    const double tau = std::min(tau_e, p.tau_miet0);
    return l == 0 ? phi_solution(p.L0, p.gamma0, p.lambda, tau)
                  : phi_solution(p.L1, p.gamma1, p.lambda, tau);
}

struct DerivedConstants {
    double tau_mati0 = 0, tau_mati1 = 0;
    double phi_miet0 = 0, phi_miet1 = 0;
    double gammabar0 = 0, gammabar1 = 0;
    double varpi0 = 0, varpi1 = 0;
    double beta_hat = 0;
};

inline DerivedConstants derive_constants(const TimingParams& p) {
    validate(p);
    DerivedConstants d;
    d.tau_mati0 = tau_mati(p.L0, p.gamma0, p.lambda);
    d.tau_mati1 = tau_mati(p.L1, p.gamma1, p.lambda);
    const PhiEndpoints pe = phi_endpoints(p);
    d.phi_miet0 = pe.phi0;
    d.phi_miet1 = pe.phi1;
    d.gammabar0 = p.gamma0 * (2.0 * pe.phi0 * p.L0 + p.gamma0 * (1.0 + pe.phi0 * pe.phi0));
    d.gammabar1 = p.gamma1 * (2.0 * pe.phi1 * p.L1 + p.gamma1 * (1.0 + pe.phi1 * pe.phi1));
    d.varpi0 = std::min(p.rho_tilde,
                        std::min(p.lambda * p.rho0 / p.gamma0, p.lambda * p.rho1 / p.gamma1));
    d.varpi1 = std::max((d.gammabar0 - p.rho0) / (p.gamma0 * pe.phi0),
                        (d.gammabar1 - p.rho1) / (p.gamma1 * pe.phi1));
    d.beta_hat = d.varpi0 - (d.varpi0 + d.varpi1) * p.lambda_exp * p.tau_miet1;
    return d;
}

// Mean of an exponential with the given rate, right-truncated at bound.
inline double truncated_exp_mean(double rate, double bound) {
    if (!(rate > 0)) throw std::invalid_argument("rate must be positive");
    if (!(bound > 0)) return 0.0;
    const double q = std::exp(-rate * bound);
    return 1.0 / rate - bound * q / (1.0 - q);
}

// ---------------------------------------------------------------------------
// Triggering-strategy coefficients. template_coefficients gives the values
// the design conditions assume; the structure check compares a configured
// set against that template.
// ---------------------------------------------------------------------------

struct TriggerCoefficients {
    double varrho_tilde = 0;  // constant flow offset, >= 0
    double delta_chi = 0;     // linear bleed rate on the trigger variable
    double gammabar0 = 0, gammabar1 = 0;
    double chi_reset = 0;     // scale of the post-transmission reset draw
    double ramp_slope = 0;    // detection ramp rate per unit of trigger value
    double m1_predetect = 0;  // bleed rate between transmission and detection
};

inline TriggerCoefficients template_coefficients(const TimingParams& p) {
    const DerivedConstants d = derive_constants(p);
    TriggerCoefficients c;
    c.varrho_tilde = 0.0;
    c.delta_chi = d.varpi0;
    c.gammabar0 = d.gammabar0;
    c.gammabar1 = d.gammabar1;
    c.chi_reset = 10.0 * p.lambda * p.lambda * p.gamma1 * d.phi_miet1;
    c.ramp_slope = p.vartheta / p.tau_miet1;
    c.m1_predetect = c.delta_chi;
    return c;
}

// ---------------------------------------------------------------------------
// Design conditions. Margins are >= 0 iff the condition holds; comparisons
// carry a 1e-12 slack so boundary equalities are not failed on rounding.
// ---------------------------------------------------------------------------

struct ConditionRow {
    bool pass = false;
    double margin = 0;
};

struct ConditionReport {
    ConditionRow timers;      // timer floors vs descent/delay/dwell bounds
    double timer_margins[4] = {0, 0, 0, 0};
    ConditionRow jump;        // transmission-jump contraction
    ConditionRow ordering;    // gamma1 phi1 >= gamma0 phi0 while an update can land
    double ordering_crossing = std::numeric_limits<double>::quiet_NaN();
    ConditionRow dwell;       // expected blocked time vs recovery budget
    ConditionRow structure;   // configured trigger coefficients match the template
    bool all_pass() const {
        return timers.pass && jump.pass && ordering.pass && dwell.pass && structure.pass;
    }
};

inline ConditionReport check_conditions(const TimingParams& p, double expected_delay,
                                        const TriggerCoefficients& actual) {
    constexpr double slack = 1e-12;
    const DerivedConstants d = derive_constants(p);
    ConditionReport r;

    const double mati = std::min(d.tau_mati0, d.tau_mati1);
    r.timer_margins[0] = std::min({mati - p.tau_miet0, mati - p.tau_miet1,
                                   p.tau_miet0, p.tau_miet1});
    r.timer_margins[1] = p.tau_miet0 - p.tau_miet1;
    r.timer_margins[2] = std::min(p.tau_miet0 - p.tau_mad - p.tau_miet0 / p.vartheta,
                                  p.tau_miet1 - p.tau_mad - p.tau_miet1 / p.vartheta);
    r.timer_margins[3] = 1.0 / p.lambda_exp - (p.tau_miet1 - expected_delay);
    r.timers.margin = *std::min_element(r.timer_margins, r.timer_margins + 4);
    r.timers.pass = r.timers.margin >= -slack;

    // Transmission jump: the reset draw plus the carried clock value must be
    // dominated by the idle-clock certificate weight.
    const double reset_mean = actual.chi_reset / p.lambda_exp;
    const double carried = p.lambda * p.lambda * p.gamma1 * (1.0 / p.lambda);
    r.jump.margin = p.gamma0 * d.phi_miet0 - (reset_mean + carried);
    r.jump.pass = r.jump.margin >= -slack;

    // Clock ordering on [0, tau_mad]: fine grid for the margin, then a sign
    // scan (up to the descent time, past the l=0 deadline if needed) with
    // bisection for the crossing instant.
    auto gap = [&](double t) {
        return p.gamma1 * phi_solution(p.L1, p.gamma1, p.lambda, t)
               - p.gamma0 * phi_solution(p.L0, p.gamma0, p.lambda, t);
    };
    const int grid = 10000;
    double gmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i)
        gmin = std::min(gmin, gap(p.tau_mad * i / grid));
    r.ordering.margin = gmin;
    r.ordering.pass = gmin >= -slack;
    const double scan_end = 0.999999 * mati;
    double prev_t = 0.0, prev_g = gap(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double t = scan_end * i / grid;
        const double g = gap(t);
        if ((prev_g > 0) != (g > 0)) {
            double lo = prev_t, hi = t;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                if ((gap(mid) > 0) == (prev_g > 0)) lo = mid; else hi = mid;
            }
            r.ordering_crossing = 0.5 * (lo + hi);
            break;
        }
        prev_t = t;
        prev_g = g;
    }

    r.dwell.margin = d.varpi0 / (d.varpi0 + d.varpi1) - p.lambda_exp * p.tau_miet1;
    r.dwell.pass = r.dwell.margin >= -slack;

    const TriggerCoefficients tpl = template_coefficients(p);
    auto rel_dev = [](double a, double b) {
        return std::abs(a - b) / std::max(1.0, std::abs(b));
    };
    double dev = std::max({rel_dev(actual.delta_chi, tpl.delta_chi),
                           rel_dev(actual.gammabar0, tpl.gammabar0),
                           rel_dev(actual.gammabar1, tpl.gammabar1),
                           rel_dev(actual.chi_reset, tpl.chi_reset),
                           rel_dev(actual.ramp_slope, tpl.ramp_slope),
                           rel_dev(actual.m1_predetect, tpl.m1_predetect)});
    r.structure.margin = 1e-9 - dev;
    r.structure.pass = dev <= 1e-9 && actual.varrho_tilde >= 0.0;
    return r;
}

} // namespace detc

#endif
