#ifndef DETC_TESTS_ORACLES_HPP
#define DETC_TESTS_ORACLES_HPP

// Independent reference implementations used to cross-check the library.
// Nothing here includes library headers; agreement between the two routes is
// the point of the tests, so the routes must stay separate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Clock ODE: dphi/dt = -(2 L phi + gamma (phi^2 + 1)), phi(0) = 1/lambda.
// Plain RK4 at a fixed fine step; no closed forms.
// ---------------------------------------------------------------------------

inline double phi_rate(double L, double gamma, double phi) {
    return -(2.0 * L * phi + gamma * (phi * phi + 1.0));
}

inline double phi_ode(double L, double gamma, double lambda, double t,
                      double dt = 1e-7) {
    double phi = 1.0 / lambda;
    double s = 0.0;
    while (s < t) {
        double h = std::min(dt, t - s);
        double k1 = phi_rate(L, gamma, phi);
        double k2 = phi_rate(L, gamma, phi + 0.5 * h * k1);
        double k3 = phi_rate(L, gamma, phi + 0.5 * h * k2);
        double k4 = phi_rate(L, gamma, phi + h * k3);
        phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
    }
    return phi;
}

// Time for phi to decay from 1/lambda to lambda, by integration + bisection
// inside the bracketing step. Also reports the running min/max of phi so the
// caller can check the trajectory stays inside [lambda, 1/lambda].
struct PhiDescent {
    double time = 0.0;
    double phi_min = 0.0;
    double phi_max = 0.0;
};

inline PhiDescent phi_descent_time(double L, double gamma, double lambda,
                                   double dt_scale = 1e-6) {
    double phi = 1.0 / lambda;
    PhiDescent out;
    out.phi_min = out.phi_max = phi;
    double t = 0.0;
    // Step scaled to the problem; the descent time is O(1/(L*lambda)).
    double dt = dt_scale / std::min(std::max(L, gamma), 1e3) * 10.0;
    auto step = [&](double from, double h) {
        double k1 = phi_rate(L, gamma, from);
        double k2 = phi_rate(L, gamma, from + 0.5 * h * k1);
        double k3 = phi_rate(L, gamma, from + 0.5 * h * k2);
        double k4 = phi_rate(L, gamma, from + h * k3);
        return from + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    for (long i = 0; i < 400000000L; ++i) {
        double next = step(phi, dt);
        if (next <= lambda) {
            double lo = 0.0, hi = dt;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                if (step(phi, mid) <= lambda) hi = mid; else lo = mid;
            }
            out.time = t + 0.5 * (lo + hi);
            out.phi_min = lambda;
            return out;
        }
        phi = next;
        t += dt;
        out.phi_min = std::min(out.phi_min, phi);
        out.phi_max = std::max(out.phi_max, phi);
    }
    throw std::runtime_error("phi never reached lambda");
}

// ---------------------------------------------------------------------------
// Truncated exponential: density proportional to r e^{-r t} on [0, b].
// ---------------------------------------------------------------------------

inline double truncated_exp_cdf(double rate, double bound, double t) {
    if (t <= 0.0) return 0.0;
    if (t >= bound) return 1.0;
    return -std::expm1(-rate * t) / -std::expm1(-rate * bound);
}

inline double truncated_exp_mean(double rate, double bound) {
    double q = std::exp(-rate * bound);
    return 1.0 / rate - bound * q / (1.0 - q);
}

// Two-sided Kolmogorov-Smirnov distance of samples against a CDF.
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Discrete-event replay for scripted scenarios: frozen plant, fixed per-net
// delay, fixed attack instants, zero transmission-result resets. Under these
// conditions every transmission is deadline-fired, so the whole event log is
// reproducible with timer bookkeeping plus the update maps, and the replay
// must match the simulator exactly, bit for bit.
// ---------------------------------------------------------------------------

struct ReplayNet {
    int kind = 0;                    // 0 sampled-data, 1 round-robin, 2 largest-error-first
    std::vector<int> node_sizes;     // block partition of this net's signal
    double tau_miet0 = 0.0;
    double tau_miet1 = 0.0;
    double fixed_delay = 0.0;
    std::vector<double> attacks;     // pulse instants, ascending
    std::vector<double> e0;
};

struct ReplayEvent {
    int net = 0;
    int kind = 0;                    // 0 transmission, 1 update success, 2 update fail
    double t = 0.0;
    double tau_e = 0.0;              // timer value when the event fired
    std::int64_t k = 0;              // post-jump
    int l = 0, m = 0;                // post-jump
    std::vector<double> e;           // post-jump block
};

namespace detail {

inline std::vector<double> granted_zeroed(int kind, std::int64_t k,
                                          const std::vector<int>& sizes,
                                          const std::vector<double>& e) {
    std::vector<double> h = e;
    if (kind == 0) {
        std::fill(h.begin(), h.end(), 0.0);
        return h;
    }
    const int nodes = static_cast<int>(sizes.size());
    int granted = 0;
    if (kind == 1) {
        granted = static_cast<int>(k % nodes);
    } else {
        double best = -1.0;
        int off = 0;
        for (int j = 0; j < nodes; ++j) {
            double nsq = 0.0;
            for (int c = 0; c < sizes[j]; ++c) nsq += e[off + c] * e[off + c];
            if (nsq > best) { best = nsq; granted = j; }
            off += sizes[j];
        }
    }
    int off = 0;
    for (int j = 0; j < granted; ++j) off += sizes[j];
    for (int c = 0; c < sizes[granted]; ++c) h[off + c] = 0.0;
    return h;
}

} // namespace detail

inline std::vector<ReplayEvent> replay(const std::vector<ReplayNet>& nets,
                                       double horizon) {
    struct St {
        double t_lastx, pending_t;
        std::int64_t k;
        int l, m;
        bool pending_clean;
        std::vector<double> e, s;
    };
    std::vector<St> st(nets.size());
    for (std::size_t i = 0; i < nets.size(); ++i) {
        st[i].t_lastx = -nets[i].tau_miet0;  // timer starts at the l=0 deadline
        st[i].pending_t = 0.0;
        st[i].k = 0;
        st[i].l = 0;
        st[i].m = 0;
        st[i].pending_clean = false;
        st[i].e = nets[i].e0;
        st[i].s.assign(nets[i].e0.size(), 0.0);
    }
    auto next_time = [&](std::size_t i) {
        if (st[i].l == 1) return st[i].pending_t;
        return st[i].t_lastx + (st[i].m == 1 ? nets[i].tau_miet1 : nets[i].tau_miet0);
    };
    std::vector<ReplayEvent> log;
    for (;;) {
        double t = horizon;
        for (std::size_t i = 0; i < nets.size(); ++i) t = std::min(t, next_time(i));
        if (t >= horizon) break;
        for (std::size_t i = 0; i < nets.size(); ++i) {
            if (next_time(i) != t) continue;
            ReplayEvent ev;
            ev.net = static_cast<int>(i);
            ev.t = t;
            ev.tau_e = t - st[i].t_lastx;
            if (st[i].l == 0) {
                // transmission
                bool hit = false;
                for (double a : nets[i].attacks)
                    if (a >= t && a <= t + nets[i].fixed_delay) hit = true;
                std::vector<double> h =
                    detail::granted_zeroed(nets[i].kind, st[i].k, nets[i].node_sizes, st[i].e);
                for (std::size_t c = 0; c < h.size(); ++c) st[i].s[c] = h[c] - st[i].e[c];
                st[i].k += 1;
                st[i].l = 1;
                st[i].m = 0;
                st[i].t_lastx = t;
                st[i].pending_t = t + nets[i].fixed_delay;
                st[i].pending_clean = !hit;
                ev.kind = 0;
            } else if (st[i].pending_clean) {
                for (std::size_t c = 0; c < st[i].e.size(); ++c)
                    st[i].e[c] = st[i].s[c] + st[i].e[c];
                std::fill(st[i].s.begin(), st[i].s.end(), 0.0);
                st[i].l = 0;
                st[i].m = 0;
                ev.kind = 1;
            } else {
                std::vector<double> h =
                    detail::granted_zeroed(nets[i].kind, st[i].k, nets[i].node_sizes, st[i].e);
                for (std::size_t c = 0; c < h.size(); ++c) st[i].s[c] = h[c] - st[i].e[c];
                st[i].l = 0;
                st[i].m = 1;
                ev.kind = 2;
            }
            ev.k = st[i].k;
            ev.l = st[i].l;
            ev.m = st[i].m;
            ev.e = st[i].e;
            log.push_back(std::move(ev));
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Zero-order-hold check: within a span with no successful update, the held
// value (plant output + error) must not move. Returns the max variation seen
// between consecutive samples inside spans.
// ---------------------------------------------------------------------------

inline double zoh_max_variation(const std::vector<double>& sample_t,
                                const std::vector<std::vector<double>>& held,
                                const std::vector<double>& update_t) {
    double worst = 0.0;
    std::size_t u = 0;
    for (std::size_t i = 1; i < sample_t.size(); ++i) {
        while (u < update_t.size() && update_t[u] <= sample_t[i - 1]) ++u;
        bool update_between = u < update_t.size() && update_t[u] < sample_t[i];
        if (update_between) continue;
        double d = 0.0;
        for (std::size_t c = 0; c < held[i].size(); ++c)
            d = std::max(d, std::abs(held[i][c] - held[i - 1][c]));
        worst = std::max(worst, d);
    }
    return worst;
}

} // namespace oracle

#endif
