#include "detc/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace detc {

const char* event_name(EventKind k) {
    switch (k) {
        case EventKind::flow_sample: return "flow";
        case EventKind::transmission: return "transmit";
        case EventKind::update_success: return "update";
        case EventKind::update_fail: return "blocked";
        case EventKind::logic_flip: return "flip";
    }
    return "?";
}

HybridState initial_state(const Plant& plant, const Eigen::VectorXd& x0,
                          const std::vector<NetworkSetup>& nets, double initial_tau_e) {
    const int N = static_cast<int>(nets.size());
    HybridState st;
    st.x = x0;
    st.e = Eigen::VectorXd::Zero(plant.signal_dim());
    st.s = Eigen::VectorXd::Zero(plant.signal_dim());
    st.tau_e.resize(N);
    st.chi = Eigen::VectorXd::Zero(N);
    st.phi0.resize(N);
    st.phi1.resize(N);
    st.k.assign(N, 0);
    st.l.assign(N, 0);
    st.m.assign(N, 0);
    for (int i = 0; i < N; ++i) {
        const TimingParams& tp = nets[i].timing;
        const double tau = initial_tau_e < 0 ? tp.tau_miet0 : initial_tau_e;
        st.tau_e(i) = tau;
        st.phi0(i) = phi_of(tp, 0, 0, tau);
        st.phi1(i) = phi_of(tp, 1, 0, tau);
    }
    return st;
}

double certificate_value(const Plant& plant, const std::vector<NetworkSetup>& nets,
                         const HybridState& st) {
    double u = plant.storage(st.x);
    for (std::size_t i = 0; i < nets.size(); ++i) {
        const NetworkSetup& n = nets[i];
        const double W = protocol_W(n.protocol, st.k[i], st.l[i],
                                    st.e.segment(n.offset, n.protocol.dim),
                                    st.s.segment(n.offset, n.protocol.dim));
        const double gamma = st.l[i] == 0 ? n.timing.gamma0 : n.timing.gamma1;
        const double phi = st.l[i] == 0 ? st.phi0(i) : st.phi1(i);
        u += gamma * phi * W * W + st.chi(i);
    }
    return u;
}

namespace {

struct Diverged {
    double t;
};

double riccati_rate(double L, double gamma, double phi) {
    return -(2.0 * L * phi + gamma * (phi * phi + 1.0));
}

} // namespace

Simulator::Simulator(std::shared_ptr<const Plant> plant, std::vector<NetworkSetup> nets,
                     SimOptions opts)
    : plant_(std::move(plant)), nets_(std::move(nets)), opts_(opts) {
    if (!plant_) throw std::invalid_argument("no plant");
    if (nets_.empty()) throw std::invalid_argument("need at least one network");
    if (!(opts_.dt > 0) || !(opts_.horizon > 0))
        throw std::invalid_argument("step and horizon must be positive");
    if (opts_.sample_every <= 0) throw std::invalid_argument("sample_every must be positive");
    int covered = 0;
    for (std::size_t i = 0; i < nets_.size(); ++i) {
        NetworkSetup& n = nets_[i];
        validate(n.timing);
        if (n.offset != covered)
            throw std::invalid_argument("network blocks must tile the signal in order");
        covered += n.protocol.dim;
        if (n.trigger.tau_miet0 == 0 && n.trigger.tau_miet1 == 0)
            n.trigger = make_trigger(n.timing);
        if (n.trigger.tau_miet0 != n.timing.tau_miet0 ||
            n.trigger.tau_miet1 != n.timing.tau_miet1)
            throw std::invalid_argument("trigger floors disagree with timing");
        if (n.fixed_delay && !(*n.fixed_delay >= 0 && *n.fixed_delay <= n.timing.tau_mad))
            throw std::invalid_argument("scripted delay violates the delay bound");
        if (!n.fixed_delay && n.delay_law.bound > n.timing.tau_mad)
            throw std::invalid_argument("delay law exceeds the delay bound");
        if (n.scripted_attacks &&
            !std::is_sorted(n.scripted_attacks->begin(), n.scripted_attacks->end()))
            throw std::invalid_argument("scripted attack instants must be ascending");
        const int ev = plant_->event_count();
        for (int idx = 0; idx < ev; ++idx) {
            const int en = plant_->event_network(idx);
            if (en >= static_cast<int>(nets_.size()))
                throw std::invalid_argument("plant event references a missing network");
        }
    }
    if (covered != plant_->signal_dim())
        throw std::invalid_argument("network blocks do not cover the plant signal");
}

SimResult Simulator::run() const {
    return run(initial_state(*plant_, plant_->default_state(), nets_, opts_.initial_tau_e));
}

SimResult Simulator::run(const HybridState& from) const {
    const Plant& plant = *plant_;
    const int N = static_cast<int>(nets_.size());
    const int nx = plant.state_dim();
    const int np = plant.signal_dim();
    const int dim = nx + np + 3 * N;

    struct Pending {
        double t = 0, delay = 0;
        bool clean = false;
    };
    struct NetRt {
        double tau_miet[2] = {0, 0};
        DerivedConstants dc;
        double t_last_tx = 0;
        std::optional<Pending> pending;
        TriggerPhase phase;
        Rng delay_rng{0}, reset_rng{0};
        AttackTimeline attacks;
        double prev_tx_instant = std::numeric_limits<double>::quiet_NaN();
        bool crossing_armed = false;
    };

    SimResult out;
    out.tally.resize(N);
    std::vector<NetRt> rt(N);
    for (int i = 0; i < N; ++i) {
        const NetworkSetup& cfg = nets_[i];
        rt[i].tau_miet[0] = cfg.timing.tau_miet0;
        rt[i].tau_miet[1] = cfg.timing.tau_miet1;
        rt[i].dc = derive_constants(cfg.timing);
        rt[i].delay_rng = substream(opts_.seed, stream_id(StreamPurpose::delays, i));
        rt[i].reset_rng = substream(opts_.seed, stream_id(StreamPurpose::chi_reset, i));
        if (cfg.scripted_attacks) {
            rt[i].attacks.rate = cfg.attack_rate;
            rt[i].attacks.instants = *cfg.scripted_attacks;
        } else if (cfg.attack_rate > 0) {
            Rng r = substream(opts_.seed, stream_id(StreamPurpose::attacks, i));
            rt[i].attacks = sample_attacks(r, cfg.attack_rate, opts_.horizon);
        }
        rt[i].t_last_tx = 0.0 - from.tau_e(i);
    }
    out.attacks.resize(N);
    for (int i = 0; i < N; ++i) out.attacks[i] = rt[i].attacks;

    HybridState st = from;
    double t = 0;
    std::int64_t j = 0;
    std::int64_t substeps = 0;
    std::vector<bool> flip_armed(plant.event_count(), false);

    auto any_blocked = [&] {
        for (int i = 0; i < N; ++i)
            if (st.m[i] == 1) return true;
        return false;
    };
    auto emit_trace = [&](EventKind kind, int net) {
        if (!opts_.record_trace) return;
        TraceRecord r;
        r.tj = {t, j};
        r.kind = kind;
        r.net = net;
        r.U = certificate_value(plant, nets_, st);
        r.any_blocked = any_blocked();
        r.state = st;
        out.trace.push_back(std::move(r));
    };
    auto sample_if_stale = [&] {
        if (!opts_.record_trace) return;
        if (out.trace.empty() || out.trace.back().tj.t != t) emit_trace(EventKind::flow_sample, -1);
    };
    auto emit_event = [&](EventRecord r) {
        if (opts_.record_events) out.events.push_back(r);
    };

    // ---- flow ----
    Eigen::VectorXd dx(nx), dsig(np), dy(dim), sig_hat(np);
    // Per-segment branch context so every integrator stage of a step sees the
    // same piece of the piecewise rates.
    struct SegCtx {
        bool phi_active = false;   // clocks still flowing
        bool past_floor = false;   // trigger bleeding with the W term
        int ramp = 0;              // 0 none, 1 ramping, 2 expired
    };
    std::vector<SegCtx> seg(N);
    auto set_segment_context = [&] {
        for (int i = 0; i < N; ++i) {
            const double tau = t - rt[i].t_last_tx;
            seg[i].phi_active = st.m[i] == 0 && tau < nets_[i].timing.tau_miet0;
            seg[i].past_floor = st.m[i] == 0 && tau >= nets_[i].timing.tau_miet0;
            seg[i].ramp = 0;
            if (st.m[i] == 1 && rt[i].phase.ramping)
                seg[i].ramp = tau < rt[i].phase.ramp_end_tau ? 1 : 2;
        }
    };
    auto deriv = [&](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        const auto x = y.head(nx);
        const auto e = y.segment(nx, np);
        const auto chi = y.segment(nx + np, N);
        const auto phi0 = y.segment(nx + np + N, N);
        const auto phi1 = y.segment(nx + np + 2 * N, N);
        sig_hat = plant.signal(x) + e;
        plant.flow(x, sig_hat, dx, dsig);
        dy.head(nx) = dx;
        dy.segment(nx, np) = -dsig;
        for (int i = 0; i < N; ++i) {
            const NetworkSetup& n = nets_[i];
            const TriggerCoefficients& c = n.trigger.coeffs;
            double dchi;
            if (st.m[i] == 0) {
                if (!seg[i].past_floor) {
                    dchi = c.varrho_tilde - c.delta_chi * chi(i);
                } else {
                    const double W = protocol_W(n.protocol, st.k[i], st.l[i],
                                                e.segment(n.offset, n.protocol.dim),
                                                st.s.segment(n.offset, n.protocol.dim));
                    const double gb = st.l[i] == 0 ? c.gammabar0 : c.gammabar1;
                    dchi = c.varrho_tilde - gb * W * W - c.delta_chi * chi(i);
                }
            } else if (seg[i].ramp == 1) {
                dchi = -rt[i].phase.ramp_height * c.ramp_slope;
            } else if (seg[i].ramp == 2) {
                dchi = -1.0;
            } else {
                dchi = c.varrho_tilde - c.m1_predetect * chi(i);
            }
            dy(nx + np + i) = dchi;
            if (seg[i].phi_active) {
                dy(nx + np + N + i) = riccati_rate(n.timing.L0, n.timing.gamma0, phi0(i));
                dy(nx + np + 2 * N + i) = riccati_rate(n.timing.L1, n.timing.gamma1, phi1(i));
            } else {
                dy(nx + np + N + i) = 0;
                dy(nx + np + 2 * N + i) = 0;
            }
        }
        return dy;
    };
    auto pack = [&] {
        Eigen::VectorXd y(dim);
        y.head(nx) = st.x;
        y.segment(nx, np) = st.e;
        y.segment(nx + np, N) = st.chi;
        y.segment(nx + np + N, N) = st.phi0;
        y.segment(nx + np + 2 * N, N) = st.phi1;
        return y;
    };
    auto unpack = [&](const Eigen::VectorXd& y) {
        st.x = y.head(nx);
        st.e = y.segment(nx, np);
        st.chi = y.segment(nx + np, N);
        st.phi0 = y.segment(nx + np + N, N);
        st.phi1 = y.segment(nx + np + 2 * N, N);
    };

    // Integrates up to target, watching trigger crossings (only meaningful
    // past the mode's floor) and plant event guards. Stops early at a
    // localized crossing with the corresponding armed flag set.
    auto integrate_to = [&](double target) {
        while (t < target) {
            set_segment_context();
            double h = std::min(opts_.dt, target - t);
            const bool lands = t + h >= target;
            if (lands) h = target - t;
            const Eigen::VectorXd y0 = pack();
            Eigen::VectorXd y1 = rk4_step(deriv, t, y0, h);

            // crossing candidates on [t, t+h]
            double hit_frac = 2.0;  // fraction of h
            int hit_chi = -1, hit_flip = -1;
            for (int i = 0; i < N; ++i) {
                if (st.l[i] != 0) continue;
                const double tau0 = t - rt[i].t_last_tx;
                if (tau0 < rt[i].tau_miet[st.m[i]] - 1e-12) continue;
                const double c0 = y0(nx + np + i), c1 = y1(nx + np + i);
                if (!(c0 > 0) || !(c1 <= 0)) continue;
                double lo = 0, hi = 1;
                while ((hi - lo) * h > 1e-10) {
                    const double mid = 0.5 * (lo + hi);
                    const Eigen::VectorXd ym = rk4_step(deriv, t, y0, mid * h);
                    if (ym(nx + np + i) <= 0) hi = mid; else lo = mid;
                }
                if (hi < hit_frac) { hit_frac = hi; hit_chi = i; hit_flip = -1; }
            }
            for (int idx = 0; idx < plant.event_count(); ++idx) {
                const double g0 = plant.event_guard(idx, y0.head(nx));
                Eigen::VectorXd x1 = y1.head(nx);
                const double g1 = plant.event_guard(idx, x1);
                if (!(g0 > 0) || !(g1 <= 0)) continue;
                double lo = 0, hi = 1;
                while ((hi - lo) * h > 1e-10) {
                    const double mid = 0.5 * (lo + hi);
                    const Eigen::VectorXd ym = rk4_step(deriv, t, y0, mid * h);
                    if (plant.event_guard(idx, ym.head(nx)) <= 0) hi = mid; else lo = mid;
                }
                if (hi < hit_frac) { hit_frac = hi; hit_flip = idx; hit_chi = -1; }
            }

            bool stopped = false;
            if (hit_chi >= 0 || hit_flip >= 0) {
                h = hit_frac * h;
                y1 = rk4_step(deriv, t, y0, h);
                if (hit_chi >= 0) rt[hit_chi].crossing_armed = true;
                if (hit_flip >= 0) flip_armed[hit_flip] = true;
                stopped = true;
            }

            unpack(y1);
            plant.post_step(st.x);
            t = (lands && !stopped) ? target : t + h;
            for (int i = 0; i < N; ++i) st.tau_e(i) = t - rt[i].t_last_tx;
            if (std::max(st.x.lpNorm<Eigen::Infinity>(), st.e.lpNorm<Eigen::Infinity>()) >
                opts_.divergence_norm)
                throw Diverged{t};
            ++substeps;
            if (substeps % opts_.sample_every == 0) emit_trace(EventKind::flow_sample, -1);
            if (stopped) return;
        }
    };

    auto fire_transmission = [&](int i) {
        const NetworkSetup& cfg = nets_[i];
        NetRt& r = rt[i];
        sample_if_stale();
        const double u_pre = certificate_value(plant, nets_, st);
        const double tau_rec = t - r.t_last_tx;
        const auto e_blk = st.e.segment(cfg.offset, cfg.protocol.dim);
        const double W0 = protocol_W(cfg.protocol, st.k[i], 0, e_blk,
                                     st.s.segment(cfg.offset, cfg.protocol.dim));
        const double delay =
            cfg.fixed_delay ? *cfg.fixed_delay : sample_delay(r.delay_rng, cfg.delay_law);
        const bool hit = r.attacks.hits(t, t + delay);
        double delta;
        if (cfg.fixed_reset) {
            delta = *cfg.fixed_reset;
        } else if (cfg.reset_coupled) {
            delta = r.attacks.gap_at(t, opts_.horizon);
        } else {
            delta = r.reset_rng.exponential(cfg.timing.lambda_exp);
        }
        st.s.segment(cfg.offset, cfg.protocol.dim) =
            apply_protocol(cfg.protocol, st.k[i], e_blk) - e_blk;
        st.k[i] += 1;
        st.l[i] = 1;
        st.m[i] = 0;
        r.t_last_tx = t;
        st.tau_e(i) = 0;
        if (!hit) st.chi(i) = chi_reset(cfg.trigger, delta, W0);
        st.phi0(i) = 1.0 / cfg.timing.lambda;
        st.phi1(i) = 1.0 / cfg.timing.lambda;
        r.pending = Pending{t + delay, delay, !hit};
        r.phase.on_transmission();
        r.crossing_armed = false;
        NetTally& tl = out.tally[i];
        tl.transmissions += 1;
        if (!std::isnan(r.prev_tx_instant))
            tl.min_gap = std::min(tl.min_gap, t - r.prev_tx_instant);
        r.prev_tx_instant = t;
        ++j;
        EventRecord ev;
        ev.kind = EventKind::transmission;
        ev.net = i;
        ev.t = t;
        ev.j = j;
        ev.k = st.k[i];
        ev.l = 1;
        ev.m = 0;
        ev.tau_e = tau_rec;
        ev.tau_delay = delay;
        ev.window_hit = hit;
        emit_event(ev);
        emit_trace(EventKind::transmission, i);
        out.jump_du.push_back(certificate_value(plant, nets_, st) - u_pre);
    };

    auto fire_update = [&](int i) {
        const NetworkSetup& cfg = nets_[i];
        NetRt& r = rt[i];
        sample_if_stale();
        const double tau_rec = t - r.t_last_tx;
        const Pending p = *r.pending;
        r.pending.reset();
        auto e_blk = st.e.segment(cfg.offset, cfg.protocol.dim);
        auto s_blk = st.s.segment(cfg.offset, cfg.protocol.dim);
        EventKind kind;
        if (p.clean) {
            e_blk = s_blk + e_blk;
            s_blk.setZero();
            st.l[i] = 0;
            st.m[i] = 0;
            kind = EventKind::update_success;
            out.tally[i].successes += 1;
        } else {
            s_blk = apply_protocol(cfg.protocol, st.k[i], e_blk) - e_blk;
            st.l[i] = 0;
            st.m[i] = 1;
            st.phi0(i) = rt[i].dc.phi_miet0;
            st.phi1(i) = rt[i].dc.phi_miet1;
            r.phase.on_blocked_update(cfg.trigger, p.delay, st.chi(i));
            kind = EventKind::update_fail;
            out.tally[i].failures += 1;
        }
        ++j;
        EventRecord ev;
        ev.kind = kind;
        ev.net = i;
        ev.t = t;
        ev.j = j;
        ev.k = st.k[i];
        ev.l = st.l[i];
        ev.m = st.m[i];
        ev.tau_e = tau_rec;
        ev.tau_delay = p.delay;
        ev.window_hit = !p.clean;
        emit_event(ev);
        emit_trace(kind, i);
    };

    auto jump_phase = [&] {
        for (;;) {
            bool fired = false;
            for (int idx = 0; idx < plant.event_count(); ++idx) {
                const double tol = flip_armed[idx] ? 1e-8 : 0.0;
                if (plant.event_guard(idx, st.x) > tol) continue;
                sample_if_stale();
                Eigen::VectorXd x = st.x;
                plant.event_jump(idx, x);
                st.x = x;
                const int inet = plant.event_network(idx);
                if (inet >= 0) {
                    st.chi(inet) = std::min(st.chi(inet), 0.0);
                    out.tally[inet].logic_flips += 1;
                }
                flip_armed[idx] = false;
                ++j;
                EventRecord ev;
                ev.kind = EventKind::logic_flip;
                ev.net = inet;
                ev.t = t;
                ev.j = j;
                if (inet >= 0) {
                    ev.k = st.k[inet];
                    ev.l = st.l[inet];
                    ev.m = st.m[inet];
                    ev.tau_e = st.tau_e(inet);
                }
                emit_event(ev);
                emit_trace(EventKind::logic_flip, inet);
                fired = true;
            }
            for (int i = 0; i < N; ++i) {
                if (st.l[i] == 1) {
                    if (rt[i].pending && t >= rt[i].pending->t) {
                        fire_update(i);
                        fired = true;
                    }
                } else {
                    const double tau = t - rt[i].t_last_tx;
                    const double chi_tol = rt[i].crossing_armed ? 1e-8 : 0.0;
                    if (tau >= rt[i].tau_miet[st.m[i]] - 1e-12 && st.chi(i) <= chi_tol) {
                        fire_transmission(i);
                        fired = true;
                    }
                }
            }
            if (!fired) break;
        }
    };

    try {
        emit_trace(EventKind::flow_sample, -1);
        double next_grid =
            opts_.u_grid_dt > 0 ? 0.0 : std::numeric_limits<double>::infinity();
        std::int64_t grid_n = 0;
        for (;;) {
            jump_phase();
            if (opts_.u_grid_dt > 0 && t >= next_grid) {
                // post-jump values at grid instants
                out.u_grid.emplace_back(t, certificate_value(plant, nets_, st));
                ++grid_n;
                next_grid = static_cast<double>(grid_n) * opts_.u_grid_dt;
            }
            if (t >= opts_.horizon) break;
            double T = opts_.horizon;
            for (int i = 0; i < N; ++i) {
                if (st.l[i] == 1) {
                    T = std::min(T, rt[i].pending->t);
                } else {
                    const double deadline = rt[i].t_last_tx + rt[i].tau_miet[st.m[i]];
                    if (deadline > t) T = std::min(T, deadline);
                    if (st.m[i] == 1 && rt[i].phase.ramping) {
                        const double ramp_end = rt[i].t_last_tx + rt[i].phase.ramp_end_tau;
                        if (ramp_end > t) T = std::min(T, ramp_end);
                    }
                }
            }
            if (next_grid > t && next_grid < T) T = next_grid;
            integrate_to(T);
        }
        sample_if_stale();
    } catch (const Diverged& d) {
        out.diverged = true;
        out.diverged_at = d.t;
    }
    out.final_state = st;
    out.final_tj = {t, j};
    return out;
}

} // namespace detc
