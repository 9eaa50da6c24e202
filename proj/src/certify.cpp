#include "detc/certify.hpp"

#include <algorithm>
#include <cmath>

namespace detc {

BlockedDecomposition decompose_blocked_time(const std::vector<EventRecord>& events,
                                            int net, double tau_miet1, double horizon) {
    BlockedDecomposition d;
    std::vector<std::pair<double, double>> spans;
    for (const EventRecord& ev : events) {
        if (ev.net != net || ev.kind != EventKind::transmission || !ev.window_hit) continue;
        const double a = ev.t;
        const double b = std::min(ev.t + tau_miet1, horizon);
        if (b > a) spans.emplace_back(a, b);
        d.hit_windows += 1;
    }
    std::sort(spans.begin(), spans.end());
    for (const auto& sp : spans) {
        if (!d.blocked.empty() && sp.first <= d.blocked.back().second)
            d.blocked.back().second = std::max(d.blocked.back().second, sp.second);
        else
            d.blocked.push_back(sp);
    }
    for (const auto& sp : d.blocked) d.blocked_measure += sp.second - sp.first;
    d.nominal_measure = horizon - d.blocked_measure;
    return d;
}

SampleStats summarize(const std::vector<double>& xs) {
    SampleStats s;
    s.count = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return s;
    double acc = 0;
    for (double x : xs) acc += x;
    s.mean = acc / static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
    s.stddev = std::sqrt(var);
    s.se = s.stddev / std::sqrt(static_cast<double>(xs.size()));
    return s;
}

FlowRateCheck check_flow_rate(const std::vector<TraceRecord>& trace, bool blocked_regime,
                              double coeff, double tol) {
    FlowRateCheck c;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const TraceRecord& a = trace[i - 1];
        const TraceRecord& b = trace[i];
        if (a.kind != EventKind::flow_sample || b.kind != EventKind::flow_sample) continue;
        if (a.tj.j != b.tj.j) continue;
        if (a.any_blocked != blocked_regime || b.any_blocked != blocked_regime) continue;
        const double dt = b.tj.t - a.tj.t;
        if (!(dt > 0)) continue;
        const double u = 0.5 * (a.U + b.U);
        const double rate = (b.U - a.U) / dt;
        const double allowed = coeff * u + tol * (1.0 + std::abs(u));
        c.pairs += 1;
        const double excess = rate - allowed;
        c.worst_excess = std::max(c.worst_excess, excess);
        if (excess > 0) c.violations += 1;
    }
    return c;
}

DecaySummary fit_decay(const std::vector<std::pair<double, double>>& mean_u) {
    DecaySummary d;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& [t, u] : mean_u) {
        if (!(u > 0)) continue;
        const double y = std::log(u);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
    }
    d.points = n;
    if (n < 2) return d;
    const double nn = static_cast<double>(n);
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const double inter = (sy - slope * sx) / nn;
    d.rate = -slope;
    d.u0 = std::exp(inter);
    return d;
}

} // namespace detc
