#ifndef DETC_STOCHASTIC_HPP
#define DETC_STOCHASTIC_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "detc/rng.hpp"
#include "detc/timing.hpp"

namespace detc {

// Pulse attack process: instants with i.i.d. exponential gaps. Instants are
// strictly increasing; a zero gap (probability ~2^-53) is redrawn.
struct AttackTimeline {
    double rate = 0;
    std::vector<double> instants;

    // True iff some pulse lands in the closed interval [t0, t1].
    bool hits(double t0, double t1) const {
        auto it = std::lower_bound(instants.begin(), instants.end(), t0);
        return it != instants.end() && *it <= t1;
    }

    // Gap of the realization containing t: from the last pulse at or before t
    // (or 0) to the first pulse after t (or the horizon it was sampled to).
    double gap_at(double t, double horizon) const {
        auto it = std::upper_bound(instants.begin(), instants.end(), t);
        const double next = it == instants.end() ? horizon : *it;
        const double prev = it == instants.begin() ? 0.0 : *(it - 1);
        return next - prev;
    }
};

inline AttackTimeline sample_attacks(Rng& rng, double rate, double horizon) {
    if (!(rate > 0)) throw std::invalid_argument("pulse rate must be positive");
    if (!(horizon >= 0)) throw std::invalid_argument("horizon must be nonnegative");
    AttackTimeline tl;
    tl.rate = rate;
    double t = 0;
    for (;;) {
        double gap = rng.exponential(rate);
        while (gap == 0.0) gap = rng.exponential(rate);
        t += gap;
        if (t > horizon) break;
        tl.instants.push_back(t);
    }
    return tl;
}

// Transit-delay law: exponential with the given rate, right-truncated at the
// deadline bound so realizations never exceed it.
struct DelayLaw {
    double rate = 0;
    double bound = 0;

    double mean() const { return truncated_exp_mean(rate, bound); }

    double cdf(double t) const {
        if (t <= 0) return 0.0;
        if (t >= bound) return 1.0;
        return -std::expm1(-rate * t) / -std::expm1(-rate * bound);
    }
};

inline double sample_delay(Rng& rng, const DelayLaw& law) {
    if (!(law.bound >= 0)) throw std::invalid_argument("delay bound must be nonnegative");
    if (law.bound == 0) return 0.0;
    if (!(law.rate > 0)) throw std::invalid_argument("delay rate must be positive");
    // Inverse CDF of the truncated law; u in [0,1) keeps t strictly below bound.
    const double u = rng.next_double();
    return -std::log1p(u * std::expm1(-law.rate * law.bound)) / law.rate;
}

// Two-sided Kolmogorov-Smirnov distance against a reference CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

// Asymptotic two-sided 5% critical value.
inline double ks_critical_5pct(std::size_t n) {
    return 1.36 / std::sqrt(static_cast<double>(n));
}

} // namespace detc

#endif
