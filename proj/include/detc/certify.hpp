#ifndef DETC_CERTIFY_HPP
#define DETC_CERTIFY_HPP

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <thread>
#include <utility>
#include <vector>

#include "detc/hybrid.hpp"

namespace detc {

// Partition of [0, horizon] for one network into the spans opened by blocked
// updates (from each window-hit transmission to the forced retransmission
// one floor later) and their complement. Pulses that land outside every
// transit window block nothing and contribute no span.
struct BlockedDecomposition {
    std::vector<std::pair<double, double>> blocked;  // disjoint [start, end)
    double blocked_measure = 0;
    double nominal_measure = 0;
    int hit_windows = 0;
};

BlockedDecomposition decompose_blocked_time(const std::vector<EventRecord>& events,
                                            int net, double tau_miet1, double horizon);

struct SampleStats {
    std::int64_t count = 0;
    double mean = 0, stddev = 0, se = 0;
};

SampleStats summarize(const std::vector<double>& xs);

// Finite-difference check of the certificate rate along flow samples.
// Pairs of consecutive flow records with the same jump counter and the same
// regime are tested against rate <= coeff * U + tol * (1 + |U|).
struct FlowRateCheck {
    std::int64_t pairs = 0, violations = 0;
    double worst_excess = -std::numeric_limits<double>::infinity();
};

FlowRateCheck check_flow_rate(const std::vector<TraceRecord>& trace, bool blocked_regime,
                              double coeff, double tol);

// Least-squares exponential fit of an averaged certificate history.
struct DecaySummary {
    double rate = 0;  // U ~ u0 * exp(-rate * t)
    double u0 = 0;
    int points = 0;
};

DecaySummary fit_decay(const std::vector<std::pair<double, double>>& mean_u);

// Independent realizations with seeds base_seed .. base_seed+n-1, returned in
// seed order regardless of scheduling, so every reduction is deterministic.
inline std::vector<SimResult> run_ensemble(std::shared_ptr<const Plant> plant,
                                           const std::vector<NetworkSetup>& nets,
                                           const SimOptions& opts, std::uint64_t base_seed,
                                           int n) {
    std::vector<SimResult> results(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                SimOptions o = opts;
                o.seed = base_seed + static_cast<std::uint64_t>(i);
                results[static_cast<std::size_t>(i)] = Simulator(plant, nets, o).run();
            }
        });
    for (std::thread& t : pool) t.join();
    return results;
}

} // namespace detc

#endif
