#ifndef DETC_PROTOCOL_HPP
#define DETC_PROTOCOL_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace detc {

// Node-scheduling protocols. sampled_data is the single-node case (the whole
// signal refreshes every transmission); round_robin cycles through nodes;
// largest_error_first grants the node with the largest error norm, lowest
// index on ties.
enum class ProtocolKind { sampled_data, round_robin, largest_error_first };

struct Protocol {
    ProtocolKind kind = ProtocolKind::sampled_data;
    std::vector<int> node_sizes;  // contiguous blocks covering the signal
    std::vector<int> offsets;     // derived prefix sums
    int dim = 0;
    double lambda = 0;            // per-transmission contraction factor

    int nodes() const { return static_cast<int>(node_sizes.size()); }
};

inline Protocol make_protocol(ProtocolKind kind, std::vector<int> node_sizes) {
    if (node_sizes.empty()) throw std::invalid_argument("protocol needs at least one node");
    for (int s : node_sizes)
        if (s <= 0) throw std::invalid_argument("node sizes must be positive");
    if (kind == ProtocolKind::sampled_data && node_sizes.size() != 1)
        throw std::invalid_argument("single-node protocol cannot partition the signal");
    Protocol p;
    p.kind = kind;
    p.node_sizes = std::move(node_sizes);
    p.offsets.resize(p.node_sizes.size());
    int off = 0;
    for (std::size_t i = 0; i < p.node_sizes.size(); ++i) {
        p.offsets[i] = off;
        off += p.node_sizes[i];
    }
    p.dim = off;
    const double n = static_cast<double>(p.nodes());
    p.lambda = std::sqrt((n - 1.0) / n);
    return p;
}

inline int granted_node(const Protocol& p, std::int64_t k,
                        const Eigen::Ref<const Eigen::VectorXd>& e) {
    switch (p.kind) {
        case ProtocolKind::sampled_data:
            return 0;
        case ProtocolKind::round_robin: {
            const std::int64_t n = p.nodes();
            return static_cast<int>(((k % n) + n) % n);
        }
        case ProtocolKind::largest_error_first: {
            int best = 0;
            double best_sq = -1.0;
            for (int j = 0; j < p.nodes(); ++j) {
                const double sq = e.segment(p.offsets[j], p.node_sizes[j]).squaredNorm();
                if (sq > best_sq) { best_sq = sq; best = j; }
            }
            return best;
        }
    }
    throw std::logic_error("unreachable");
}

// Post-transmission error: the granted node's block is refreshed (zeroed),
// the rest keeps its current error.
inline Eigen::VectorXd apply_protocol(const Protocol& p, std::int64_t k,
                                      const Eigen::Ref<const Eigen::VectorXd>& e) {
    if (e.size() != p.dim) throw std::invalid_argument("error dimension mismatch");
    Eigen::VectorXd h = e;
    const int g = granted_node(p, k, e);
    h.segment(p.offsets[g], p.node_sizes[g]).setZero();
    return h;
}

namespace detail {
// Round-robin wait weight of node j at counter k: 1 for the node granted at
// k, up to the node count for the one that waits longest.
inline double rr_weight(const Protocol& p, std::int64_t k, int j) {
    const std::int64_t n = p.nodes();
    return static_cast<double>((((j - k) % n) + n) % n + 1);
}
} // namespace detail

// Network distance function. The in-transit form (l = 1) measures the error
// the pending packet will leave behind; the idle form (l = 0) also carries
// the stored correction. Round-robin weights blocks by waiting time so the
// per-transmission contraction holds pointwise, not just on average.
inline double protocol_W(const Protocol& p, std::int64_t k, int l,
                         const Eigen::Ref<const Eigen::VectorXd>& e,
                         const Eigen::Ref<const Eigen::VectorXd>& s) {
    if (e.size() != p.dim || s.size() != p.dim)
        throw std::invalid_argument("signal dimension mismatch");
    if (l != 0 && l != 1) throw std::invalid_argument("l must be 0 or 1");
    if (p.kind == ProtocolKind::round_robin) {
        double acc = 0;
        for (int j = 0; j < p.nodes(); ++j) {
            const double w = detail::rr_weight(p, k, j);
            const double nsq =
                l == 0 ? e.segment(p.offsets[j], p.node_sizes[j]).squaredNorm()
                       : (e + s).segment(p.offsets[j], p.node_sizes[j]).squaredNorm();
            acc += w * nsq;
        }
        if (l == 0) acc += s.squaredNorm();
        return std::sqrt(acc);
    }
    if (l == 0) return std::sqrt(e.squaredNorm() + s.squaredNorm());
    return (e + s).norm();
}

// Gradient of protocol_W in e, for flow-rate checks. Zero at W = 0.
inline Eigen::VectorXd protocol_W_grad_e(const Protocol& p, std::int64_t k, int l,
                                         const Eigen::Ref<const Eigen::VectorXd>& e,
                                         const Eigen::Ref<const Eigen::VectorXd>& s) {
    const double w = protocol_W(p, k, l, e, s);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.dim);
    if (w == 0) return g;
    if (p.kind == ProtocolKind::round_robin) {
        for (int j = 0; j < p.nodes(); ++j) {
            const double wt = detail::rr_weight(p, k, j);
            if (l == 0)
                g.segment(p.offsets[j], p.node_sizes[j]) =
                    wt * e.segment(p.offsets[j], p.node_sizes[j]);
            else
                g.segment(p.offsets[j], p.node_sizes[j]) =
                    wt * (e + s).segment(p.offsets[j], p.node_sizes[j]);
        }
        return g / w;
    }
    if (l == 0) return e / w;
    return (e + s) / ((e + s).norm());
}

} // namespace detc

#endif
