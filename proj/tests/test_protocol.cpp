#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "detc/protocol.hpp"
#include "detc/rng.hpp"
#include "test_near.hpp"

using namespace detc;

namespace {

Eigen::VectorXd random_vec(Rng& r, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = 2.0 * r.next_double() - 1.0;
    return v;
}

std::vector<Protocol> all_protocols() {
    return {make_protocol(ProtocolKind::sampled_data, {3}),
            make_protocol(ProtocolKind::round_robin, {2, 2}),
            make_protocol(ProtocolKind::round_robin, {1, 2, 3}),
            make_protocol(ProtocolKind::largest_error_first, {2, 1}),
            make_protocol(ProtocolKind::largest_error_first, {2, 2, 2})};
}

} // namespace

TEST_CASE("distance example: idle form is the euclidean norm of (e, s)") {
    const Protocol p = make_protocol(ProtocolKind::sampled_data, {1});
    Eigen::VectorXd e(1), s(1);
    e << 3.0;
    s << 4.0;
    CHECK(protocol_W(p, 0, 0, e, s) == 5.0);
    CHECK(protocol_W(p, 0, 1, e, s) == 7.0);
}

TEST_CASE("contraction factor per protocol") {
    CHECK(make_protocol(ProtocolKind::sampled_data, {3}).lambda == 0.0);
    CHECK_NEAR(make_protocol(ProtocolKind::round_robin, {2, 2}).lambda,
               std::sqrt(0.5), 1e-15);
    CHECK_NEAR(make_protocol(ProtocolKind::largest_error_first, {2, 1}).lambda,
               std::sqrt(0.5), 1e-15);
    CHECK_NEAR(make_protocol(ProtocolKind::round_robin, {1, 2, 3}).lambda,
               std::sqrt(2.0 / 3.0), 1e-15);
}

TEST_CASE("transmission contracts the distance pointwise") {
    Rng r(55);
    for (const Protocol& p : all_protocols()) {
        for (int trial = 0; trial < 1000; ++trial) {
            const Eigen::VectorXd e = random_vec(r, p.dim);
            const Eigen::VectorXd s = random_vec(r, p.dim);
            const std::int64_t k = trial % 7;
            const Eigen::VectorXd s_post = apply_protocol(p, k, e) - e;
            const double before = protocol_W(p, k, 0, e, s);
            const double after = protocol_W(p, k + 1, 1, e, s_post);
            CHECK(after <= p.lambda * before + 1e-12);
        }
    }
}

TEST_CASE("successful update never expands the distance") {
    Rng r(56);
    for (const Protocol& p : all_protocols()) {
        for (int trial = 0; trial < 1000; ++trial) {
            const Eigen::VectorXd e = random_vec(r, p.dim);
            const Eigen::VectorXd s = random_vec(r, p.dim);
            const std::int64_t k = trial % 7;
            const double before = protocol_W(p, k, 1, e, s);
            const double after =
                protocol_W(p, k, 0, e + s, Eigen::VectorXd::Zero(p.dim));
            CHECK(after <= before + 1e-12);
        }
    }
}

TEST_CASE("round robin grants cyclically and zeroes the granted block") {
    const Protocol p = make_protocol(ProtocolKind::round_robin, {2, 2});
    Eigen::VectorXd e(4);
    e << 1, 2, 3, 4;
    for (std::int64_t k = 0; k < 6; ++k) {
        CHECK(granted_node(p, k, e) == static_cast<int>(k % 2));
        const Eigen::VectorXd h = apply_protocol(p, k, e);
        const int g = granted_node(p, k, e);
        CHECK(h.segment(p.offsets[g], p.node_sizes[g]).norm() == 0.0);
        CHECK(h.size() == 4);
    }
}

TEST_CASE("round robin wait weights count time since last grant") {
    const Protocol p = make_protocol(ProtocolKind::round_robin, {2, 2});
    // At k the granted node has weight 1, the waiting node the node count.
    Eigen::VectorXd e(4), s(4);
    e << 1, 0, 0, 0;  // only node 0 carries error
    s.setZero();
    const double w_granted = protocol_W(p, 0, 0, e, s);   // node 0 granted at k=0
    const double w_waiting = protocol_W(p, 1, 0, e, s);   // node 0 waits at k=1
    CHECK(w_granted == 1.0);
    CHECK_NEAR(w_waiting, std::sqrt(2.0), 1e-15);
}

TEST_CASE("largest error first grants the biggest block, ties to the lowest") {
    const Protocol p = make_protocol(ProtocolKind::largest_error_first, {1, 1});
    Eigen::VectorXd e(2);
    e << 1.0, 1.0;
    CHECK(granted_node(p, 0, e) == 0);  // tie
    e << 1.0, -2.0;
    CHECK(granted_node(p, 5, e) == 1);  // counter is ignored
    e << 3.0, -2.0;
    CHECK(granted_node(p, 5, e) == 0);
}

TEST_CASE("distance gradient matches finite differences") {
    Rng r(57);
    for (const Protocol& p : all_protocols()) {
        for (int l : {0, 1}) {
            Eigen::VectorXd e = random_vec(r, p.dim);
            const Eigen::VectorXd s = random_vec(r, p.dim);
            const std::int64_t k = 3;
            const Eigen::VectorXd g = protocol_W_grad_e(p, k, l, e, s);
            const double h = 1e-6;
            for (int i = 0; i < p.dim; ++i) {
                const double keep = e[i];
                e[i] = keep + h;
                const double up = protocol_W(p, k, l, e, s);
                e[i] = keep - h;
                const double dn = protocol_W(p, k, l, e, s);
                e[i] = keep;
                CHECK_NEAR(g[i], (up - dn) / (2.0 * h), 1e-5);
            }
        }
    }
}

TEST_CASE("gradient at the origin is zero") {
    const Protocol p = make_protocol(ProtocolKind::round_robin, {2, 2});
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    CHECK(protocol_W_grad_e(p, 0, 0, z, z).norm() == 0.0);
}

TEST_CASE("malformed partitions and dimensions are rejected") {
    CHECK_THROWS_AS(make_protocol(ProtocolKind::round_robin, {}), std::invalid_argument);
    CHECK_THROWS_AS(make_protocol(ProtocolKind::round_robin, {2, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_protocol(ProtocolKind::sampled_data, {2, 3}),
                    std::invalid_argument);
    const Protocol p = make_protocol(ProtocolKind::round_robin, {2, 2});
    const Eigen::VectorXd short_v = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd ok_v = Eigen::VectorXd::Zero(4);
    CHECK_THROWS_AS(protocol_W(p, 0, 0, short_v, ok_v), std::invalid_argument);
    CHECK_THROWS_AS(protocol_W(p, 0, 2, ok_v, ok_v), std::invalid_argument);
    CHECK_THROWS_AS(apply_protocol(p, 0, short_v), std::invalid_argument);
}
