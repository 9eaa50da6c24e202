#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "detc/plant_attitude.hpp"
#include "detc/plant_scripted.hpp"
#include "expected_values.hpp"
#include "test_near.hpp"

using namespace detc;

namespace {

AttitudeParams one_vehicle() {
    AttitudeParams p = default_attitude_params();
    p.vehicles = 1;
    p.q0.resize(1);
    p.rate0.resize(1);
    p.h0.resize(1);
    return p;
}

Eigen::VectorXd vehicle_state(double eta, const Eigen::Vector3d& eps,
                              const Eigen::Vector3d& w, double h) {
    Eigen::VectorXd x(8);
    x << eta, eps.x(), eps.y(), eps.z(), w.x(), w.y(), w.z(), h;
    return x;
}

} // namespace

TEST_CASE("skew matrix reproduces the cross product") {
    const Eigen::Vector3d a(1.0, -2.0, 0.5), b(0.3, 0.7, -1.1);
    CHECK((skew(a) * b - a.cross(b)).norm() == 0.0);
    CHECK((skew(a) * a).norm() == 0.0);
    CHECK((skew(a) + skew(a).transpose()).norm() == 0.0);
}

TEST_CASE("quaternion kinematics") {
    const Eigen::Vector3d eps(0.1, -0.2, 0.3), w(1.0, 2.0, -1.0);
    CHECK_NEAR(quat_scalar_rate(eps, w), -0.5 * eps.dot(w), 1e-15);
    CHECK((quat_vector_rate(1.0, Eigen::Vector3d::Zero(), w) - 0.5 * w).norm() == 0.0);
}

TEST_CASE("held-estimate control law") {
    const Eigen::Matrix3d K = 0.013 * Eigen::Matrix3d::Identity();
    const Eigen::Vector3d u = attitude_control(3.0, K, 1.0, {0.1, 0.0, 0.0},
                                               Eigen::Vector3d::Zero());
    CHECK_NEAR(u.x(), -0.3, 1e-12);
    CHECK(u.y() == 0.0);
    CHECK(u.z() == 0.0);
    // The logic variable steers the attitude term to the nearer equilibrium.
    const Eigen::Vector3d v = attitude_control(3.0, K, -1.0, {0.1, 0.0, 0.0},
                                               {1.0, 0.0, 0.0});
    CHECK_NEAR(v.x(), 0.3 - 0.013, 1e-12);
}

TEST_CASE("rotation of a unit error quaternion is orthonormal") {
    const Eigen::Vector3d eps = std::sqrt(0.96) * Eigen::Vector3d(1, 2, 3).normalized();
    const Eigen::Matrix3d R = rotation_of_quat(-0.2, eps);
    CHECK((R * R.transpose() - Eigen::Matrix3d::Identity()).norm() <= 1e-12);
    CHECK_NEAR(R.determinant(), 1.0, 1e-12);
    CHECK((rotation_of_quat(1.0, Eigen::Vector3d::Zero()) -
           Eigen::Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("gyroscopic coupling reduces to the momentum skew at rest reference") {
    const Eigen::Matrix3d J = Eigen::Vector3d(0.13, 0.13, 0.04).asDiagonal();
    const Eigen::Vector3d we(0.4, -0.1, 0.2);
    CHECK((tracking_coupling(J, we, Eigen::Vector3d::Zero()) - skew(J * we)).norm() ==
          0.0);
}

TEST_CASE("storage at the far equilibrium with zero rates") {
    AttitudeParams p = one_vehicle();
    p.q0[0] = {-1.0, 0.0, 0.0, 0.0};
    p.rate0[0].setZero();
    p.h0[0] = 1.0;
    AttitudePlant plant(p);
    CHECK(plant.storage(plant.default_state()) == expect::storage_identity_hneg);
    // Aligned equilibrium stores nothing.
    p.q0[0] = {1.0, 0.0, 0.0, 0.0};
    AttitudePlant aligned(p);
    CHECK(aligned.storage(aligned.default_state()) == 0.0);
}

TEST_CASE("flow dissipates storage at the rate-feedback quadratic") {
    AttitudeParams p = one_vehicle();
    AttitudePlant plant(p);
    const Eigen::Vector3d eps = std::sqrt(1.0 - 0.36) * Eigen::Vector3d(2, -1, 1).normalized();
    const Eigen::VectorXd x = vehicle_state(0.6, eps, {0.3, -0.2, 0.1}, 1.0);
    const Eigen::VectorXd sig_hat = plant.signal(x);  // perfect feedback
    Eigen::VectorXd dx(8), dsig(7);
    plant.flow(x, sig_hat, dx, dsig);

    const Eigen::Matrix3d J = p.inertia.asDiagonal();
    const Eigen::Vector3d w = x.segment<3>(4);
    const Eigen::Vector3d dw = dx.segment<3>(4);
    const double dV = -2.0 * p.attitude_gain * x(7) * dx(0) + w.dot(J * dw);
    CHECK_NEAR(dV, -w.dot(p.rate_gain * w), 1e-9);
    // The logic variable itself never flows.
    CHECK(dx(7) == 0.0);
    // The signal rate mirrors the state rate on the networked components.
    CHECK((dsig.head<4>() - dx.head<4>()).norm() == 0.0);
    CHECK((dsig.tail<3>() - dx.segment<3>(4)).norm() == 0.0);
}

TEST_CASE("hysteresis guard gates the logic flip") {
    AttitudePlant plant(one_vehicle());
    const Eigen::Vector3d eps_half = std::sqrt(0.75) * Eigen::Vector3d::UnitX();

    Eigen::VectorXd x = vehicle_state(-0.5, eps_half, Eigen::Vector3d::Zero(), 1.0);
    CHECK_NEAR(plant.event_guard(0, x), -0.05, 1e-12);
    plant.event_jump(0, x);
    CHECK(x(7) == -1.0);

    x = vehicle_state(0.5, eps_half, Eigen::Vector3d::Zero(), -1.0);
    CHECK_NEAR(plant.event_guard(0, x), -0.05, 1e-12);
    plant.event_jump(0, x);
    CHECK(x(7) == 1.0);

    x = vehicle_state(-0.4, std::sqrt(1 - 0.16) * Eigen::Vector3d::UnitX(),
                      Eigen::Vector3d::Zero(), 1.0);
    CHECK_NEAR(plant.event_guard(0, x), 0.05, 1e-12);
    CHECK_THROWS_AS(plant.event_jump(0, x), std::domain_error);

    CHECK(plant.event_count() == 1);
    CHECK(plant.event_network(0) == 0);
}

TEST_CASE("renormalization pulls the quaternion back to the unit sphere") {
    AttitudePlant plant(one_vehicle());
    Eigen::VectorXd x = vehicle_state(1.0 + 1e-7, Eigen::Vector3d::Zero(),
                                      {0.1, 0.2, 0.3}, 1.0);
    plant.post_step(x);
    CHECK_NEAR(x.head<4>().norm(), 1.0, 1e-15);
    CHECK(x(4) == 0.1);  // rates untouched
}

TEST_CASE("constructor rejects malformed fleets") {
    auto bad = [](auto&& mutate) {
        AttitudeParams q = default_attitude_params();
        mutate(q);
        CHECK_THROWS_AS(AttitudePlant{q}, std::invalid_argument);
    };
    bad([](AttitudeParams& q) { q.q0[1][0] = 1.002; q.q0[1].tail<3>().setZero(); });
    bad([](AttitudeParams& q) { q.h0[0] = 0.0; });
    bad([](AttitudeParams& q) { q.hysteresis_margin = 1.0; });
    bad([](AttitudeParams& q) { q.attitude_gain = 0.0; });
    bad([](AttitudeParams& q) { q.inertia[2] = 0.0; });
    bad([](AttitudeParams& q) { q.rate0.pop_back(); });
    bad([](AttitudeParams& q) { q.vehicles = 0; });
}

TEST_CASE("default fleet geometry") {
    const AttitudeParams p = default_attitude_params();
    REQUIRE(p.vehicles == 4);
    for (const auto& q : p.q0) CHECK_NEAR(q.norm(), 1.0, 1e-12);
    CHECK(p.q0[0][0] == -0.2);
    CHECK(p.q0[1][0] == 0.2);
    CHECK(p.q0[2][1] == -p.q0[1][1]);  // paired attitudes along one axis
    AttitudePlant plant(p);
    CHECK(plant.state_dim() == 32);
    CHECK(plant.signal_dim() == 28);
    CHECK(plant.signal(plant.default_state()).size() == 28);
}

TEST_CASE("frozen plant holds its state and exposes it as the signal") {
    FrozenPlant plant(5);
    CHECK(plant.state_dim() == 5);
    CHECK(plant.signal_dim() == 5);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    CHECK((plant.signal(x) - x).norm() == 0.0);
    Eigen::VectorXd dx, dsig;
    plant.flow(x, x, dx, dsig);
    CHECK(dx.norm() == 0.0);
    CHECK(dsig.norm() == 0.0);
    CHECK(plant.storage(x) == 0.0);
    CHECK(plant.event_count() == 0);
    CHECK_THROWS_AS(FrozenPlant{0}, std::invalid_argument);
}
