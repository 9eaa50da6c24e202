#ifndef DETC_PLANT_ATTITUDE_HPP
#define DETC_PLANT_ATTITUDE_HPP

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "detc/plant.hpp"

namespace detc {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d s;
    s << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return s;
}

// Error-quaternion kinematics: (eta, eps) driven by the rate error.
inline double quat_scalar_rate(const Eigen::Vector3d& eps, const Eigen::Vector3d& w) {
    return -0.5 * eps.dot(w);
}

inline Eigen::Vector3d quat_vector_rate(double eta, const Eigen::Vector3d& eps,
                                        const Eigen::Vector3d& w) {
    return 0.5 * (eta * Eigen::Matrix3d::Identity() + skew(eps)) * w;
}

// Hysteresis attitude controller on held estimates.
inline Eigen::Vector3d attitude_control(double kappa, const Eigen::Matrix3d& K,
                                        double h, const Eigen::Vector3d& eps_hat,
                                        const Eigen::Vector3d& rate_hat) {
    return -kappa * h * eps_hat - K * rate_hat;
}

// Rotation matrix of an error quaternion (general form, used for checks).
inline Eigen::Matrix3d rotation_of_quat(double eta, const Eigen::Vector3d& eps) {
    const Eigen::Matrix3d s = skew(eps);
    return Eigen::Matrix3d::Identity() + 2.0 * eta * s + 2.0 * s * s;
}

// Gyroscopic coupling for a moving reference rate (general form; the shipped
// scenarios use a constant zero reference, where this reduces to S(J w)).
inline Eigen::Matrix3d tracking_coupling(const Eigen::Matrix3d& J,
                                         const Eigen::Vector3d& w_err,
                                         const Eigen::Vector3d& w_ref) {
    return skew(J * w_err) + skew(J * w_ref) - skew(w_ref) * J - J * skew(w_ref);
}

// Per-vehicle storage: hysteresis-shaped attitude term plus rotational energy.
inline double attitude_storage(double kappa, const Eigen::Matrix3d& J, double eta,
                               double h, const Eigen::Vector3d& w) {
    return 2.0 * kappa * (1.0 - h * eta) + 0.5 * w.dot(J * w);
}

struct AttitudeParams {
    int vehicles = 4;
    Eigen::Vector3d inertia{0.13, 0.13, 0.04};
    double attitude_gain = 3.0;                  // kappa
    Eigen::Matrix3d rate_gain = 0.13 * Eigen::Matrix3d::Identity();
    double hysteresis_margin = 0.45;
    std::vector<Eigen::Vector4d> q0;             // (eta, eps)
    std::vector<Eigen::Vector3d> rate0;
    std::vector<double> h0;
};

// Case-study fleet: four vehicles, paired initial attitudes along a common
// axis, identical initial rates.
inline AttitudeParams default_attitude_params() {
    AttitudeParams p;
    const Eigen::Vector3d axis = Eigen::Vector3d(1, 2, 3).normalized();
    const Eigen::Vector3d eps = std::sqrt(0.96) * axis;
    p.q0 = {{-0.2, eps.x(), eps.y(), eps.z()},
            {0.2, -eps.x(), -eps.y(), -eps.z()},
            {0.2, eps.x(), eps.y(), eps.z()},
            {-0.2, -eps.x(), -eps.y(), -eps.z()}};
    const Eigen::Vector3d w0 = 0.2 * axis;
    p.rate0 = {w0, w0, w0, w0};
    p.h0 = {1, 1, 1, 1};
    return p;
}

// Fleet of rigid bodies tracking a fixed reference attitude, one vehicle per
// network. State per vehicle: [eta, eps(3), rate(3), h]; networked signal per
// vehicle: [eta, eps(3), rate(3)].
class AttitudePlant final : public Plant {
public:
    explicit AttitudePlant(AttitudeParams p) : p_(std::move(p)) {
        if (p_.vehicles <= 0) throw std::invalid_argument("need at least one vehicle");
        if (!(p_.inertia.minCoeff() > 0))
            throw std::invalid_argument("inertia must be positive");
        if (!(p_.attitude_gain > 0)) throw std::invalid_argument("attitude gain must be positive");
        if (!(p_.hysteresis_margin > 0) || !(p_.hysteresis_margin < 1))
            throw std::invalid_argument("hysteresis margin must lie in (0,1)");
        if (static_cast<int>(p_.q0.size()) != p_.vehicles ||
            static_cast<int>(p_.rate0.size()) != p_.vehicles ||
            static_cast<int>(p_.h0.size()) != p_.vehicles)
            throw std::invalid_argument("initial conditions do not match vehicle count");
        for (const auto& q : p_.q0)
            if (std::abs(q.norm() - 1.0) > 1e-3)
                throw std::invalid_argument("initial attitude quaternion is not unit");
        for (double h : p_.h0)
            if (h != 1.0 && h != -1.0)
                throw std::invalid_argument("logic variable must be +1 or -1");
        J_ = p_.inertia.asDiagonal();
        J_inv_ = p_.inertia.cwiseInverse().asDiagonal();
    }

    const AttitudeParams& params() const { return p_; }

    int state_dim() const override { return 8 * p_.vehicles; }
    int signal_dim() const override { return 7 * p_.vehicles; }

    Eigen::VectorXd default_state() const override {
        Eigen::VectorXd x(state_dim());
        for (int i = 0; i < p_.vehicles; ++i) {
            x.segment<4>(8 * i) = p_.q0[i];
            x.segment<3>(8 * i + 4) = p_.rate0[i];
            x(8 * i + 7) = p_.h0[i];
        }
        return x;
    }

    void flow(const Eigen::VectorXd& x, const Eigen::VectorXd& sig_hat,
              Eigen::VectorXd& dx, Eigen::VectorXd& dsig) const override {
        dx.setZero(state_dim());
        dsig.setZero(signal_dim());
        for (int i = 0; i < p_.vehicles; ++i) {
            const double eta = x(8 * i);
            const Eigen::Vector3d eps = x.segment<3>(8 * i + 1);
            const Eigen::Vector3d w = x.segment<3>(8 * i + 4);
            const double h = x(8 * i + 7);
            const double qn = std::sqrt(eta * eta + eps.squaredNorm());
            if (std::abs(qn - 1.0) > 1e-3)
                throw std::domain_error("attitude quaternion left the unit sphere");
            const Eigen::Vector3d eps_hat = sig_hat.segment<3>(7 * i + 1);
            const Eigen::Vector3d w_hat = sig_hat.segment<3>(7 * i + 4);
            const Eigen::Vector3d u =
                attitude_control(p_.attitude_gain, p_.rate_gain, h, eps_hat, w_hat);
            const double deta = quat_scalar_rate(eps, w);
            const Eigen::Vector3d deps = quat_vector_rate(eta, eps, w);
            const Eigen::Vector3d dw = J_inv_ * (skew(J_ * w) * w + u);
            dx(8 * i) = deta;
            dx.segment<3>(8 * i + 1) = deps;
            dx.segment<3>(8 * i + 4) = dw;
            dsig(7 * i) = deta;
            dsig.segment<3>(7 * i + 1) = deps;
            dsig.segment<3>(7 * i + 4) = dw;
        }
    }

    Eigen::VectorXd signal(const Eigen::VectorXd& x) const override {
        Eigen::VectorXd sig(signal_dim());
        for (int i = 0; i < p_.vehicles; ++i) {
            sig.segment<4>(7 * i) = x.segment<4>(8 * i);
            sig.segment<3>(7 * i + 4) = x.segment<3>(8 * i + 4);
        }
        return sig;
    }

    double storage(const Eigen::VectorXd& x) const override {
        double v = 0;
        for (int i = 0; i < p_.vehicles; ++i)
            v += attitude_storage(p_.attitude_gain, J_, x(8 * i), x(8 * i + 7),
                                  x.segment<3>(8 * i + 4));
        return v;
    }

    void post_step(Eigen::VectorXd& x) const override {
        for (int i = 0; i < p_.vehicles; ++i)
            x.segment<4>(8 * i).normalize();
    }

    int event_count() const override { return p_.vehicles; }

    double event_guard(int i, const Eigen::VectorXd& x) const override {
        return x(8 * i + 7) * x(8 * i) + p_.hysteresis_margin;
    }

    void event_jump(int i, Eigen::VectorXd& x) const override {
        // Tolerance covers crossing localization plus quaternion renormalizing.
        if (event_guard(i, x) > 1e-6)
            throw std::domain_error("logic flip requested outside its guard set");
        x(8 * i + 7) = -x(8 * i + 7);
    }

    int event_network(int i) const override { return i; }

private:
    AttitudeParams p_;
    Eigen::Matrix3d J_, J_inv_;
};

} // namespace detc

#endif
