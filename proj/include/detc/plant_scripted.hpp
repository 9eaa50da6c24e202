#ifndef DETC_PLANT_SCRIPTED_HPP
#define DETC_PLANT_SCRIPTED_HPP

#include <Eigen/Core>
#include <stdexcept>

#include "detc/plant.hpp"

namespace detc {

// Frozen plant: the networked signal is the state itself and nothing moves.
// With scripted delays and attacks this makes every simulator event
// deadline-fired and exactly reproducible by discrete replay.
class FrozenPlant final : public Plant {
public:
    explicit FrozenPlant(int dim) : dim_(dim) {
        if (dim <= 0) throw std::invalid_argument("dimension must be positive");
    }

    int state_dim() const override { return dim_; }
    int signal_dim() const override { return dim_; }

    void flow(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd& dx,
              Eigen::VectorXd& dsig) const override {
        dx.setZero(dim_);
        dsig.setZero(dim_);
    }

    Eigen::VectorXd signal(const Eigen::VectorXd& x) const override { return x; }

    double storage(const Eigen::VectorXd&) const override { return 0.0; }

private:
    int dim_;
};

} // namespace detc

#endif
