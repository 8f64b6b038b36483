// Shared test models and small independent oracles.
#pragma once

#include <cmath>
#include <vector>

#include "qlab/models.hpp"

namespace qlab::testing {

inline Model identity_model() {
    return make_linear_model({1.0}, InnovationDistribution(InnovationKind::gaussian, 1.0), 0.0);
}

inline Model rho_model(double rho = 0.5, int J = 40) {
    std::vector<double> a(static_cast<std::size_t>(J) + 1);
    for (int j = 0; j <= J; ++j) a[j] = std::pow(rho, j);
    return make_linear_model(a, InnovationDistribution(InnovationKind::gaussian, 1.0), std::pow(rho, J));
}

inline MarkovModel two_state_chain(double p = 0.3, double q = 0.3) {
    Eigen::MatrixXd P(2, 2);
    P << 1 - p, p, q, 1 - q;
    Eigen::VectorXd g(2);
    g << 1.0, -1.0;
    return MarkovModel(P, g);
}

inline Model two_state(double p = 0.3, double q = 0.3) { return two_state_chain(p, q); }

// Random primitive chain with an observable centered under its own stationary
// law, found by power iteration rather than the library solver.
inline MarkovModel random_chain(int states, RandomStream& stream) {
    Eigen::MatrixXd P(states, states);
    for (int i = 0; i < states; ++i) {
        double row = 0.0;
        for (int j = 0; j < states; ++j) {
            P(i, j) = 0.05 + stream.next_uniform();
            row += P(i, j);
        }
        P.row(i) /= row;
    }
    Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(states, 1.0 / states);
    for (int it = 0; it < 5000; ++it) pi = pi * P;
    Eigen::VectorXd g(states);
    for (int i = 0; i < states; ++i) g(i) = 2.0 * stream.next_uniform() - 1.0;
    g.array() -= pi.dot(g);
    return MarkovModel(P, g);
}

}  // namespace qlab::testing
