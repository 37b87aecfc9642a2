#pragma once

// Dense 2^n x 2^n brute force for emitter-side expectations.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <vector>

#include "qshock/scenario.hpp"

namespace qshock::dense {

using Mat = Eigen::MatrixXcd;
using C = std::complex<double>;

/// mu on one qubit in the (|g>, |e>) basis with sigma+ = |e><g|.
inline Mat single_mu(double phase) {
    Mat sp = Mat::Zero(2, 2);
    sp(1, 0) = 1.0;
    const C e = std::polar(1.0, phase);
    return sp * e + sp.adjoint() * std::conj(e);
}

/// Operator acting as `op` on qubit i of n (qubit 0 most significant).
inline Mat embed(const Mat& op, std::size_t n, std::size_t i) {
    Mat out = Mat::Identity(1, 1);
    for (std::size_t q = 0; q < n; ++q) {
        const Mat f = q == i ? op : Mat::Identity(2, 2);
        Mat next = Eigen::kroneckerProduct(out, f).eval();
        out = next;
    }
    return out;
}

inline Mat density(const EmitterState& s) {
    const auto dim = static_cast<Eigen::Index>(s.dimension());
    Mat rho = Mat::Zero(dim, dim);
    for (const auto& c : s.components()) {
        Eigen::VectorXcd v(dim);
        for (Eigen::Index k = 0; k < dim; ++k) v(k) = c.amplitudes[static_cast<std::size_t>(k)];
        rho += c.weight * v * v.adjoint();
    }
    return rho;
}

inline double pair(const EmitterState& s, std::size_t i, std::size_t l, const std::vector<double>& phases) {
    const std::size_t n = s.qubits();
    const Mat op = embed(single_mu(phases[i]), n, i) * embed(single_mu(phases[l]), n, l);
    return (density(s) * op).trace().real();
}

/// Re tr(rho prod_i exp(i g_i mu_i)), each exponential taken numerically.
inline double product(const EmitterState& s, const std::vector<double>& g, const std::vector<double>& phases) {
    const std::size_t n = s.qubits();
    const auto dim = static_cast<Eigen::Index>(s.dimension());
    Mat op = Mat::Identity(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat gen = (C{0.0, g[i]} * embed(single_mu(phases[i]), n, i)).eval();
        op = (op * gen.exp()).eval();
    }
    return (density(s) * op).trace().real();
}

} // namespace qshock::dense
