// Deterministic pseudo-random protocol factory for property tests.
#ifndef QDFR_TESTS_RANDOM_PROTOCOL_HPP
#define QDFR_TESTS_RANDOM_PROTOCOL_HPP

#include <random>

#include "qdfr/protocol.hpp"

namespace testrand {

inline qdfr::ComplexMatrix random_hermitian(std::mt19937_64& rng, int dim, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    qdfr::ComplexMatrix h(dim);
    for (int i = 0; i < dim; ++i) {
        h(i, i) = qdfr::cplx(u(rng), 0.0);
        for (int j = i + 1; j < dim; ++j) {
            const qdfr::cplx v(u(rng), u(rng));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return h;
}

// Rejects spectra with gaps under 0.05 so validation never trips.
inline qdfr::ComplexMatrix random_nondegenerate_hermitian(std::mt19937_64& rng, int dim,
                                                          double scale = 1.0) {
    for (;;) {
        qdfr::ComplexMatrix h = random_hermitian(rng, dim, scale);
        const auto eig = qdfr::herm_eigen(h);
        bool ok = true;
        for (size_t i = 0; i + 1 < eig.eigenvalues.size(); ++i)
            if (eig.eigenvalues[i + 1] - eig.eigenvalues[i] < 0.05) ok = false;
        if (ok) return h;
    }
}

inline qdfr::ComplexMatrix random_unitary(std::mt19937_64& rng, int dim) {
    return qdfr::phase_exp(random_hermitian(rng, dim), 1.0);
}

inline std::vector<qdfr::ComplexMatrix> random_projectors(std::mt19937_64& rng, int dim) {
    const qdfr::ComplexMatrix w = random_unitary(rng, dim);
    std::vector<qdfr::ComplexMatrix> out;
    for (int l = 0; l < dim; ++l) out.push_back(w * qdfr::ketbra(dim, l, l) * w.dagger());
    return out;
}

inline std::vector<std::vector<double>> random_mismatch(std::mt19937_64& rng, int n_branches,
                                                        int n_outcomes) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<std::vector<double>> m(static_cast<size_t>(n_branches),
                                       std::vector<double>(static_cast<size_t>(n_outcomes)));
    for (int l = 0; l < n_outcomes; ++l) {
        double col = 0.0;
        for (int k = 0; k < n_branches; ++k) col += (m[static_cast<size_t>(k)][static_cast<size_t>(l)] = u(rng));
        for (int k = 0; k < n_branches; ++k) m[static_cast<size_t>(k)][static_cast<size_t>(l)] /= col;
    }
    return m;
}

inline qdfr::FeedbackProtocol random_protocol(std::mt19937_64& rng, int dim = 2,
                                              int n_branches = 2) {
    std::uniform_real_distribution<double> ub(0.1, 1.5);
    qdfr::FeedbackProtocol p;
    p.beta = ub(rng);
    p.h0 = random_nondegenerate_hermitian(rng, dim);
    p.u_drive = random_unitary(rng, dim);
    p.meas_projectors = random_projectors(rng, dim);
    p.mismatch = random_mismatch(rng, n_branches, dim);
    p.branches.resize(static_cast<size_t>(n_branches));
    for (auto& b : p.branches) {
        b.v_feedback = random_unitary(rng, dim);
        b.h_final = random_nondegenerate_hermitian(rng, dim);
    }
    return p;
}

} // namespace testrand

#endif
