#include <doctest.h>

#include <random>

#include "qdfr/matrix.hpp"

using namespace qdfr;

namespace {

ComplexMatrix random_hermitian(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexMatrix h(dim);
    for (int i = 0; i < dim; ++i) {
        h(i, i) = cplx(u(rng), 0.0);
        for (int j = i + 1; j < dim; ++j) {
            const cplx v(u(rng), u(rng));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return h;
}

} // namespace

TEST_CASE("pauli algebra and predicates") {
    CHECK(pauli_x().is_hermitian());
    CHECK(pauli_y().is_hermitian());
    CHECK(pauli_z().is_hermitian());
    CHECK(pauli_x().is_unitary());
    CHECK(max_abs_diff(pauli_x() * pauli_x(), identity(2)) < 1e-15);
    // sigma_x sigma_y = i sigma_z
    CHECK(max_abs_diff(pauli_x() * pauli_y(), cplx(0, 1) * pauli_z()) < 1e-15);
    CHECK(pauli_form(0, 0, 0, 0.5).is_density());
    CHECK_FALSE(pauli_form(1, 0, 0, 0.0).is_density());
}

TEST_CASE("construction guards") {
    CHECK_THROWS_AS(ComplexMatrix(0), DimensionMismatch);
    CHECK_THROWS_AS(ComplexMatrix(kMaxDim + 1), DimensionMismatch);
    CHECK_THROWS_AS(ComplexMatrix(2, {cplx(1, 0)}), DimensionMismatch);
    CHECK_THROWS_AS(pauli_x() * identity(3), DimensionMismatch);
}

TEST_CASE("eigendecomposition of sigma_x") {
    const auto eig = herm_eigen(pauli_x());
    CHECK(eig.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(eig.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
    // Columns are |-> and |+> up to the fixed phase convention; check by
    // reconstruction instead of entry values.
    ComplexMatrix rebuilt(2);
    for (int m = 0; m < 2; ++m)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                rebuilt(i, j) += eig.eigenvalues[static_cast<size_t>(m)] *
                                 eig.eigenvectors(i, m) * std::conj(eig.eigenvectors(j, m));
    CHECK(max_abs_diff(rebuilt, pauli_x()) < 1e-14);
}

TEST_CASE("eigendecomposition against random Hermitian matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 7);
        const ComplexMatrix h = random_hermitian(rng, dim);
        const auto eig = herm_eigen(h);
        // ascending order
        for (size_t i = 0; i + 1 < eig.eigenvalues.size(); ++i)
            CHECK(eig.eigenvalues[i] <= eig.eigenvalues[i + 1]);
        // residual H v = lambda v
        for (int m = 0; m < dim; ++m) {
            double worst = 0.0;
            for (int i = 0; i < dim; ++i) {
                cplx hv(0, 0);
                for (int j = 0; j < dim; ++j) hv += h(i, j) * eig.eigenvectors(j, m);
                worst = std::max(worst,
                                 std::abs(hv - eig.eigenvalues[static_cast<size_t>(m)] *
                                                   eig.eigenvectors(i, m)));
            }
            CHECK(worst < 1e-12);
        }
        CHECK(eig.eigenvectors.is_unitary());
    }
}

TEST_CASE("eigendecomposition rejects non-Hermitian input") {
    ComplexMatrix a(2, {cplx(0, 0), cplx(1, 0), cplx(0, 0), cplx(0, 0)});
    CHECK_THROWS_AS(herm_eigen(a), NotHermitian);
}

TEST_CASE("degenerate clusters") {
    const auto eig = herm_eigen(identity(3));
    const auto clusters = eig.degenerate_clusters();
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].size() == 3);
    // simple spectra come back as singleton groups
    const auto eig2 = herm_eigen(pauli_z());
    const auto simple = eig2.degenerate_clusters();
    REQUIRE(simple.size() == 2);
    CHECK(simple[0].size() == 1);
    CHECK(simple[1].size() == 1);
}

TEST_CASE("deterministic eigenvector phases") {
    std::mt19937_64 rng(11);
    const ComplexMatrix h = random_hermitian(rng, 5);
    const auto a = herm_eigen(h);
    const auto b = herm_eigen(h);
    CHECK(max_abs_diff(a.eigenvectors, b.eigenvectors) == 0.0);
}

TEST_CASE("kron dimensions and values") {
    const ComplexMatrix k = kron(pauli_z(), identity(2));
    CHECK(k.dim() == 4);
    CHECK(k(0, 0) == cplx(1, 0));
    CHECK(k(3, 3) == cplx(-1, 0));
    // (A kron B)(C kron D) = AC kron BD
    std::mt19937_64 rng(3);
    const ComplexMatrix a = random_hermitian(rng, 2), b = random_hermitian(rng, 3);
    const ComplexMatrix c = random_hermitian(rng, 2), d = random_hermitian(rng, 3);
    CHECK(max_abs_diff(kron(a, b) * kron(c, d), kron(a * c, b * d)) < 1e-13);
}

TEST_CASE("partial trace") {
    // Tracing out either factor of a product state returns the other.
    const ComplexMatrix rho_a = pauli_form(0.3, 0.1, -0.4, 0.5);
    const ComplexMatrix rho_b = pauli_form(-0.2, 0.0, 0.6, 0.5);
    const ComplexMatrix joint = kron(rho_a, rho_b);
    CHECK(max_abs_diff(partial_trace(joint, {2, 2}, {0}), rho_a) < 1e-14);
    CHECK(max_abs_diff(partial_trace(joint, {2, 2}, {1}), rho_b) < 1e-14);
    // keeping everything is the identity map
    CHECK(max_abs_diff(partial_trace(joint, {2, 2}, {0, 1}), joint) < 1e-15);
    // trace preservation on an entangled state
    ComplexMatrix bell(4);
    bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = cplx(0.5, 0.0);
    const ComplexMatrix red = partial_trace(bell, {2, 2}, {1});
    CHECK(std::abs(red.trace() - cplx(1, 0)) < 1e-15);
    CHECK(max_abs_diff(red, 0.5 * identity(2)) < 1e-15);
    CHECK_THROWS_AS(partial_trace(bell, {2, 3}, {0}), DimensionMismatch);
}

TEST_CASE("phase_exp equals the two-term Pauli identity") {
    // e^{i theta sigma_x} = cos(theta) 1 + i sin(theta) sigma_x
    for (double theta : {0.0, 0.3, -1.2, 3.9}) {
        const ComplexMatrix lhs = phase_exp(pauli_x(), theta);
        const ComplexMatrix rhs =
            std::cos(theta) * identity(2) + cplx(0, 1) * std::sin(theta) * pauli_x();
        CHECK(max_abs_diff(lhs, rhs) < 1e-14);
        CHECK(lhs.is_unitary());
    }
}

TEST_CASE("phase_exp composes additively") {
    std::mt19937_64 rng(19);
    const ComplexMatrix h = random_hermitian(rng, 4);
    const ComplexMatrix a = phase_exp(h, 0.7) * phase_exp(h, 0.5);
    CHECK(max_abs_diff(a, phase_exp(h, 1.2)) < 1e-12);
}

TEST_CASE("dagger and trace") {
    std::mt19937_64 rng(23);
    const ComplexMatrix a = random_hermitian(rng, 3);
    const ComplexMatrix u = phase_exp(a, 1.0);
    CHECK(max_abs_diff(u * u.dagger(), identity(3)) < 1e-13);
    CHECK(std::abs((u * u.dagger()).trace() - cplx(3, 0)) < 1e-13);
}
