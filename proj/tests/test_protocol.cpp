#include <doctest.h>

#include <cmath>
#include <random>

#include "analytic_twolevel.hpp"
#include "qdfr/protocol.hpp"
#include "random_protocol.hpp"

using namespace qdfr;

TEST_CASE("validate accepts the bundled protocol") {
    CHECK_NOTHROW(twolevel::make_protocol().validate());
}

TEST_CASE("validate rejects broken protocols") {
    auto p = twolevel::make_protocol();
    SUBCASE("nonpositive beta") {
        p.beta = 0.0;
        CHECK_THROWS_AS(p.validate(), ProtocolInvalid);
    }
    SUBCASE("incomplete projectors") {
        p.meas_projectors[1] = 0.5 * ketbra(2, 1, 1);
        CHECK_THROWS_AS(p.validate(), ProtocolInvalid);
    }
    SUBCASE("column sums away from one") {
        p.mismatch[0][0] = 0.3;
        CHECK_THROWS_AS(p.validate(), ProtocolInvalid);
    }
    SUBCASE("nonunitary drive") {
        p.u_drive = 0.5 * identity(2);
        CHECK_THROWS_AS(p.validate(), ProtocolInvalid);
    }
    SUBCASE("degenerate branch Hamiltonian") {
        p.branches[0].h_final = identity(2);
        CHECK_THROWS_AS(p.validate(), DegenerateSpectrum);
    }
    SUBCASE("dimension mismatch") {
        p.branches[0].v_feedback = identity(4);
        CHECK_THROWS_AS(p.validate(), ProtocolInvalid);
    }
}

TEST_CASE("rx mismatch columns are conditional distributions") {
    for (double phi : {0.0, 0.3, twolevel::kPhi, 1.2}) {
        const auto m = rx_mismatch(phi);
        CHECK(m[0][0] + m[1][0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m[0][1] + m[1][1] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m[0][0] == doctest::Approx(std::cos(phi) * std::cos(phi)).epsilon(1e-14));
    }
    // phi = 0 is the ideal controller
    const auto id = rx_mismatch(0.0);
    CHECK(id[0][0] == 1.0);
    CHECK(id[0][1] == 0.0);
}

TEST_CASE("gibbs state is thermal") {
    const ComplexMatrix g = gibbs_state(-1.0 * pauli_z(), 0.2);
    CHECK(g.is_density());
    CHECK(g(0, 0).real() == doctest::Approx(twolevel::kPl0).epsilon(1e-14));
    CHECK(std::abs(g(0, 1)) < 1e-15);
    // beta = 0 is maximally mixed
    CHECK(max_abs_diff(gibbs_state(pauli_x(), 0.0), 0.5 * identity(2)) < 1e-14);
    CHECK_THROWS_AS(gibbs_state(pauli_x(), -0.1), BetaNonpositive);
}

TEST_CASE("free energy difference closed form") {
    const double df0 = free_energy_difference(-1.0 * pauli_z(), -2.0 * pauli_x(), 0.2);
    CHECK(df0 == doctest::Approx(twolevel::kDF0).epsilon(1e-14));
    const double df1 = free_energy_difference(-1.0 * pauli_z(), -3.0 * pauli_x(), 0.2);
    CHECK(df1 == doctest::Approx(twolevel::kDF1).epsilon(1e-14));
    CHECK_THROWS_AS(free_energy_difference(pauli_z(), pauli_z(), 0.0), BetaNonpositive);
}

TEST_CASE("outcome and branch probabilities of the bundled protocol") {
    const auto p = twolevel::make_protocol();
    const auto pl = forward_outcome_probs(p);
    CHECK(pl[0] == doctest::Approx(twolevel::kPl0).epsilon(1e-14));
    CHECK(pl[1] == doctest::Approx(twolevel::kPl1).epsilon(1e-14));
    const auto pk = branch_probs(p);
    CHECK(pk[0] == doctest::Approx(twolevel::kPk0).epsilon(1e-14));
    CHECK(pk[1] == doctest::Approx(twolevel::kPk1).epsilon(1e-14));
    const auto df = branch_free_energies(p);
    CHECK(df[0] == doctest::Approx(twolevel::kDF0).epsilon(1e-14));
    CHECK(df[1] == doctest::Approx(twolevel::kDF1).epsilon(1e-14));
}

TEST_CASE("time reversal squares to minus one") {
    const TimeReversalOp th = TimeReversalOp::qubit();
    // Theta^2 acts as Y conj(Y) on the unitary part.
    const ComplexMatrix sq = th.unitary_part * th.unitary_part.conj();
    CHECK(max_abs_diff(sq, cplx(-1, 0) * identity(2)) == 0.0);
    const TimeReversalOp th2 = TimeReversalOp::qubits(2);
    const ComplexMatrix sq2 = th2.unitary_part * th2.unitary_part.conj();
    CHECK(max_abs_diff(sq2, identity(4)) == 0.0); // (-1)^2 on two qubits
}

TEST_CASE("time reversal is an involution on observables and evolutions") {
    std::mt19937_64 rng(31);
    const TimeReversalOp th = TimeReversalOp::qubit();
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix h = testrand::random_hermitian(rng, 2);
        CHECK(max_abs_diff(th.observable(th.observable(h)), h) < 1e-13);
        const ComplexMatrix u = testrand::random_unitary(rng, 2);
        // reversing an evolution twice restores it
        const ComplexMatrix once = time_reverse(u, th, OpKind::evolution);
        CHECK(max_abs_diff(time_reverse(once, th, OpKind::evolution), u) < 1e-13);
        // reversed evolutions stay unitary, reversed observables Hermitian
        CHECK(once.is_unitary());
        CHECK(th.observable(h).is_hermitian());
    }
}

TEST_CASE("time reversal maps computational states across the register") {
    const TimeReversalOp th = TimeReversalOp::qubit();
    // |0><0| -> |1><1| and |+><+| -> |-><-|
    CHECK(max_abs_diff(th.observable(ketbra(2, 0, 0)), ketbra(2, 1, 1)) < 1e-15);
    ComplexMatrix plus(2, {cplx(0.5, 0), cplx(0.5, 0), cplx(0.5, 0), cplx(0.5, 0)});
    ComplexMatrix minus(2, {cplx(0.5, 0), cplx(-0.5, 0), cplx(-0.5, 0), cplx(0.5, 0)});
    CHECK(max_abs_diff(th.observable(plus), minus) < 1e-15);
}

TEST_CASE("backward protocol of the bundled model") {
    const auto p = twolevel::make_protocol();
    const auto b = build_backward(p, TimeReversalOp::qubit());
    CHECK_NOTHROW(b.validate());
    CHECK(b.beta == p.beta);

    // reversed sampling is the branch distribution
    const auto pk = branch_probs(p);
    CHECK(b.sampling[0] == doctest::Approx(pk[0]).epsilon(1e-14));
    CHECK(b.sampling[1] == doctest::Approx(pk[1]).epsilon(1e-14));

    // reversed measurement swaps the computational labels
    CHECK(max_abs_diff(b.meas_projectors_rev[0], ketbra(2, 1, 1)) < 1e-15);
    CHECK(max_abs_diff(b.meas_projectors_rev[1], ketbra(2, 0, 0)) < 1e-15);

    // spectra pair index by index: the reversed final Hamiltonian carries
    // the initial spectrum, each reversed initial one a branch spectrum
    const auto e_fin = herm_eigen(b.h_final_rev).eigenvalues;
    CHECK(e_fin[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(e_fin[1] == doctest::Approx(1.0).epsilon(1e-14));
    const auto e0 = herm_eigen(b.initial_hamiltonians[0]).eigenvalues;
    CHECK(e0[0] == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(e0[1] == doctest::Approx(2.0).epsilon(1e-14));

    // reversed drive undoes the reversed forward drive
    const TimeReversalOp th = TimeReversalOp::qubit();
    CHECK(max_abs_diff(b.u_drive_rev, time_reverse(p.u_drive, th, OpKind::evolution)) < 1e-14);
}

TEST_CASE("backward spectra pair for random protocols") {
    std::mt19937_64 rng(37);
    const TimeReversalOp th = TimeReversalOp::qubit();
    for (int trial = 0; trial < 25; ++trial) {
        const auto p = testrand::random_protocol(rng);
        const auto b = build_backward(p, th);
        const auto ef = herm_eigen(p.h0).eigenvalues;
        const auto er = herm_eigen(b.h_final_rev).eigenvalues;
        for (size_t i = 0; i < ef.size(); ++i)
            CHECK(er[i] == doctest::Approx(ef[i]).epsilon(1e-12));
        for (size_t k = 0; k < p.branches.size(); ++k) {
            const auto e1 = herm_eigen(p.branches[k].h_final).eigenvalues;
            const auto e2 = herm_eigen(b.initial_hamiltonians[k]).eigenvalues;
            for (size_t i = 0; i < e1.size(); ++i)
                CHECK(e2[i] == doctest::Approx(e1[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("json round trip is bit exact") {
    auto p = twolevel::make_protocol();
    const std::string text = protocol_to_json(p);
    const FeedbackProtocol q = protocol_from_json(text);
    CHECK(q.beta == p.beta);
    CHECK(max_abs_diff(q.h0, p.h0) == 0.0);
    CHECK(max_abs_diff(q.u_drive, p.u_drive) == 0.0);
    CHECK(max_abs_diff(q.branches[1].v_feedback, p.branches[1].v_feedback) == 0.0);
    CHECK(max_abs_diff(q.branches[1].h_final, p.branches[1].h_final) == 0.0);
    REQUIRE(q.rx_phi.has_value());
    CHECK(*q.rx_phi == *p.rx_phi);
    CHECK(q.mismatch == p.mismatch);
    // and the explicit-matrix form round-trips too
    p.rx_phi.reset();
    const FeedbackProtocol q2 = protocol_from_json(protocol_to_json(p));
    CHECK(q2.mismatch == p.mismatch);
    CHECK_FALSE(q2.rx_phi.has_value());
}

TEST_CASE("json parse errors name the field") {
    CHECK_THROWS_AS(protocol_from_json("{}"), ConfigInvalid);
    CHECK_THROWS_AS(protocol_from_json("not json"), ConfigInvalid);
    try {
        protocol_from_json(R"({"h0": [[[0,0],[0,0]],[[0,0],[0,0]]]})");
        FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
    }
}
