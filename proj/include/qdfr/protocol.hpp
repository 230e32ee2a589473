// Domain model of a discrete feedback protocol on a qubit register: thermal
// states, free energies, the antiunitary time-reversal map, and mechanical
// construction of the reversed protocol. Units fix hbar*omega0 = 1, so beta
// is the dimensionless beta' = beta*hbar*omega0.
#ifndef QDFR_PROTOCOL_HPP
#define QDFR_PROTOCOL_HPP

#include <optional>
#include <string>
#include <vector>

#include "qdfr/matrix.hpp"

namespace qdfr {

struct FeedbackBranch {
    ComplexMatrix v_feedback; // V^(k), applied between measurement and final point
    ComplexMatrix h_final;    // H^(k) at the final time
};

// Forward protocol: Gibbs state of h0, drive u_drive, projective measurement
// {M_l}, classical controller with mismatch channel p(k|l), branch unitaries
// and final Hamiltonians per controller outcome k.
struct FeedbackProtocol {
    double beta = 0.0;
    ComplexMatrix h0;
    ComplexMatrix u_drive;
    std::vector<ComplexMatrix> meas_projectors;
    // mismatch[k][l] = p(k|l); every column l sums to 1.
    std::vector<std::vector<double>> mismatch;
    std::vector<FeedbackBranch> branches;
    // Set when the mismatch came from the rotation model, so serialization
    // can round-trip the compact {model, phi} form.
    std::optional<double> rx_phi;

    int dim() const { return h0.dim(); }
    int n_outcomes() const { return static_cast<int>(meas_projectors.size()); }
    int n_branches() const { return static_cast<int>(branches.size()); }

    // Checks completeness/orthogonality of projectors, unitarity of the
    // drive and branch unitaries, hermiticity and nondegeneracy of the
    // Hamiltonians, and column-stochasticity of the mismatch channel.
    void validate() const;
};

// Mismatch channel of the rotated-controller model:
// p(k|l) = |<k| e^{-i phi sigma_x} |l>|^2.
std::vector<std::vector<double>> rx_mismatch(double phi);

// Reversed protocol. Eigenstate labels of the initial/final Hamiltonians are
// paired to the forward ones through the time-reversal map (ascending
// eigenvalue order realizes the pairing for the nondegenerate spectra we
// accept), so Ẽ_n(final) = E_n(initial) index by index.
struct BackwardProtocol {
    double beta = 0.0;
    std::vector<ComplexMatrix> initial_hamiltonians; // per branch k
    std::vector<double> sampling;                    // p(k)
    std::vector<ComplexMatrix> v_feedback_rev;       // per branch k
    std::vector<ComplexMatrix> meas_projectors_rev;
    ComplexMatrix u_drive_rev;
    ComplexMatrix h_final_rev;

    int dim() const { return h_final_rev.dim(); }
    int n_outcomes() const { return static_cast<int>(meas_projectors_rev.size()); }
    int n_branches() const { return static_cast<int>(initial_hamiltonians.size()); }

    void validate() const;
};

// Antiunitary map Theta = Y K with K complex conjugation in the computational
// basis. Acting twice on a single qubit gives Y * conj(Y) = -identity.
struct TimeReversalOp {
    ComplexMatrix unitary_part; // Y
    bool conjugation = true;

    static TimeReversalOp qubit();          // Y = i sigma_y
    static TimeReversalOp qubits(int n);    // tensor power for n qubits

    // Observables and Hamiltonians map as O -> Y conj(O) Y†.
    ComplexMatrix observable(const ComplexMatrix& o) const;
    // Evolution operators map as U -> (Y conj(U) Y†)†.
    ComplexMatrix evolution(const ComplexMatrix& u) const;
};

enum class OpKind { observable, evolution };

ComplexMatrix time_reverse(const ComplexMatrix& op, const TimeReversalOp& theta, OpKind kind);

// e^{-beta h} / Tr e^{-beta h}; beta >= 0.
ComplexMatrix gibbs_state(const ComplexMatrix& h, double beta);

// -1/beta * ln(Z_final / Z_init) with Z = Tr e^{-beta H}; beta > 0.
double free_energy_difference(const ComplexMatrix& h_init, const ComplexMatrix& h_final,
                              double beta);

// Outcome probabilities of the intermediate measurement on the driven
// thermal state: p(l) = Tr[M_l U rho0 U†].
std::vector<double> forward_outcome_probs(const FeedbackProtocol& p);

// Branch probabilities p(k) = sum_l p(k|l) p(l).
std::vector<double> branch_probs(const FeedbackProtocol& p);

// Free-energy difference of each branch relative to h0.
std::vector<double> branch_free_energies(const FeedbackProtocol& p);

// Mechanical reversal: conjugate Hamiltonians/projectors with theta, invert
// and reorder the unitaries, and sample branches with p(k).
BackwardProtocol build_backward(const FeedbackProtocol& fwd, const TimeReversalOp& theta);

// JSON round-trip; doubles are preserved bit-exactly.
std::string protocol_to_json(const FeedbackProtocol& p);
FeedbackProtocol protocol_from_json(const std::string& text);

} // namespace qdfr

#endif
