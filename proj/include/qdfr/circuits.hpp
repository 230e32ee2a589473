// Density-matrix simulation of the interferometric circuits that measure
// the characteristic work functions: a phase-kicked ancilla in a Ramsey
// configuration, memory qubits recording outcomes, and controlled branch
// unitaries. Outcome statistics are computed exactly; nothing is sampled.
#ifndef QDFR_CIRCUITS_HPP
#define QDFR_CIRCUITS_HPP

#include <vector>

#include "qdfr/protocol.hpp"
#include "qdfr/spectral.hpp"

namespace qdfr {

// Joint register state with named tensor factors, slow-to-fast order.
struct Register {
    std::vector<int> dims;
    ComplexMatrix state;

    int factor_count() const { return static_cast<int>(dims.size()); }
    void apply(const ComplexMatrix& gate); // state <- G state G†
};

// Per-outcome results of one circuit run at a fixed conjugate variable u.
// ancilla_sx + i*ancilla_sy equals twice the ancilla coherence <0|rho|1> of
// the normalized post-selected ancilla state, so
// prob * (ancilla_sx + i*ancilla_sy) is the characteristic-function sample
// carried by that outcome.
struct CircuitOutcome {
    struct Entry {
        int k = -1;
        int l = -1;
        double prob = 0.0;
        double ancilla_sx = 0.0;
        double ancilla_sy = 0.0;

        cplx weighted_coherence() const { return prob * cplx(ancilla_sx, ancilla_sy); }
    };

    double u = 0.0;
    std::vector<Entry> entries; // sorted by (k, l)

    const Entry& find(int k, int l) const;
    double total_prob() const;
};

// Measurement-controlled NOT on S⊗M for a complete orthogonal projector
// pair: P0 ⊗ 1 + P1 ⊗ sigma_x.
ComplexMatrix mcnot(const std::vector<ComplexMatrix>& meas_projectors);

// Two-memory circuit (ancilla, system, outcome memory, controller memory):
// measures chi_F^{(k,l)}(u) for every history in one run. Entries keyed
// (k, l).
CircuitOutcome run_forward_mismatch(const FeedbackProtocol& p, double u);

// Single-memory circuit of the ideal controller: measures chi_F^{wcm(k)}(u).
// Entries keyed (k, -1).
CircuitOutcome run_forward_wcm(const FeedbackProtocol& p, double u);

// Backward circuit for a fixed sampled branch k: measures the per-outcome
// amplitude A(k,l) with p(k) * A(k,l) = chi_B^{(l,k)}(u) and
// A(k,k) = chi_B^{wcm(k)}(u). Entries keyed (k, l); weighted_coherence()
// returns A(k,l).
CircuitOutcome run_backward(const BackwardProtocol& b, int k, double u);

// Feedback-characterization circuit: joint probabilities p(k,l) = p(k|l)p(l)
// from a single composite measurement. Indexed [k][l].
std::vector<std::vector<double>> run_joint_prob(const FeedbackProtocol& p);

// Combine joint probabilities (for the branch marginal p(k)) with backward
// circuit runs over a grid into chi_B^{(l,k)} sample sets, stored at index
// k*L + l. Throws GridMismatch when the outcome list does not cover the
// grid.
std::vector<SampledCharFn> assemble_backward_chi(const std::vector<std::vector<double>>& joint,
                                                 const std::vector<CircuitOutcome>& outcomes,
                                                 const UGrid& grid);

// chi samples as CSV, columns u,re,im,k,l,outcome_prob.
std::string chi_to_csv(const SampledCharFn& chi, const std::vector<double>& outcome_probs = {});

} // namespace qdfr

#endif
