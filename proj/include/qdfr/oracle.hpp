// Exact enumeration of two-point-measurement statistics for a feedback
// protocol: every PDF is a finite list of weighted delta atoms over
// (W, dF, I) with integer history labels. All probabilities are traces;
// nothing here samples.
#ifndef QDFR_ORACLE_HPP
#define QDFR_ORACLE_HPP

#include <array>
#include <string>
#include <vector>

#include "qdfr/protocol.hpp"

namespace qdfr {

// Atoms lighter than this are dropped everywhere.
constexpr double kWeightFloor = 1e-15;

// One delta component. labels = (m, k, l, n): n indexes the initial-
// Hamiltonian spectrum, l the measurement outcome, k the controller branch,
// m the branch-k final-Hamiltonian spectrum. Backward atoms use the same
// positional meaning (their first measurement is the m leg), so a forward
// atom and its reversed partner carry identical label tuples.
struct Atom {
    double w = 0.0;      // work
    double df = 0.0;     // free-energy difference of the branch
    double i = 0.0;      // mutual-information density (nats)
    double weight = 0.0; // probability
    std::array<int, 4> labels{0, 0, 0, 0};
};

enum class PdfKind {
    forward,
    backward,
    forward_wcm,
    backward_wcm,
    nofeedback_fwd,
    nofeedback_bwd,
};

struct AtomPDF {
    std::vector<Atom> atoms;
    PdfKind kind = PdfKind::forward;

    double total_weight() const;
    // Sorts by labels, drops sub-floor weights, rejects duplicate labels.
    void normalize_order();
};

// Work PDF of one (k,l) history of the forward protocol; weights
// p(m|l) p(k|l) p(l|n) p(n). Atoms with equal W keep distinct labels.
AtomPDF forward_mixed_work_pdf(const FeedbackProtocol& p, int k, int l);

// Work PDF of one (l,k) history of the backward protocol; weights
// p~(n|l) p~(l|m) p~(m) p(k), work = Ẽ_n(final) - Ẽ_m(branch k, initial).
AtomPDF backward_mixed_work_pdf(const BackwardProtocol& b, int l, int k);

// Matching-branch (k = l) statistics of an ideal controller: forward weights
// p(m|k) p(k|n) p(n), backward weights p~(n|k) p~(k|m) p~(m).
std::pair<AtomPDF, AtomPDF> wcm_mixed_work_pdfs(const FeedbackProtocol& p,
                                                const BackwardProtocol& b, int k);

// Whole-process joint PDFs over (W, dF, I); forward sums to 1, backward
// sums to 1.
std::pair<AtomPDF, AtomPDF> joint_pdfs(const FeedbackProtocol& p, const BackwardProtocol& b);

// I(k,l) = ln p(k|l)/p(k) in nats. Throws ZeroBranchProbability when a
// branch with p(k)=0 is still reachable (p(k|l)>0 for some l).
std::vector<std::vector<double>> mutual_information_density(const FeedbackProtocol& p);

struct WeightedValue {
    double value = 0.0;
    double weight = 0.0;
};

struct MarginalsReport {
    std::vector<std::vector<double>> p_kl; // P(k,l) indexed [k][l]
    std::vector<WeightedValue> p_df;
    std::vector<WeightedValue> p_i;
    std::vector<WeightedValue> p_w;
    double mean_w = 0.0;
    double mean_df = 0.0;
    double mean_i = 0.0;
};

MarginalsReport marginals_and_averages(const AtomPDF& joint);

// Independent cross-checks of the average work, computed from propagated
// density matrices instead of atoms.
double mean_work_forward_states(const FeedbackProtocol& p);
double mean_work_backward_states(const BackwardProtocol& b);

// Plain two-point-measurement work PDFs for a driven protocol with no
// measurement or feedback; backward taken from the time-reversed partner.
// The final Hamiltonian is a free ingredient (a sudden quench has u = 1
// with h_final != h0), so it is an explicit argument.
std::pair<AtomPDF, AtomPDF> nofeedback_work_pdfs(const ComplexMatrix& h0,
                                                 const ComplexMatrix& h_final,
                                                 const ComplexMatrix& u, double beta);

struct AtomRatio {
    std::array<int, 4> labels{0, 0, 0, 0};
    double w = 0.0;
    double ratio = 0.0;     // weight_F / weight_B at the paired labels
    double predicted = 0.0; // e^{beta (W - dF) + I} from the forward atom
    double rel_dev = 0.0;
};

struct QdfrCheck {
    std::vector<AtomRatio> ratios;
    double max_rel_dev = 0.0;
};

// Pairs forward and backward atoms by label tuple and compares the weight
// ratio against the detailed-fluctuation prediction. Throws UnpairedAtom
// when a forward atom has no backward partner above the weight floor.
QdfrCheck qdfr_atom_check(const AtomPDF& fwd, const AtomPDF& bwd, double beta);

// Exports. CSV columns: m,k,l,n,W,dF,I,weight.
std::string atoms_to_csv(const AtomPDF& pdf);
std::string atoms_to_json(const AtomPDF& pdf);

} // namespace qdfr

#endif
