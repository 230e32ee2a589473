#include "qdfr/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace qdfr {

namespace {

// Kronecker chain over explicit factors, slow-to-fast.
ComplexMatrix kron_chain(const std::vector<const ComplexMatrix*>& factors) {
    ComplexMatrix out = *factors.front();
    for (size_t i = 1; i < factors.size(); ++i) out = kron(out, *factors[i]);
    return out;
}

ComplexMatrix embed_single(const std::vector<int>& dims, int where, const ComplexMatrix& gate) {
    std::vector<ComplexMatrix> ids;
    ids.reserve(dims.size());
    for (int d : dims) ids.push_back(identity(d));
    std::vector<const ComplexMatrix*> fs;
    for (size_t i = 0; i < dims.size(); ++i)
        fs.push_back(static_cast<int>(i) == where ? &gate : &ids[i]);
    return kron_chain(fs);
}

// Gate acting on two adjacent factors (first, first+1).
ComplexMatrix embed_pair(const std::vector<int>& dims, int first, const ComplexMatrix& gate) {
    std::vector<ComplexMatrix> ids;
    for (int d : dims) ids.push_back(identity(d));
    std::vector<const ComplexMatrix*> fs;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (static_cast<int>(i) == first) {
            fs.push_back(&gate);
        } else if (static_cast<int>(i) == first + 1) {
            continue;
        } else {
            fs.push_back(&ids[i]);
        }
    }
    return kron_chain(fs);
}

// Unitary that applies gate_for(control basis values) to factor tgt, summed
// over computational projectors of the control factors. Controls must be
// diagonal in the computational basis for this construction to be unitary.
ComplexMatrix basis_controlled(const std::vector<int>& dims, const std::vector<int>& ctrls,
                               int tgt,
                               const std::function<ComplexMatrix(const std::vector<int>&)>& gate_for) {
    int total = 1;
    for (int c : ctrls) total *= dims[c];

    int full_dim = 1;
    for (int d : dims) full_dim *= d;
    ComplexMatrix out(full_dim);

    std::vector<ComplexMatrix> ids;
    for (int d : dims) ids.push_back(identity(d));

    for (int combo = 0; combo < total; ++combo) {
        std::vector<int> vals(ctrls.size());
        int rest = combo;
        for (int i = static_cast<int>(ctrls.size()) - 1; i >= 0; --i) {
            vals[i] = rest % dims[ctrls[i]];
            rest /= dims[ctrls[i]];
        }
        ComplexMatrix g = gate_for(vals);
        std::vector<ComplexMatrix> projs;
        projs.reserve(ctrls.size());
        for (size_t i = 0; i < ctrls.size(); ++i)
            projs.push_back(ketbra(dims[ctrls[i]], vals[i], vals[i]));
        std::vector<const ComplexMatrix*> fs;
        for (size_t f = 0; f < dims.size(); ++f) {
            const auto it = std::find(ctrls.begin(), ctrls.end(), static_cast<int>(f));
            if (it != ctrls.end()) {
                fs.push_back(&projs[static_cast<size_t>(it - ctrls.begin())]);
            } else if (static_cast<int>(f) == tgt) {
                fs.push_back(&g);
            } else {
                fs.push_back(&ids[f]);
            }
        }
        out += kron_chain(fs);
    }
    return out;
}

// Real rotation taking |0> to sum_k sqrt(p(k|l)) |k>, one column per branch.
ComplexMatrix mismatch_prep(const FeedbackProtocol& p, int l) {
    const double p0 = p.mismatch[0][l];
    const double p1 = p.mismatch[1][l];
    const double a = std::sqrt(std::max(0.0, p0));
    const double b = std::sqrt(std::max(0.0, p1));
    return ComplexMatrix(2, {cplx(a, 0), cplx(-b, 0), cplx(b, 0), cplx(a, 0)});
}

ComplexMatrix plus_state() {
    return ComplexMatrix(2, {cplx(0.5, 0), cplx(0.5, 0), cplx(0.5, 0), cplx(0.5, 0)});
}

ComplexMatrix ground_ket(int dim) { return ketbra(dim, 0, 0); }

void require_qubit_pair(const FeedbackProtocol& p) {
    if (p.dim() != 2 || p.n_outcomes() != 2 || p.n_branches() != 2)
        throw ProtocolInvalid("circuit register uses qubit factors: need a qubit system "
                              "with two outcomes and two branches");
}

// Post-selects factor values (factor index -> basis value), returning the
// outcome probability and the normalized ancilla reduced state (factor 0).
struct Selected {
    double prob = 0.0;
    double sx = 0.0;
    double sy = 0.0;
};

Selected select_and_trace(const Register& reg, const std::vector<std::pair<int, int>>& fixed) {
    std::vector<ComplexMatrix> ops;
    for (int d : reg.dims) ops.push_back(identity(d));
    for (auto [f, v] : fixed) ops[f] = ketbra(reg.dims[f], v, v);
    std::vector<const ComplexMatrix*> fs;
    for (const auto& o : ops) fs.push_back(&o);
    const ComplexMatrix proj = kron_chain(fs);

    const ComplexMatrix picked = proj * reg.state * proj;
    Selected out;
    out.prob = picked.trace().real();
    if (out.prob < 1e-15) {
        out.prob = std::max(out.prob, 0.0);
        return out;
    }
    const ComplexMatrix anc = partial_trace(picked, reg.dims, {0});
    out.sx = 2.0 * anc(0, 1).real() / out.prob;
    out.sy = 2.0 * anc(0, 1).imag() / out.prob;
    return out;
}

void sort_entries(CircuitOutcome& oc) {
    std::sort(oc.entries.begin(), oc.entries.end(),
              [](const CircuitOutcome::Entry& a, const CircuitOutcome::Entry& b) {
                  return std::tie(a.k, a.l) < std::tie(b.k, b.l);
              });
}

} // namespace

void Register::apply(const ComplexMatrix& gate) { state = gate * state * gate.dagger(); }

const CircuitOutcome::Entry& CircuitOutcome::find(int k, int l) const {
    for (const Entry& e : entries)
        if (e.k == k && e.l == l) return e;
    throw IndexOutOfRange("no circuit outcome entry with the requested labels");
}

double CircuitOutcome::total_prob() const {
    double s = 0.0;
    for (const Entry& e : entries) s += e.prob;
    return s;
}

ComplexMatrix mcnot(const std::vector<ComplexMatrix>& meas_projectors) {
    if (meas_projectors.size() != 2)
        throw IncompleteProjectors("measurement-controlled NOT needs a projector pair");
    const int d = meas_projectors[0].dim();
    ComplexMatrix sum = meas_projectors[0] + meas_projectors[1];
    if (max_abs_diff(sum, identity(d)) > kTolValidate)
        throw IncompleteProjectors("projector pair does not resolve the identity");
    return kron(meas_projectors[0], identity(2)) + kron(meas_projectors[1], pauli_x());
}

CircuitOutcome run_forward_mismatch(const FeedbackProtocol& p, double u) {
    p.validate();
    require_qubit_pair(p);

    // Factors: ancilla, system, outcome memory, controller memory.
    const std::vector<int> dims{2, 2, 2, 2};
    Register reg{dims, {}};
    {
        const ComplexMatrix rho0 = gibbs_state(p.h0, p.beta);
        ComplexMatrix s = kron(plus_state(), rho0);
        s = kron(s, ground_ket(2));
        reg.state = kron(s, ground_ket(2));
    }

    const ComplexMatrix evolve0 = phase_exp(p.h0, -u);
    reg.apply(basis_controlled(dims, {0}, 1, [&](const std::vector<int>& v) {
        return v[0] == 0 ? evolve0 : identity(2);
    }));
    reg.apply(embed_single(dims, 1, p.u_drive));
    reg.apply(embed_pair(dims, 1, mcnot(p.meas_projectors)));
    reg.apply(basis_controlled(dims, {2}, 3, [&](const std::vector<int>& v) {
        return mismatch_prep(p, v[0]);
    }));
    reg.apply(basis_controlled(dims, {3}, 1, [&](const std::vector<int>& v) {
        return p.branches[v[0]].v_feedback;
    }));
    reg.apply(basis_controlled(dims, {0, 3}, 1, [&](const std::vector<int>& v) {
        return v[0] == 1 ? phase_exp(p.branches[v[1]].h_final, -u) : identity(2);
    }));

    CircuitOutcome out;
    out.u = u;
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            const Selected s = select_and_trace(reg, {{2, l}, {3, k}});
            out.entries.push_back({k, l, s.prob, s.sx, s.sy});
        }
    sort_entries(out);
    if (std::abs(out.total_prob() - 1.0) > kTolValidate)
        throw Error("circuit outcome probabilities do not sum to one");
    return out;
}

CircuitOutcome run_forward_wcm(const FeedbackProtocol& p, double u) {
    p.validate();
    require_qubit_pair(p);

    // Factors: ancilla, system, memory (outcome doubles as controller).
    const std::vector<int> dims{2, 2, 2};
    Register reg{dims, {}};
    {
        const ComplexMatrix rho0 = gibbs_state(p.h0, p.beta);
        reg.state = kron(kron(plus_state(), rho0), ground_ket(2));
    }

    const ComplexMatrix evolve0 = phase_exp(p.h0, -u);
    reg.apply(basis_controlled(dims, {0}, 1, [&](const std::vector<int>& v) {
        return v[0] == 0 ? evolve0 : identity(2);
    }));
    reg.apply(embed_single(dims, 1, p.u_drive));
    reg.apply(embed_pair(dims, 1, mcnot(p.meas_projectors)));
    reg.apply(basis_controlled(dims, {2}, 1, [&](const std::vector<int>& v) {
        return p.branches[v[0]].v_feedback;
    }));
    reg.apply(basis_controlled(dims, {0, 2}, 1, [&](const std::vector<int>& v) {
        return v[0] == 1 ? phase_exp(p.branches[v[1]].h_final, -u) : identity(2);
    }));

    CircuitOutcome out;
    out.u = u;
    for (int k = 0; k < 2; ++k) {
        const Selected s = select_and_trace(reg, {{2, k}});
        out.entries.push_back({k, -1, s.prob, s.sx, s.sy});
    }
    sort_entries(out);
    if (std::abs(out.total_prob() - 1.0) > kTolValidate)
        throw Error("circuit outcome probabilities do not sum to one");
    return out;
}

CircuitOutcome run_backward(const BackwardProtocol& b, int k, double u) {
    b.validate();
    if (k < 0 || k >= static_cast<int>(b.initial_hamiltonians.size()))
        throw IndexOutOfRange("backward circuit branch index out of range");
    if (b.initial_hamiltonians[k].dim() != 2 || b.meas_projectors_rev.size() != 2)
        throw ProtocolInvalid("circuit register uses qubit factors: need a qubit system "
                              "with two outcomes");

    // Factors: ancilla, system, outcome memory.
    const std::vector<int> dims{2, 2, 2};
    Register reg{dims, {}};
    {
        const ComplexMatrix rho0 = gibbs_state(b.initial_hamiltonians[k], b.beta);
        reg.state = kron(kron(plus_state(), rho0), ground_ket(2));
    }

    const ComplexMatrix evolve0 = phase_exp(b.initial_hamiltonians[k], -u);
    reg.apply(basis_controlled(dims, {0}, 1, [&](const std::vector<int>& v) {
        return v[0] == 0 ? evolve0 : identity(2);
    }));
    reg.apply(embed_single(dims, 1, b.v_feedback_rev[k]));
    reg.apply(embed_pair(dims, 1, mcnot(b.meas_projectors_rev)));
    reg.apply(embed_single(dims, 1, b.u_drive_rev));
    const ComplexMatrix evolve_fin = phase_exp(b.h_final_rev, -u);
    reg.apply(basis_controlled(dims, {0}, 1, [&](const std::vector<int>& v) {
        return v[0] == 1 ? evolve_fin : identity(2);
    }));

    CircuitOutcome out;
    out.u = u;
    for (int l = 0; l < 2; ++l) {
        const Selected s = select_and_trace(reg, {{2, l}});
        out.entries.push_back({k, l, s.prob, s.sx, s.sy});
    }
    sort_entries(out);
    if (std::abs(out.total_prob() - 1.0) > kTolValidate)
        throw Error("circuit outcome probabilities do not sum to one");
    return out;
}

std::vector<std::vector<double>> run_joint_prob(const FeedbackProtocol& p) {
    p.validate();
    require_qubit_pair(p);

    // Factors: system, outcome memory, controller memory. No ancilla: this
    // circuit only reads out the feedback channel.
    const std::vector<int> dims{2, 2, 2};
    Register reg{dims, {}};
    reg.state = kron(kron(gibbs_state(p.h0, p.beta), ground_ket(2)), ground_ket(2));

    reg.apply(embed_single(dims, 0, p.u_drive));
    reg.apply(embed_pair(dims, 0, mcnot(p.meas_projectors)));
    reg.apply(basis_controlled(dims, {1}, 2, [&](const std::vector<int>& v) {
        return mismatch_prep(p, v[0]);
    }));

    std::vector<std::vector<double>> joint(2, std::vector<double>(2, 0.0));
    double total = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            std::vector<ComplexMatrix> ops{identity(2), ketbra(2, l, l), ketbra(2, k, k)};
            std::vector<const ComplexMatrix*> fs{&ops[0], &ops[1], &ops[2]};
            const ComplexMatrix proj = kron_chain(fs);
            joint[k][l] = (proj * reg.state).trace().real();
            total += joint[k][l];
        }
    if (std::abs(total - 1.0) > kTolValidate)
        throw Error("joint outcome probabilities do not sum to one");
    return joint;
}

std::vector<SampledCharFn> assemble_backward_chi(const std::vector<std::vector<double>>& joint,
                                                 const std::vector<CircuitOutcome>& outcomes,
                                                 const UGrid& grid) {
    const int n_k = static_cast<int>(joint.size());
    if (n_k == 0) throw GridMismatch("joint probability table is empty");
    const int n_l = static_cast<int>(joint[0].size());

    std::vector<double> p_k(n_k, 0.0);
    for (int k = 0; k < n_k; ++k)
        for (int l = 0; l < n_l; ++l) p_k[k] += joint[k][l];

    std::vector<SampledCharFn> out(static_cast<size_t>(n_k * n_l));
    std::vector<std::vector<bool>> filled(static_cast<size_t>(n_k * n_l),
                                          std::vector<bool>(grid.n, false));
    for (int k = 0; k < n_k; ++k)
        for (int l = 0; l < n_l; ++l) {
            SampledCharFn& c = out[static_cast<size_t>(k * n_l + l)];
            c.grid = grid;
            c.k = k;
            c.l = l;
            c.kind = CharFnKind::backward;
            c.samples.assign(grid.n, cplx(0, 0));
        }

    for (const CircuitOutcome& oc : outcomes) {
        const double jf = (oc.u + grid.u_max) / grid.du;
        const int j = static_cast<int>(std::lround(jf));
        if (j < 0 || j >= grid.n || std::abs(oc.u - (-grid.u_max + j * grid.du)) > 1e-9)
            throw GridMismatch("circuit outcome conjugate variable is off the grid");
        for (const CircuitOutcome::Entry& e : oc.entries) {
            if (e.k < 0 || e.k >= n_k || e.l < 0 || e.l >= n_l)
                throw GridMismatch("circuit outcome labels exceed the joint table");
            const size_t idx = static_cast<size_t>(e.k * n_l + e.l);
            out[idx].samples[j] = p_k[e.k] * e.weighted_coherence();
            filled[idx][j] = true;
        }
    }
    for (const auto& f : filled)
        for (bool got : f)
            if (!got) throw GridMismatch("circuit outcomes do not cover the grid");
    return out;
}

std::string chi_to_csv(const SampledCharFn& chi, const std::vector<double>& outcome_probs) {
    std::ostringstream os;
    os << "u,re,im,k,l,outcome_prob\n";
    const std::vector<double> u = chi.grid.points();
    const bool have_probs = outcome_probs.size() == chi.samples.size();
    const double fallback = chi.samples.empty() ? 0.0 : chi.at_zero().real();
    char buf[224];
    for (size_t j = 0; j < chi.samples.size(); ++j) {
        const double pr = have_probs ? outcome_probs[j] : fallback;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d,%.17g\n", u[j],
                      chi.samples[j].real(), chi.samples[j].imag(), chi.k, chi.l, pr);
        os << buf;
    }
    return os.str();
}

} // namespace qdfr
