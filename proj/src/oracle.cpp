#include "qdfr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include <json.hpp>

namespace qdfr {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Rank-1 projectors onto the eigenvectors of an eigendecomposition.
std::vector<ComplexMatrix> eigen_projectors(const HermitianEigen& e) {
    const int n = e.eigenvectors.dim();
    std::vector<ComplexMatrix> ps;
    for (int k = 0; k < n; ++k) {
        ComplexMatrix p(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                p(i, j) = e.eigenvectors(i, k) * std::conj(e.eigenvectors(j, k));
        ps.push_back(p);
    }
    return ps;
}

std::vector<double> gibbs_weights(const std::vector<double>& evs, double beta) {
    const double emin = evs.front();
    double z = 0.0;
    std::vector<double> w(evs.size());
    for (size_t i = 0; i < evs.size(); ++i) {
        w[i] = std::exp(-beta * (evs[i] - emin));
        z += w[i];
    }
    for (double& x : w) x /= z;
    return w;
}

double re_trace(const ComplexMatrix& m) { return m.trace().real(); }

void check_indices(const FeedbackProtocol& p, int k, int l) {
    if (k < 0 || k >= p.n_branches())
        throw IndexOutOfRange("branch index " + std::to_string(k));
    if (l < 0 || l >= p.n_outcomes())
        throw IndexOutOfRange("outcome index " + std::to_string(l));
}

// Conditionals of the forward chain. The post-measurement sector state is
// M_l / Tr[M_l], which reduces to the projector itself for rank-1 outcomes.
struct ForwardTables {
    std::vector<double> e0;                    // initial eigenvalues
    std::vector<double> p_n;                   // thermal populations
    std::vector<std::vector<double>> p_l_n;    // [l][n]
    std::vector<std::vector<double>> e_fin;    // [k][m]
    std::vector<std::vector<std::vector<double>>> p_m_kl; // [k][l][m]
    std::vector<double> p_l;                   // outcome probabilities
    std::vector<double> deltaF;                // per branch
};

ForwardTables forward_tables(const FeedbackProtocol& p) {
    ForwardTables t;
    const HermitianEigen e0 = herm_eigen(p.h0);
    t.e0 = e0.eigenvalues;
    t.p_n = gibbs_weights(t.e0, p.beta);
    const std::vector<ComplexMatrix> p0 = eigen_projectors(e0);

    t.p_l_n.assign(p.n_outcomes(), std::vector<double>(p.dim(), 0.0));
    for (int l = 0; l < p.n_outcomes(); ++l)
        for (int n = 0; n < p.dim(); ++n)
            t.p_l_n[l][n] = re_trace(p.meas_projectors[l] * p.u_drive * p0[n] *
                                     p.u_drive.dagger());

    t.p_l.assign(p.n_outcomes(), 0.0);
    for (int l = 0; l < p.n_outcomes(); ++l)
        for (int n = 0; n < p.dim(); ++n) t.p_l[l] += t.p_l_n[l][n] * t.p_n[n];

    t.e_fin.resize(p.n_branches());
    t.p_m_kl.assign(p.n_branches(),
                    std::vector<std::vector<double>>(p.n_outcomes(),
                                                     std::vector<double>(p.dim(), 0.0)));
    for (int k = 0; k < p.n_branches(); ++k) {
        const HermitianEigen ef = herm_eigen(p.branches[k].h_final);
        t.e_fin[k] = ef.eigenvalues;
        const std::vector<ComplexMatrix> pf = eigen_projectors(ef);
        for (int l = 0; l < p.n_outcomes(); ++l) {
            const double sector = re_trace(p.meas_projectors[l]);
            for (int m = 0; m < p.dim(); ++m)
                t.p_m_kl[k][l][m] = re_trace(pf[m] * p.branches[k].v_feedback *
                                             p.meas_projectors[l] *
                                             p.branches[k].v_feedback.dagger()) /
                                    sector;
        }
    }
    t.deltaF = branch_free_energies(p);
    return t;
}

// Conditionals of the reversed chain, same sector-state convention.
struct BackwardTables {
    std::vector<std::vector<double>> e_init;   // [k][m], spectra of the branch starts
    std::vector<std::vector<double>> p_m;      // [k][m] thermal populations
    std::vector<std::vector<std::vector<double>>> p_l_m; // [k][l][m]
    std::vector<std::vector<double>> p_n_l;    // [l][n]
    std::vector<double> e_fin;                 // final spectrum
    std::vector<double> deltaF_rev;            // per branch
};

BackwardTables backward_tables(const BackwardProtocol& b) {
    BackwardTables t;
    const HermitianEigen ef = herm_eigen(b.h_final_rev);
    t.e_fin = ef.eigenvalues;
    const std::vector<ComplexMatrix> pf = eigen_projectors(ef);

    t.p_n_l.assign(b.n_outcomes(), std::vector<double>(b.dim(), 0.0));
    for (int l = 0; l < b.n_outcomes(); ++l) {
        const double sector = re_trace(b.meas_projectors_rev[l]);
        for (int n = 0; n < b.dim(); ++n)
            t.p_n_l[l][n] = re_trace(pf[n] * b.u_drive_rev * b.meas_projectors_rev[l] *
                                     b.u_drive_rev.dagger()) /
                            sector;
    }

    t.e_init.resize(b.n_branches());
    t.p_m.resize(b.n_branches());
    t.p_l_m.assign(b.n_branches(),
                   std::vector<std::vector<double>>(b.n_outcomes(),
                                                    std::vector<double>(b.dim(), 0.0)));
    t.deltaF_rev.resize(b.n_branches());
    for (int k = 0; k < b.n_branches(); ++k) {
        const HermitianEigen ei = herm_eigen(b.initial_hamiltonians[k]);
        t.e_init[k] = ei.eigenvalues;
        t.p_m[k] = gibbs_weights(ei.eigenvalues, b.beta);
        const std::vector<ComplexMatrix> pi = eigen_projectors(ei);
        for (int l = 0; l < b.n_outcomes(); ++l)
            for (int m = 0; m < b.dim(); ++m)
                t.p_l_m[k][l][m] = re_trace(b.meas_projectors_rev[l] * b.v_feedback_rev[k] *
                                            pi[m] * b.v_feedback_rev[k].dagger());
        t.deltaF_rev[k] =
            free_energy_difference(b.initial_hamiltonians[k], b.h_final_rev, b.beta);
    }
    return t;
}

} // namespace

double AtomPDF::total_weight() const {
    double s = 0.0;
    for (const Atom& a : atoms) s += a.weight;
    return s;
}

void AtomPDF::normalize_order() {
    atoms.erase(std::remove_if(atoms.begin(), atoms.end(),
                               [](const Atom& a) { return a.weight < kWeightFloor; }),
                atoms.end());
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.labels < b.labels; });
    for (size_t i = 1; i < atoms.size(); ++i)
        if (atoms[i].labels == atoms[i - 1].labels)
            throw Error("duplicate atom labels in one PDF");
}

AtomPDF forward_mixed_work_pdf(const FeedbackProtocol& p, int k, int l) {
    p.validate();
    check_indices(p, k, l);
    const ForwardTables t = forward_tables(p);
    const std::vector<std::vector<double>> info = mutual_information_density(p);

    AtomPDF pdf;
    pdf.kind = PdfKind::forward;
    for (int m = 0; m < p.dim(); ++m)
        for (int n = 0; n < p.dim(); ++n) {
            Atom a;
            a.w = t.e_fin[k][m] - t.e0[n];
            a.df = t.deltaF[k];
            a.i = info[k][l];
            a.weight = t.p_m_kl[k][l][m] * p.mismatch[k][l] * t.p_l_n[l][n] * t.p_n[n];
            a.labels = {m, k, l, n};
            pdf.atoms.push_back(a);
        }
    pdf.normalize_order();
    return pdf;
}

AtomPDF backward_mixed_work_pdf(const BackwardProtocol& b, int l, int k) {
    b.validate();
    if (k < 0 || k >= b.n_branches()) throw IndexOutOfRange("branch index " + std::to_string(k));
    if (l < 0 || l >= b.n_outcomes()) throw IndexOutOfRange("outcome index " + std::to_string(l));
    const BackwardTables t = backward_tables(b);

    AtomPDF pdf;
    pdf.kind = PdfKind::backward;
    for (int n = 0; n < b.dim(); ++n)
        for (int m = 0; m < b.dim(); ++m) {
            Atom a;
            a.w = t.e_fin[n] - t.e_init[k][m];
            a.df = t.deltaF_rev[k];
            a.i = 0.0; // attached by joint_pdfs, where the forward channel is known
            a.weight = t.p_n_l[l][n] * t.p_l_m[k][l][m] * t.p_m[k][m] * b.sampling[k];
            a.labels = {m, k, l, n};
            pdf.atoms.push_back(a);
        }
    pdf.normalize_order();
    return pdf;
}

std::pair<AtomPDF, AtomPDF> wcm_mixed_work_pdfs(const FeedbackProtocol& p,
                                                const BackwardProtocol& b, int k) {
    p.validate();
    b.validate();
    if (k < 0 || k >= p.n_branches()) throw IndexOutOfRange("branch index " + std::to_string(k));
    if (p.n_outcomes() <= k) throw IndexOutOfRange("no outcome matches branch " + std::to_string(k));
    const ForwardTables tf = forward_tables(p);
    const BackwardTables tb = backward_tables(b);

    AtomPDF fwd;
    fwd.kind = PdfKind::forward_wcm;
    for (int m = 0; m < p.dim(); ++m)
        for (int n = 0; n < p.dim(); ++n) {
            Atom a;
            a.w = tf.e_fin[k][m] - tf.e0[n];
            a.df = tf.deltaF[k];
            a.weight = tf.p_m_kl[k][k][m] * tf.p_l_n[k][n] * tf.p_n[n];
            a.labels = {m, k, k, n};
            fwd.atoms.push_back(a);
        }
    fwd.normalize_order();

    AtomPDF bwd;
    bwd.kind = PdfKind::backward_wcm;
    for (int n = 0; n < b.dim(); ++n)
        for (int m = 0; m < b.dim(); ++m) {
            Atom a;
            a.w = tb.e_fin[n] - tb.e_init[k][m];
            a.df = tb.deltaF_rev[k];
            a.weight = tb.p_n_l[k][n] * tb.p_l_m[k][k][m] * tb.p_m[k][m];
            a.labels = {m, k, k, n};
            bwd.atoms.push_back(a);
        }
    bwd.normalize_order();
    return {fwd, bwd};
}

std::pair<AtomPDF, AtomPDF> joint_pdfs(const FeedbackProtocol& p, const BackwardProtocol& b) {
    const std::vector<std::vector<double>> info = mutual_information_density(p);
    AtomPDF fwd, bwd;
    fwd.kind = PdfKind::forward;
    bwd.kind = PdfKind::backward;
    for (int k = 0; k < p.n_branches(); ++k)
        for (int l = 0; l < p.n_outcomes(); ++l) {
            AtomPDF f = forward_mixed_work_pdf(p, k, l);
            for (Atom& a : f.atoms) fwd.atoms.push_back(a);
            AtomPDF r = backward_mixed_work_pdf(b, l, k);
            for (Atom& a : r.atoms) {
                a.i = info[k][l];
                bwd.atoms.push_back(a);
            }
        }
    fwd.normalize_order();
    bwd.normalize_order();
    return {fwd, bwd};
}

std::vector<std::vector<double>> mutual_information_density(const FeedbackProtocol& p) {
    p.validate();
    const std::vector<double> pk = branch_probs(p);
    std::vector<std::vector<double>> info(p.n_branches(),
                                          std::vector<double>(p.n_outcomes(), 0.0));
    for (int k = 0; k < p.n_branches(); ++k)
        for (int l = 0; l < p.n_outcomes(); ++l) {
            const double pkl = p.mismatch[k][l];
            if (pk[k] <= 0.0) {
                if (pkl > 0.0)
                    throw ZeroBranchProbability("branch " + std::to_string(k) +
                                                " has zero probability but p(k|l) > 0");
                info[k][l] = 0.0;
            } else if (pkl == 0.0) {
                info[k][l] = -std::numeric_limits<double>::infinity();
            } else {
                info[k][l] = std::log(pkl / pk[k]);
            }
        }
    return info;
}

namespace {

std::vector<WeightedValue> group_by_value(std::vector<std::pair<double, double>> vw) {
    std::sort(vw.begin(), vw.end());
    std::vector<WeightedValue> out;
    for (const auto& [v, w] : vw) {
        if (!out.empty() && std::abs(v - out.back().value) <= 1e-12 * (1.0 + std::abs(v)))
            out.back().weight += w;
        else
            out.push_back({v, w});
    }
    return out;
}

} // namespace

MarginalsReport marginals_and_averages(const AtomPDF& joint) {
    MarginalsReport r;
    int kmax = 0, lmax = 0;
    for (const Atom& a : joint.atoms) {
        kmax = std::max(kmax, a.labels[1]);
        lmax = std::max(lmax, a.labels[2]);
    }
    r.p_kl.assign(kmax + 1, std::vector<double>(lmax + 1, 0.0));
    std::vector<std::pair<double, double>> dfw, iw, ww;
    for (const Atom& a : joint.atoms) {
        r.p_kl[a.labels[1]][a.labels[2]] += a.weight;
        dfw.push_back({a.df, a.weight});
        iw.push_back({a.i, a.weight});
        ww.push_back({a.w, a.weight});
        r.mean_w += a.w * a.weight;
        r.mean_df += a.df * a.weight;
        r.mean_i += a.i * a.weight;
    }
    r.p_df = group_by_value(std::move(dfw));
    r.p_i = group_by_value(std::move(iw));
    r.p_w = group_by_value(std::move(ww));
    return r;
}

double mean_work_forward_states(const FeedbackProtocol& p) {
    p.validate();
    const ComplexMatrix rho0 = gibbs_state(p.h0, p.beta);
    const ComplexMatrix sigma = p.u_drive * rho0 * p.u_drive.dagger();
    const double u_init = re_trace(p.h0 * rho0);
    double mean = 0.0;
    for (int k = 0; k < p.n_branches(); ++k)
        for (int l = 0; l < p.n_outcomes(); ++l) {
            const ComplexMatrix collapsed =
                p.meas_projectors[l] * sigma * p.meas_projectors[l];
            const ComplexMatrix fin = p.branches[k].v_feedback * collapsed *
                                      p.branches[k].v_feedback.dagger();
            // p(k,l) * U(rho_final^{(k,l)}) without dividing and re-multiplying
            // by p(l).
            mean += p.mismatch[k][l] * re_trace(p.branches[k].h_final * fin);
        }
    return mean - u_init;
}

double mean_work_backward_states(const BackwardProtocol& b) {
    b.validate();
    double mean = 0.0;
    for (int k = 0; k < b.n_branches(); ++k) {
        const ComplexMatrix rho0 = gibbs_state(b.initial_hamiltonians[k], b.beta);
        const ComplexMatrix drv =
            b.v_feedback_rev[k] * rho0 * b.v_feedback_rev[k].dagger();
        ComplexMatrix dephased = zeros(b.dim());
        for (const auto& m : b.meas_projectors_rev) dephased += m * drv * m;
        const ComplexMatrix fin = b.u_drive_rev * dephased * b.u_drive_rev.dagger();
        mean += b.sampling[k] *
                (re_trace(b.h_final_rev * fin) - re_trace(b.initial_hamiltonians[k] * rho0));
    }
    return mean;
}

std::pair<AtomPDF, AtomPDF> nofeedback_work_pdfs(const ComplexMatrix& h0,
                                                 const ComplexMatrix& h_final,
                                                 const ComplexMatrix& u, double beta) {
    const HermitianEigen e0 = herm_eigen(h0);
    const HermitianEigen ef = herm_eigen(h_final);
    for (const HermitianEigen* e : {&e0, &ef})
        for (const auto& cluster : e->degenerate_clusters())
            if (cluster.size() > 1)
                throw DegenerateSpectrum("two-point-measurement spectrum is degenerate");
    if (!u.is_unitary(kTolValidate)) throw ProtocolInvalid("drive is not unitary");

    const std::vector<ComplexMatrix> p0 = eigen_projectors(e0);
    const std::vector<ComplexMatrix> pf = eigen_projectors(ef);
    const std::vector<double> gn = gibbs_weights(e0.eigenvalues, beta);
    const std::vector<double> gm = gibbs_weights(ef.eigenvalues, beta);
    const int d = h0.dim();

    AtomPDF fwd, bwd;
    fwd.kind = PdfKind::nofeedback_fwd;
    bwd.kind = PdfKind::nofeedback_bwd;
    const double df = free_energy_difference(h0, h_final, beta);
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
            const double pmn = re_trace(pf[m] * u * p0[n] * u.dagger());
            Atom f;
            f.w = ef.eigenvalues[m] - e0.eigenvalues[n];
            f.df = df;
            f.weight = pmn * gn[n];
            f.labels = {m, 0, 0, n};
            fwd.atoms.push_back(f);
            // The reversed drive satisfies p~(n|m) = p(m|n), so the reversed
            // PDF can be enumerated without building the conjugated operators.
            Atom r;
            r.w = e0.eigenvalues[n] - ef.eigenvalues[m];
            r.df = -df;
            r.weight = pmn * gm[m];
            r.labels = {m, 0, 0, n};
            bwd.atoms.push_back(r);
        }
    fwd.normalize_order();
    bwd.normalize_order();
    return {fwd, bwd};
}

QdfrCheck qdfr_atom_check(const AtomPDF& fwd, const AtomPDF& bwd, double beta) {
    std::map<std::array<int, 4>, const Atom*> rev;
    for (const Atom& a : bwd.atoms) rev[a.labels] = &a;

    QdfrCheck out;
    for (const Atom& f : fwd.atoms) {
        if (f.weight < kWeightFloor) continue;
        const auto it = rev.find(f.labels);
        if (it == rev.end() || it->second->weight < kWeightFloor)
            throw UnpairedAtom("forward atom (" + std::to_string(f.labels[0]) + "," +
                               std::to_string(f.labels[1]) + "," + std::to_string(f.labels[2]) +
                               "," + std::to_string(f.labels[3]) +
                               ") has no reversed partner above the weight floor");
        const Atom& r = *it->second;
        if (std::abs(r.w + f.w) > 1e-9 * (1.0 + std::abs(f.w)))
            throw UnpairedAtom("paired atom work values are not mirrored");
        AtomRatio ar;
        ar.labels = f.labels;
        ar.w = f.w;
        ar.ratio = f.weight / r.weight;
        ar.predicted = std::exp(beta * (f.w - f.df) + f.i);
        ar.rel_dev = std::abs(ar.ratio - ar.predicted) / ar.predicted;
        out.max_rel_dev = std::max(out.max_rel_dev, ar.rel_dev);
        out.ratios.push_back(ar);
    }
    return out;
}

std::string atoms_to_csv(const AtomPDF& pdf) {
    std::string s = "m,k,l,n,W,dF,I,weight\n";
    for (const Atom& a : pdf.atoms) {
        s += std::to_string(a.labels[0]) + "," + std::to_string(a.labels[1]) + "," +
             std::to_string(a.labels[2]) + "," + std::to_string(a.labels[3]) + "," + fmt(a.w) +
             "," + fmt(a.df) + "," + fmt(a.i) + "," + fmt(a.weight) + "\n";
    }
    return s;
}

std::string atoms_to_json(const AtomPDF& pdf) {
    nlohmann::json j;
    static const char* names[] = {"forward",      "backward",      "forward_wcm",
                                  "backward_wcm", "nofeedback_fwd", "nofeedback_bwd"};
    j["kind"] = names[static_cast<int>(pdf.kind)];
    nlohmann::json atoms = nlohmann::json::array();
    for (const Atom& a : pdf.atoms)
        atoms.push_back(nlohmann::json{{"m", a.labels[0]},
                                       {"k", a.labels[1]},
                                       {"l", a.labels[2]},
                                       {"n", a.labels[3]},
                                       {"W", a.w},
                                       {"dF", a.df},
                                       {"I", a.i},
                                       {"weight", a.weight}});
    j["atoms"] = atoms;
    return j.dump(2);
}

} // namespace qdfr
