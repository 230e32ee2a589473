#include "qdfr/protocol.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

namespace qdfr {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ProtocolInvalid(msg);
}

void check_nondegenerate(const ComplexMatrix& h, const std::string& name) {
    const HermitianEigen e = herm_eigen(h);
    for (const auto& cluster : e.degenerate_clusters())
        if (cluster.size() > 1)
            throw DegenerateSpectrum(name + " has a degenerate eigenvalue cluster of size " +
                                     std::to_string(cluster.size()));
}

} // namespace

void FeedbackProtocol::validate() const {
    const int d = h0.dim();
    require(d >= 2, "h0 dimension must be at least 2");
    require(beta > 0.0, "beta must be positive");
    require(u_drive.dim() == d, "u_drive dimension differs from h0");
    require(!meas_projectors.empty(), "no measurement projectors");
    require(!branches.empty(), "no feedback branches");

    if (!h0.is_hermitian(kTolValidate)) throw NotHermitian("h0");
    check_nondegenerate(h0, "h0");
    require(u_drive.is_unitary(kTolValidate), "u_drive is not unitary");

    ComplexMatrix sum = zeros(d);
    for (size_t l = 0; l < meas_projectors.size(); ++l) {
        const ComplexMatrix& m = meas_projectors[l];
        require(m.dim() == d, "projector dimension differs from h0");
        if (!m.is_hermitian(kTolValidate))
            throw NotHermitian("measurement projector " + std::to_string(l));
        sum += m;
        for (size_t l2 = 0; l2 < meas_projectors.size(); ++l2) {
            const ComplexMatrix prod = m * meas_projectors[l2];
            const ComplexMatrix expect = (l == l2) ? m : zeros(d);
            require(max_abs_diff(prod, expect) <= kTolValidate,
                    "measurement projectors are not orthogonal");
        }
    }
    require(max_abs_diff(sum, identity(d)) <= kTolValidate,
            "measurement projectors do not resolve the identity");

    require(mismatch.size() == branches.size(), "mismatch rows must match branch count");
    for (size_t k = 0; k < mismatch.size(); ++k)
        require(mismatch[k].size() == meas_projectors.size(),
                "mismatch columns must match outcome count");
    for (size_t l = 0; l < meas_projectors.size(); ++l) {
        double colsum = 0.0;
        for (size_t k = 0; k < mismatch.size(); ++k) {
            const double p = mismatch[k][l];
            require(p >= -kTolValidate && p <= 1.0 + kTolValidate,
                    "mismatch entry outside [0,1]");
            colsum += p;
        }
        require(std::abs(colsum - 1.0) <= kTolValidate,
                "mismatch column " + std::to_string(l) + " does not sum to 1");
    }

    for (size_t k = 0; k < branches.size(); ++k) {
        const FeedbackBranch& br = branches[k];
        require(br.v_feedback.dim() == d && br.h_final.dim() == d,
                "branch " + std::to_string(k) + " dimension differs from h0");
        require(br.v_feedback.is_unitary(kTolValidate),
                "branch " + std::to_string(k) + " v_feedback is not unitary");
        if (!br.h_final.is_hermitian(kTolValidate))
            throw NotHermitian("branch " + std::to_string(k) + " h_final");
        check_nondegenerate(br.h_final, "branch " + std::to_string(k) + " h_final");
    }
}

std::vector<std::vector<double>> rx_mismatch(double phi) {
    const double c2 = std::cos(phi) * std::cos(phi);
    const double s2 = 1.0 - c2;
    return {{c2, s2}, {s2, c2}};
}

void BackwardProtocol::validate() const {
    const int d = h_final_rev.dim();
    if (beta <= 0.0) throw ProtocolInvalid("beta must be positive");
    if (initial_hamiltonians.empty() || meas_projectors_rev.empty())
        throw ProtocolInvalid("reversed protocol is missing pieces");
    if (initial_hamiltonians.size() != sampling.size() ||
        initial_hamiltonians.size() != v_feedback_rev.size())
        throw ProtocolInvalid("per-branch lists disagree in length");
    double s = 0.0;
    for (double p : sampling) {
        if (p < -1e-12) throw ProtocolInvalid("negative branch probability");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ProtocolInvalid("branch probabilities do not sum to 1");
    if (!h_final_rev.is_hermitian(kTolValidate)) throw NotHermitian("reversed final Hamiltonian");
    if (u_drive_rev.dim() != d || !u_drive_rev.is_unitary(kTolValidate))
        throw ProtocolInvalid("reversed drive is not unitary");
    for (const auto& h : initial_hamiltonians)
        if (h.dim() != d || !h.is_hermitian(kTolValidate))
            throw NotHermitian("reversed initial Hamiltonian");
    for (const auto& v : v_feedback_rev)
        if (v.dim() != d || !v.is_unitary(kTolValidate))
            throw ProtocolInvalid("reversed branch unitary is not unitary");
}

TimeReversalOp TimeReversalOp::qubit() {
    TimeReversalOp t;
    t.unitary_part = ComplexMatrix(2, {0, 1, -1, 0}); // i*sigma_y
    return t;
}

TimeReversalOp TimeReversalOp::qubits(int n) {
    TimeReversalOp t = qubit();
    TimeReversalOp out;
    out.unitary_part = t.unitary_part;
    for (int i = 1; i < n; ++i) out.unitary_part = kron(out.unitary_part, t.unitary_part);
    return out;
}

ComplexMatrix TimeReversalOp::observable(const ComplexMatrix& o) const {
    return unitary_part * o.conj() * unitary_part.dagger();
}

ComplexMatrix TimeReversalOp::evolution(const ComplexMatrix& u) const {
    return (unitary_part * u.conj() * unitary_part.dagger()).dagger();
}

ComplexMatrix time_reverse(const ComplexMatrix& op, const TimeReversalOp& theta, OpKind kind) {
    return kind == OpKind::observable ? theta.observable(op) : theta.evolution(op);
}

ComplexMatrix gibbs_state(const ComplexMatrix& h, double beta) {
    if (beta < 0.0) throw BetaNonpositive("gibbs_state needs beta >= 0");
    const HermitianEigen e = herm_eigen(h);
    const int n = h.dim();
    const double emin = e.eigenvalues.front();
    double z = 0.0;
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = std::exp(-beta * (e.eigenvalues[i] - emin));
        z += w[i];
    }
    ComplexMatrix rho(n);
    for (int k = 0; k < n; ++k) {
        const double p = w[k] / z;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                rho(i, j) += p * e.eigenvectors(i, k) * std::conj(e.eigenvectors(j, k));
    }
    return rho;
}

namespace {

// ln Tr e^{-beta h}, shifted for stability.
double log_partition(const ComplexMatrix& h, double beta) {
    const HermitianEigen e = herm_eigen(h);
    const double emin = e.eigenvalues.front();
    double s = 0.0;
    for (double ev : e.eigenvalues) s += std::exp(-beta * (ev - emin));
    return -beta * emin + std::log(s);
}

} // namespace

double free_energy_difference(const ComplexMatrix& h_init, const ComplexMatrix& h_final,
                              double beta) {
    if (beta <= 0.0) throw BetaNonpositive("free_energy_difference needs beta > 0");
    return -(log_partition(h_final, beta) - log_partition(h_init, beta)) / beta;
}

std::vector<double> forward_outcome_probs(const FeedbackProtocol& p) {
    const ComplexMatrix rho0 = gibbs_state(p.h0, p.beta);
    const ComplexMatrix sigma = p.u_drive * rho0 * p.u_drive.dagger();
    std::vector<double> probs(p.n_outcomes());
    for (int l = 0; l < p.n_outcomes(); ++l)
        probs[l] = (p.meas_projectors[l] * sigma).trace().real();
    return probs;
}

std::vector<double> branch_probs(const FeedbackProtocol& p) {
    const std::vector<double> pl = forward_outcome_probs(p);
    std::vector<double> pk(p.n_branches(), 0.0);
    for (int k = 0; k < p.n_branches(); ++k)
        for (int l = 0; l < p.n_outcomes(); ++l) pk[k] += p.mismatch[k][l] * pl[l];
    return pk;
}

std::vector<double> branch_free_energies(const FeedbackProtocol& p) {
    std::vector<double> df(p.n_branches());
    for (int k = 0; k < p.n_branches(); ++k)
        df[k] = free_energy_difference(p.h0, p.branches[k].h_final, p.beta);
    return df;
}

BackwardProtocol build_backward(const FeedbackProtocol& fwd, const TimeReversalOp& theta) {
    fwd.validate();
    if (theta.unitary_part.dim() != fwd.dim())
        throw DimensionMismatch("time-reversal operator dimension differs from protocol");

    BackwardProtocol b;
    b.beta = fwd.beta;
    b.h_final_rev = theta.observable(fwd.h0);
    b.u_drive_rev = theta.evolution(fwd.u_drive);
    for (const auto& m : fwd.meas_projectors)
        b.meas_projectors_rev.push_back(theta.observable(m));
    for (const auto& br : fwd.branches) {
        b.initial_hamiltonians.push_back(theta.observable(br.h_final));
        b.v_feedback_rev.push_back(theta.evolution(br.v_feedback));
    }
    b.sampling = branch_probs(fwd);
    b.validate();
    return b;
}

// --- JSON serialization ---

namespace {

using nlohmann::json;

json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.dim(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(row);
    }
    return rows;
}

ComplexMatrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw ConfigInvalid("field '" + field + "' must be a nonempty matrix");
    const int n = static_cast<int>(j.size());
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) {
        const json& row = j.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ConfigInvalid("field '" + field + "' must be square");
        for (int jj = 0; jj < n; ++jj) {
            const json& e = row.at(jj);
            if (!e.is_array() || e.size() != 2)
                throw ConfigInvalid("field '" + field + "' entries must be [re, im] pairs");
            m(i, jj) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
        }
    }
    return m;
}

} // namespace

std::string protocol_to_json(const FeedbackProtocol& p) {
    json j;
    j["beta"] = p.beta;
    j["h0"] = matrix_to_json(p.h0);
    j["u_drive"] = matrix_to_json(p.u_drive);
    json projs = json::array();
    for (const auto& m : p.meas_projectors) projs.push_back(matrix_to_json(m));
    j["projectors"] = projs;
    if (p.rx_phi.has_value()) {
        j["mismatch"] = json{{"model", "rx"}, {"phi", *p.rx_phi}};
    } else {
        j["mismatch"] = p.mismatch;
    }
    json branches = json::array();
    for (const auto& br : p.branches)
        branches.push_back(json{{"v_feedback", matrix_to_json(br.v_feedback)},
                                {"h_final", matrix_to_json(br.h_final)}});
    j["branches"] = branches;
    return j.dump(2);
}

FeedbackProtocol protocol_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid(std::string("protocol JSON does not parse: ") + e.what());
    }
    FeedbackProtocol p;
    if (!j.contains("beta")) throw ConfigInvalid("missing field 'beta'");
    p.beta = j["beta"].get<double>();
    if (!j.contains("h0")) throw ConfigInvalid("missing field 'h0'");
    p.h0 = matrix_from_json(j["h0"], "h0");
    if (!j.contains("u_drive")) throw ConfigInvalid("missing field 'u_drive'");
    p.u_drive = matrix_from_json(j["u_drive"], "u_drive");
    if (!j.contains("projectors")) throw ConfigInvalid("missing field 'projectors'");
    for (size_t l = 0; l < j["projectors"].size(); ++l)
        p.meas_projectors.push_back(
            matrix_from_json(j["projectors"][l], "projectors[" + std::to_string(l) + "]"));
    if (!j.contains("mismatch")) throw ConfigInvalid("missing field 'mismatch'");
    const json& mm = j["mismatch"];
    if (mm.is_object()) {
        if (mm.value("model", "") != "rx" || !mm.contains("phi"))
            throw ConfigInvalid("mismatch object must be {\"model\":\"rx\",\"phi\":...}");
        p.rx_phi = mm["phi"].get<double>();
        p.mismatch = rx_mismatch(*p.rx_phi);
    } else {
        p.mismatch = mm.get<std::vector<std::vector<double>>>();
    }
    if (!j.contains("branches")) throw ConfigInvalid("missing field 'branches'");
    for (size_t k = 0; k < j["branches"].size(); ++k) {
        const json& br = j["branches"][k];
        const std::string tag = "branches[" + std::to_string(k) + "]";
        if (!br.contains("v_feedback")) throw ConfigInvalid("missing field '" + tag + ".v_feedback'");
        if (!br.contains("h_final")) throw ConfigInvalid("missing field '" + tag + ".h_final'");
        p.branches.push_back(FeedbackBranch{matrix_from_json(br["v_feedback"], tag + ".v_feedback"),
                                            matrix_from_json(br["h_final"], tag + ".h_final")});
    }
    return p;
}

} // namespace qdfr
