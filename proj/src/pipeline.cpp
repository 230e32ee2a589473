#include "qdfr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace qdfr {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr double kDefaultPlotGamma = 0.05;
constexpr double kHistoryFloor = 1e-12;
constexpr double kRouteAgreementTol = 1e-6;

RunMode parse_mode(const std::string& s) {
    if (s == "oracle") return RunMode::oracle;
    if (s == "circuits") return RunMode::circuits;
    if (s == "full") return RunMode::full;
    throw ConfigInvalid("mode must be one of oracle, circuits, full");
}

std::string mode_name(RunMode m) {
    switch (m) {
    case RunMode::oracle: return "oracle";
    case RunMode::circuits: return "circuits";
    default: return "full";
    }
}

std::string model_name(HyperplaneModel m) {
    switch (m) {
    case HyperplaneModel::full3: return "full3";
    case HyperplaneModel::two_var_intercept: return "two_var_intercept";
    default: return "one_var_intercept";
    }
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingArtifact("cannot open " + path.string() + " for writing");
    os << text;
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

RunConfig load_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("run configuration is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigInvalid("run configuration must be a JSON object");
    if (!j.contains("protocol")) throw ConfigInvalid("missing field: protocol");

    RunConfig cfg;
    try {
        if (j["protocol"].is_string()) {
            std::ifstream is(j["protocol"].get<std::string>());
            if (!is)
                throw ConfigInvalid("protocol file not found: " + j["protocol"].get<std::string>());
            std::stringstream ss;
            ss << is.rdbuf();
            cfg.protocol = protocol_from_json(ss.str());
        } else {
            cfg.protocol = protocol_from_json(j["protocol"].dump());
        }
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("field protocol: ") + e.what());
    }

    auto take_real = [&j](const char* name, double fallback, bool nonneg) {
        if (!j.contains(name)) return fallback;
        if (!j[name].is_number())
            throw ConfigInvalid(std::string("field ") + name + " must be a number");
        const double v = j[name].get<double>();
        if (nonneg && v < 0.0)
            throw ConfigInvalid(std::string("field ") + name + " must be nonnegative");
        return v;
    };
    cfg.gamma = take_real("gamma", cfg.gamma, true);
    cfg.grid_margin = take_real("grid_margin", cfg.grid_margin, true);
    cfg.tol_i = take_real("tol_i", cfg.tol_i, true);
    cfg.tol_beta = take_real("tol_beta", cfg.tol_beta, true);
    if (j.contains("outdir")) {
        if (!j["outdir"].is_string()) throw ConfigInvalid("field outdir must be a string");
        cfg.outdir = j["outdir"].get<std::string>();
    }
    if (j.contains("mode")) {
        if (!j["mode"].is_string()) throw ConfigInvalid("field mode must be a string");
        cfg.mode = parse_mode(j["mode"].get<std::string>());
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigInvalid("config file not found: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return load_config(ss.str());
}

namespace {

// Work values of one branch's spectral pairs, grouped when two (m,n) pairs
// land on the same location. Each group keeps the labels of its first pair.
struct SpectralLocations {
    std::vector<double> locs;
    std::vector<std::array<int, 4>> labels;
};

SpectralLocations spectral_locations(const std::vector<double>& e0,
                                     const std::vector<double>& e_fin, int k, int l,
                                     double sign) {
    SpectralLocations out;
    const int d = static_cast<int>(e0.size());
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
            const double w = sign * (e_fin[m] - e0[n]);
            bool merged = false;
            for (double& existing : out.locs)
                if (std::abs(existing - w) < 1e-9) {
                    merged = true;
                    break;
                }
            if (merged) continue;
            out.locs.push_back(w);
            out.labels.push_back({m, k, l, n});
        }
    return out;
}

AtomPDF attach_labels(std::vector<Atom> atoms, const SpectralLocations& sl, double df, double i,
                      PdfKind kind) {
    AtomPDF pdf;
    pdf.kind = kind;
    for (size_t a = 0; a < atoms.size(); ++a) {
        atoms[a].labels = sl.labels[a];
        atoms[a].df = df;
        atoms[a].i = i;
        if (atoms[a].weight >= kWeightFloor) pdf.atoms.push_back(atoms[a]);
    }
    return pdf;
}

// Drops light leftovers so the forward and backward lists carry the same
// label sets: extraction returns a weight for every spectral location,
// including forbidden transitions whose true weight is zero but whose
// broadened estimate picks up the tails of neighboring peaks. The floor is
// relative because those spurious weights scale with the real ones.
void prune_unpaired(AtomPDF& fwd, AtomPDF& bwd) {
    double wmax = 0.0;
    for (const Atom& a : fwd.atoms) wmax = std::max(wmax, a.weight);
    for (const Atom& a : bwd.atoms) wmax = std::max(wmax, a.weight);
    const double floor_v = 1e-2 * wmax;
    auto heavy = [floor_v](const AtomPDF& pdf, const std::array<int, 4>& labels) {
        for (const Atom& a : pdf.atoms)
            if (a.labels == labels) return a.weight >= floor_v;
        return false;
    };
    AtomPDF f2, b2;
    f2.kind = fwd.kind;
    b2.kind = bwd.kind;
    for (const Atom& a : fwd.atoms)
        if (a.weight >= floor_v && heavy(bwd, a.labels)) f2.atoms.push_back(a);
    for (const Atom& a : bwd.atoms)
        if (a.weight >= floor_v && heavy(fwd, a.labels)) b2.atoms.push_back(a);
    fwd = std::move(f2);
    bwd = std::move(b2);
}

SampledCharFn sum_chi(const std::vector<SampledCharFn>& parts, CharFnKind kind) {
    SampledCharFn out;
    out.grid = parts.front().grid;
    out.kind = kind;
    out.samples.assign(static_cast<size_t>(out.grid.n), cplx(0, 0));
    for (const SampledCharFn& c : parts)
        for (size_t j = 0; j < c.samples.size(); ++j) out.samples[j] += c.samples[j];
    return out;
}

double max_sample_dev(const SampledCharFn& a, const SampledCharFn& b) {
    double worst = 0.0;
    for (size_t j = 0; j < a.samples.size(); ++j)
        worst = std::max(worst, std::abs(a.samples[j] - b.samples[j]));
    return worst;
}

} // namespace

PipelineResult run_pipeline(const RunConfig& config) {
    PipelineResult r;
    r.config = config;

    const FeedbackProtocol& p = config.protocol;
    p.validate();

    int n_qubits = 0;
    for (int d = p.dim(); d > 1; d /= 2) {
        if (d % 2 != 0) throw ProtocolInvalid("time reversal needs a register of qubits");
        ++n_qubits;
    }
    r.backward = build_backward(p, TimeReversalOp::qubits(n_qubits));

    const int K = p.n_branches();
    const int L = p.n_outcomes();

    // Exact atom enumeration.
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) {
            r.fwd_slices.push_back(forward_mixed_work_pdf(p, k, l));
            r.bwd_slices.push_back(backward_mixed_work_pdf(r.backward, l, k));
        }
    for (int k = 0; k < K; ++k) {
        auto [wf, wb] = wcm_mixed_work_pdfs(p, r.backward, k);
        r.wcm_fwd.push_back(std::move(wf));
        r.wcm_bwd.push_back(std::move(wb));
    }
    {
        auto [jf, jb] = joint_pdfs(p, r.backward);
        r.joint_fwd = std::move(jf);
        r.joint_bwd = std::move(jb);
    }

    r.plot_gamma = config.gamma > 0.0 ? config.gamma : kDefaultPlotGamma;
    double w_max = 1.0;
    for (const AtomPDF* pdf : {&r.joint_fwd, &r.joint_bwd})
        for (const Atom& a : pdf->atoms) w_max = std::max(w_max, std::abs(a.w));
    r.grid = plan_ugrid(w_max, r.plot_gamma, config.grid_margin);

    // Characteristic functions: analytic sums in oracle mode, interferometer
    // runs otherwise. Full mode runs both and insists they agree.
    std::vector<SampledCharFn> oracle_fwd, oracle_fwd_wcm, oracle_bwd, oracle_bwd_wcm;
    auto sample_oracle = [&]() {
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < L; ++l) {
                const size_t idx = static_cast<size_t>(k * L + l);
                oracle_fwd.push_back(
                    sample_chi_atoms(r.fwd_slices[idx], r.grid, k, l, CharFnKind::forward));
                oracle_bwd.push_back(
                    sample_chi_atoms(r.bwd_slices[idx], r.grid, k, l, CharFnKind::backward));
            }
        for (int k = 0; k < K; ++k) {
            oracle_fwd_wcm.push_back(
                sample_chi_atoms(r.wcm_fwd[static_cast<size_t>(k)], r.grid, k, -1,
                                 CharFnKind::forward_wcm));
            oracle_bwd_wcm.push_back(
                sample_chi_atoms(r.wcm_bwd[static_cast<size_t>(k)], r.grid, k, -1,
                                 CharFnKind::backward_wcm));
        }
    };

    if (config.mode != RunMode::oracle) {
        const std::vector<double> u_points = r.grid.points();
        r.joint_probs = run_joint_prob(p);

        r.chi_fwd.resize(static_cast<size_t>(K * L));
        r.chi_fwd_wcm.resize(static_cast<size_t>(K));
        r.chi_bwd_wcm.resize(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < L; ++l) {
                SampledCharFn& c = r.chi_fwd[static_cast<size_t>(k * L + l)];
                c.grid = r.grid;
                c.k = k;
                c.l = l;
                c.kind = CharFnKind::forward;
                c.samples.assign(static_cast<size_t>(r.grid.n), cplx(0, 0));
            }
        for (int k = 0; k < K; ++k) {
            SampledCharFn& c = r.chi_fwd_wcm[static_cast<size_t>(k)];
            c.grid = r.grid;
            c.k = k;
            c.l = -1;
            c.kind = CharFnKind::forward_wcm;
            c.samples.assign(static_cast<size_t>(r.grid.n), cplx(0, 0));
            SampledCharFn& cb = r.chi_bwd_wcm[static_cast<size_t>(k)];
            cb = c;
            cb.kind = CharFnKind::backward_wcm;
        }

        std::vector<CircuitOutcome> backward_runs;
        backward_runs.reserve(u_points.size() * static_cast<size_t>(K));
        for (size_t j = 0; j < u_points.size(); ++j) {
            const double u = u_points[j];
            const CircuitOutcome fm = run_forward_mismatch(p, u);
            for (const CircuitOutcome::Entry& e : fm.entries)
                r.chi_fwd[static_cast<size_t>(e.k * L + e.l)].samples[j] =
                    e.weighted_coherence();
            const CircuitOutcome fw = run_forward_wcm(p, u);
            for (const CircuitOutcome::Entry& e : fw.entries)
                r.chi_fwd_wcm[static_cast<size_t>(e.k)].samples[j] = e.weighted_coherence();
            for (int k = 0; k < K; ++k) {
                const CircuitOutcome bk = run_backward(r.backward, k, u);
                r.chi_bwd_wcm[static_cast<size_t>(k)].samples[j] =
                    bk.find(k, k).weighted_coherence();
                backward_runs.push_back(bk);
            }
        }
        r.chi_bwd = assemble_backward_chi(r.joint_probs, backward_runs, r.grid);

        if (config.mode == RunMode::full) {
            sample_oracle();
            double worst = 0.0;
            for (int i = 0; i < K * L; ++i) {
                worst = std::max(worst, max_sample_dev(r.chi_fwd[static_cast<size_t>(i)],
                                                       oracle_fwd[static_cast<size_t>(i)]));
                worst = std::max(worst, max_sample_dev(r.chi_bwd[static_cast<size_t>(i)],
                                                       oracle_bwd[static_cast<size_t>(i)]));
            }
            for (int k = 0; k < K; ++k) {
                worst = std::max(worst, max_sample_dev(r.chi_fwd_wcm[static_cast<size_t>(k)],
                                                       oracle_fwd_wcm[static_cast<size_t>(k)]));
                worst = std::max(worst, max_sample_dev(r.chi_bwd_wcm[static_cast<size_t>(k)],
                                                       oracle_bwd_wcm[static_cast<size_t>(k)]));
            }
            if (worst > kRouteAgreementTol)
                throw Error("circuit and analytic characteristic functions disagree by " +
                            fmt_num(worst));
        }
    } else {
        sample_oracle();
        r.chi_fwd = std::move(oracle_fwd);
        r.chi_fwd_wcm = std::move(oracle_fwd_wcm);
        r.chi_bwd = std::move(oracle_bwd);
        r.chi_bwd_wcm = std::move(oracle_bwd_wcm);
        // p(k,l) from the same analytic channel the atoms use.
        const std::vector<double> p_l = forward_outcome_probs(p);
        r.joint_probs.assign(static_cast<size_t>(K), std::vector<double>(static_cast<size_t>(L)));
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < L; ++l)
                r.joint_probs[static_cast<size_t>(k)][static_cast<size_t>(l)] =
                    p.mismatch[static_cast<size_t>(k)][static_cast<size_t>(l)] *
                    p_l[static_cast<size_t>(l)];
    }

    // Broadened curves for plotting, always at a strictly positive width.
    for (int i = 0; i < K * L; ++i) {
        r.pdf_fwd.push_back(reconstruct_pdf(r.chi_fwd[static_cast<size_t>(i)], r.plot_gamma));
        r.pdf_bwd.push_back(reconstruct_pdf(r.chi_bwd[static_cast<size_t>(i)], r.plot_gamma));
    }
    r.pdf_work_fwd = reconstruct_pdf(sum_chi(r.chi_fwd, CharFnKind::forward), r.plot_gamma);
    r.pdf_work_bwd = reconstruct_pdf(sum_chi(r.chi_bwd, CharFnKind::backward), r.plot_gamma);

    // Measured information coordinates and exact free-energy coordinates.
    const std::vector<double> df_k = branch_free_energies(p);
    std::vector<double> p_k(static_cast<size_t>(K), 0.0), p_l(static_cast<size_t>(L), 0.0);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) {
            p_k[static_cast<size_t>(k)] += r.joint_probs[static_cast<size_t>(k)][static_cast<size_t>(l)];
            p_l[static_cast<size_t>(l)] += r.joint_probs[static_cast<size_t>(k)][static_cast<size_t>(l)];
        }
    std::vector<std::vector<double>> i_coord(static_cast<size_t>(K),
                                             std::vector<double>(static_cast<size_t>(L)));
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) {
            const double pkl = r.joint_probs[static_cast<size_t>(k)][static_cast<size_t>(l)];
            i_coord[static_cast<size_t>(k)][static_cast<size_t>(l)] =
                pkl > 0.0 ? std::log(pkl / (p_k[static_cast<size_t>(k)] *
                                            p_l[static_cast<size_t>(l)]))
                          : -std::numeric_limits<double>::infinity();
        }

    // Verification atoms: exact lists at gamma = 0, otherwise broadened
    // reconstruction evaluated at the spectrally known work values.
    const HermitianEigen eig0 = herm_eigen(p.h0);
    std::vector<HermitianEigen> eig_fin;
    for (int k = 0; k < K; ++k) eig_fin.push_back(herm_eigen(p.branches[static_cast<size_t>(k)].h_final));

    std::vector<AtomPDF> vf(static_cast<size_t>(K * L)), vb(static_cast<size_t>(K * L));
    std::vector<AtomPDF> vwf(static_cast<size_t>(K)), vwb(static_cast<size_t>(K));
    if (config.gamma == 0.0) {
        for (int i = 0; i < K * L; ++i) {
            vf[static_cast<size_t>(i)] = r.fwd_slices[static_cast<size_t>(i)];
            vb[static_cast<size_t>(i)] = r.bwd_slices[static_cast<size_t>(i)];
        }
        for (int k = 0; k < K; ++k) {
            vwf[static_cast<size_t>(k)] = r.wcm_fwd[static_cast<size_t>(k)];
            vwb[static_cast<size_t>(k)] = r.wcm_bwd[static_cast<size_t>(k)];
        }
    } else {
        for (int k = 0; k < K; ++k) {
            const SpectralLocations fl =
                spectral_locations(eig0.eigenvalues, eig_fin[static_cast<size_t>(k)].eigenvalues,
                                   k, 0, +1.0);
            for (int l = 0; l < L; ++l) {
                const size_t idx = static_cast<size_t>(k * L + l);
                if (r.joint_probs[static_cast<size_t>(k)][static_cast<size_t>(l)] < kHistoryFloor)
                    continue; // unreachable history: no atoms to extract
                SpectralLocations fkl = fl;
                for (auto& lab : fkl.labels) lab[2] = l;
                SpectralLocations bkl = fkl;
                for (double& w : bkl.locs) w = -w;
                const double icl = i_coord[static_cast<size_t>(k)][static_cast<size_t>(l)];
                vf[idx] = attach_labels(
                    extract_atoms(reconstruct_pdf(r.chi_fwd[idx], config.gamma), fkl.locs), fkl,
                    df_k[static_cast<size_t>(k)], icl, PdfKind::forward);
                vb[idx] = attach_labels(
                    extract_atoms(reconstruct_pdf(r.chi_bwd[idx], config.gamma), bkl.locs), bkl,
                    -df_k[static_cast<size_t>(k)], icl, PdfKind::backward);
                prune_unpaired(vf[idx], vb[idx]);
            }
            SpectralLocations fkk = fl;
            for (auto& lab : fkk.labels) lab[2] = k;
            SpectralLocations bkk = fkk;
            for (double& w : bkk.locs) w = -w;
            vwf[static_cast<size_t>(k)] = attach_labels(
                extract_atoms(reconstruct_pdf(r.chi_fwd_wcm[static_cast<size_t>(k)], config.gamma),
                              fkk.locs),
                fkk, df_k[static_cast<size_t>(k)], 0.0, PdfKind::forward_wcm);
            vwb[static_cast<size_t>(k)] = attach_labels(
                extract_atoms(reconstruct_pdf(r.chi_bwd_wcm[static_cast<size_t>(k)], config.gamma),
                              bkk.locs),
                bkk, -df_k[static_cast<size_t>(k)], 0.0, PdfKind::backward_wcm);
            prune_unpaired(vwf[static_cast<size_t>(k)], vwb[static_cast<size_t>(k)]);
        }
    }

    // Ratio points and fits.
    std::vector<std::optional<LineFit>> mismatch_fit(static_cast<size_t>(K * L));
    std::vector<std::optional<LineFit>> wcm_fit(static_cast<size_t>(K));
    r.points_mismatch.resize(static_cast<size_t>(K * L));
    r.points_wcm.resize(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const size_t idx = static_cast<size_t>(k * L + l);
            if (vf[idx].atoms.empty()) continue;
            r.points_mismatch[idx] = ratio_points(vf[idx], vb[idx]);
            for (const RatioPoint& pt : r.points_mismatch[idx]) r.points_joint.push_back(pt);
            try {
                mismatch_fit[idx] = fit_line(r.points_mismatch[idx]);
            } catch (const DegeneratePoints&) {
                // a single surviving atom pins no line; the point still
                // enters the hyperplane fit
            }
        }
        if (!vwf[static_cast<size_t>(k)].atoms.empty()) {
            r.points_wcm[static_cast<size_t>(k)] =
                ratio_points(vwf[static_cast<size_t>(k)], vwb[static_cast<size_t>(k)]);
            try {
                wcm_fit[static_cast<size_t>(k)] = fit_line(r.points_wcm[static_cast<size_t>(k)]);
            } catch (const DegeneratePoints&) {
            }
        }
    }
    if (r.points_joint.empty()) throw DegeneratePoints("no ratio points survive the weight floor");

    const HyperplaneFit hp = hyperplane_fit_ladder(r.points_joint);

    std::vector<NamedEstimate> beta_hats;
    double beta_blue = 0.0;
    int n_blue = 0;
    for (int k = 0; k < K; ++k)
        if (wcm_fit[static_cast<size_t>(k)]) {
            beta_hats.push_back({"wcm_k" + std::to_string(k),
                                 wcm_fit[static_cast<size_t>(k)]->slope});
            beta_blue += wcm_fit[static_cast<size_t>(k)]->slope;
            ++n_blue;
        }
    double beta_red = 0.0;
    int n_red = 0;
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) {
            const size_t idx = static_cast<size_t>(k * L + l);
            if (!mismatch_fit[idx]) continue;
            beta_hats.push_back({"mismatch_k" + std::to_string(k) + "_l" + std::to_string(l),
                                 mismatch_fit[idx]->slope});
            beta_red += mismatch_fit[idx]->slope;
            ++n_red;
        }
    if (hp.w_active) beta_hats.push_back({"hyperplane_c_w", hp.c_w});
    if (n_blue == 0 || n_red == 0)
        throw DegeneratePoints("not enough line fits for the pathway estimates");
    beta_blue /= n_blue;
    beta_red /= n_red;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.blue_deltaF.assign(static_cast<size_t>(K), nan);
    r.red_deltaF.assign(static_cast<size_t>(K), nan);
    r.blue_i.assign(static_cast<size_t>(K), std::vector<double>(static_cast<size_t>(L), nan));
    r.red_i.assign(static_cast<size_t>(K), std::vector<double>(static_cast<size_t>(L), nan));
    for (int k = 0; k < K; ++k) {
        if (wcm_fit[static_cast<size_t>(k)])
            r.blue_deltaF[static_cast<size_t>(k)] = wcm_fit[static_cast<size_t>(k)]->zero_crossing;
        double df_acc = 0.0;
        int df_n = 0;
        for (int l = 0; l < L; ++l) {
            const size_t idx = static_cast<size_t>(k * L + l);
            if (!mismatch_fit[idx]) continue;
            const double zc = mismatch_fit[idx]->zero_crossing;
            if (wcm_fit[static_cast<size_t>(k)])
                r.blue_i[static_cast<size_t>(k)][static_cast<size_t>(l)] = extract_information(
                    zc, beta_blue, r.blue_deltaF[static_cast<size_t>(k)]);
            const double icl = i_coord[static_cast<size_t>(k)][static_cast<size_t>(l)];
            r.red_i[static_cast<size_t>(k)][static_cast<size_t>(l)] = icl;
            df_acc += zc + icl / beta_red;
            ++df_n;
        }
        if (df_n > 0) r.red_deltaF[static_cast<size_t>(k)] = df_acc / df_n;
    }

    r.report = consistency_report(hp, beta_hats, r.blue_deltaF, r.blue_i, p.beta, config.tol_i,
                                  config.tol_beta);
    r.exit_code = r.report.verdict ? 0 : 1;

    // Versioned report document.
    json rep;
    rep["schema_version"] = kSchemaVersion;
    rep["config"] = {{"gamma", config.gamma},
                     {"grid_margin", config.grid_margin},
                     {"tol_i", config.tol_i},
                     {"tol_beta", config.tol_beta},
                     {"mode", mode_name(config.mode)}};
    rep["protocol"] = {{"beta", p.beta},
                       {"dim", p.dim()},
                       {"n_outcomes", L},
                       {"n_branches", K}};
    rep["grid"] = {{"u_max", r.grid.u_max}, {"n", r.grid.n}, {"du", r.grid.du}};
    json hpj;
    hpj["model"] = model_name(hp.model);
    hpj["c_w"] = finite_or_null(hp.c_w);
    hpj["c_df"] = finite_or_null(hp.c_df);
    hpj["c_i"] = finite_or_null(hp.c_i);
    hpj["c0"] = hp.c0;
    hpj["residual_max"] = hp.residual_max;
    rep["hyperplane"] = hpj;
    json bh = json::array();
    for (const NamedEstimate& e : beta_hats) bh.push_back({{"name", e.name}, {"value", e.value}});
    rep["beta_hats"] = bh;
    auto vec_json = [](const std::vector<double>& v) {
        json out = json::array();
        for (double x : v) out.push_back(finite_or_null(x));
        return out;
    };
    auto mat_json = [&](const std::vector<std::vector<double>>& m) {
        json out = json::array();
        for (const auto& row : m) out.push_back(vec_json(row));
        return out;
    };
    rep["pathways"] = {{"blue", {{"beta_hat", beta_blue},
                                 {"deltaF_hat", vec_json(r.blue_deltaF)},
                                 {"i_hat", mat_json(r.blue_i)}}},
                       {"red", {{"beta_hat", beta_red},
                                {"deltaF_hat", vec_json(r.red_deltaF)},
                                {"i_hat", mat_json(r.red_i)}}}};
    rep["joint_probs"] = mat_json(r.joint_probs);
    rep["verdicts"] = {{"c_i", r.report.verdict_ci},
                       {"c_w", r.report.verdict_cw},
                       {"c_df", r.report.verdict_cdf},
                       {"verdict", r.report.verdict}};
    rep["exit_code"] = r.exit_code;
    r.report_json = rep.dump(2) + "\n";
    return r;
}

void write_artifacts(const PipelineResult& r, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const fs::path base(outdir);

    const int K = r.config.protocol.n_branches();
    const int L = r.config.protocol.n_outcomes();
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const size_t idx = static_cast<size_t>(k * L + l);
            const std::string kl = "_k" + std::to_string(k) + "_l" + std::to_string(l);
            write_file(base / ("chi_fwd" + kl + ".csv"), chi_to_csv(r.chi_fwd[idx]));
            write_file(base / ("chi_bwd" + kl + ".csv"), chi_to_csv(r.chi_bwd[idx]));

            std::ostringstream pf, pb;
            pf << "W,density,k,l,gamma\n";
            pb << "W,density,k,l,gamma\n";
            const BroadenedPDF& df = r.pdf_fwd[idx];
            const BroadenedPDF& db = r.pdf_bwd[idx];
            for (size_t m = 0; m < df.w_grid.size(); ++m)
                pf << fmt_num(df.w_grid[m]) << ',' << fmt_num(df.values[m]) << ',' << k << ','
                   << l << ',' << fmt_num(df.gamma) << '\n';
            for (size_t m = 0; m < db.w_grid.size(); ++m)
                pb << fmt_num(db.w_grid[m]) << ',' << fmt_num(db.values[m]) << ',' << k << ','
                   << l << ',' << fmt_num(db.gamma) << '\n';
            write_file(base / ("pdf_fwd" + kl + ".csv"), pf.str());
            write_file(base / ("pdf_bwd" + kl + ".csv"), pb.str());

            if (!r.points_mismatch[idx].empty())
                write_file(base / ("ratio_mismatch" + kl + ".csv"),
                           ratio_points_to_csv(r.points_mismatch[idx]));
        }
        const std::string ks = "_k" + std::to_string(k);
        write_file(base / ("chi_fwd_wcm" + ks + ".csv"),
                   chi_to_csv(r.chi_fwd_wcm[static_cast<size_t>(k)]));
        write_file(base / ("chi_bwd_wcm" + ks + ".csv"),
                   chi_to_csv(r.chi_bwd_wcm[static_cast<size_t>(k)]));
        if (!r.points_wcm[static_cast<size_t>(k)].empty())
            write_file(base / ("ratio_wcm" + ks + ".csv"),
                       ratio_points_to_csv(r.points_wcm[static_cast<size_t>(k)]));
    }
    write_file(base / "ratio_joint.csv", ratio_points_to_csv(r.points_joint));
    write_file(base / "report.json", r.report_json);
}

void emit_plot_data(const PipelineResult& r, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const fs::path base(outdir);

    if (r.points_wcm.empty() || r.points_joint.empty())
        throw MissingArtifact("ratio points are missing; run the pipeline first");
    if (r.pdf_fwd.empty() || r.pdf_work_fwd.w_grid.empty())
        throw MissingArtifact("broadened densities are missing; run the pipeline first");

    const int K = r.config.protocol.n_branches();
    const int L = r.config.protocol.n_outcomes();

    {
        std::ostringstream os;
        os << "k,W,logratio\n";
        for (int k = 0; k < K; ++k)
            for (const RatioPoint& pt : r.points_wcm[static_cast<size_t>(k)])
                os << k << ',' << fmt_num(pt.w) << ',' << fmt_num(pt.logratio) << '\n';
        write_file(base / "fig8_wcm_ratio.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "direction,k,l,W,density\n";
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < L; ++l) {
                const size_t idx = static_cast<size_t>(k * L + l);
                const BroadenedPDF& df = r.pdf_fwd[idx];
                for (size_t m = 0; m < df.w_grid.size(); ++m)
                    os << "forward," << k << ',' << l << ',' << fmt_num(df.w_grid[m]) << ','
                       << fmt_num(df.values[m]) << '\n';
                const BroadenedPDF& db = r.pdf_bwd[idx];
                for (size_t m = 0; m < db.w_grid.size(); ++m)
                    os << "backward," << k << ',' << l << ',' << fmt_num(db.w_grid[m]) << ','
                       << fmt_num(db.values[m]) << '\n';
            }
        write_file(base / "fig9_mixed_pdf.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "k,l,W,logratio\n";
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < L; ++l)
                for (const RatioPoint& pt : r.points_mismatch[static_cast<size_t>(k * L + l)])
                    os << k << ',' << l << ',' << fmt_num(pt.w) << ',' << fmt_num(pt.logratio)
                       << '\n';
        write_file(base / "fig10_mismatch_ratio.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "direction,W,density\n";
        for (size_t m = 0; m < r.pdf_work_fwd.w_grid.size(); ++m)
            os << "forward," << fmt_num(r.pdf_work_fwd.w_grid[m]) << ','
               << fmt_num(r.pdf_work_fwd.values[m]) << '\n';
        for (size_t m = 0; m < r.pdf_work_bwd.w_grid.size(); ++m)
            os << "backward," << fmt_num(r.pdf_work_bwd.w_grid[m]) << ','
               << fmt_num(r.pdf_work_bwd.values[m]) << '\n';
        write_file(base / "fig11_work_pdfs.csv", os.str());
    }
    {
        const HyperplaneFit& hp = r.report.hyperplane;
        std::ostringstream os;
        os << "W,dF,I,logratio,fitted\n";
        for (const RatioPoint& pt : r.points_joint) {
            double fitted = hp.c0;
            if (hp.w_active) fitted += hp.c_w * pt.w;
            if (hp.df_active) fitted += hp.c_df * pt.df;
            if (hp.i_active) fitted += hp.c_i * pt.i;
            os << fmt_num(pt.w) << ',' << fmt_num(pt.df) << ',' << fmt_num(pt.i) << ','
               << fmt_num(pt.logratio) << ',' << fmt_num(fitted) << '\n';
        }
        write_file(base / "fig12_hyperplane.csv", os.str());
    }
}

int exit_code_for(const PipelineResult& r) { return r.exit_code; }

} // namespace qdfr
