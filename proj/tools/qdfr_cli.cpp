// Command-line workbench around the pipeline: enumerate exact atom PDFs,
// sample characteristic functions, reconstruct broadened densities, verify
// the fluctuation relations, or run everything and emit plot data.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qdfr/pipeline.hpp"

namespace {

using namespace qdfr;

// 0 verdict true, 1 verdict false, 2 validation error, 3 numerical failure.
int classify(const Error& e) {
    if (dynamic_cast<const ConfigInvalid*>(&e) || dynamic_cast<const ProtocolInvalid*>(&e) ||
        dynamic_cast<const NotHermitian*>(&e) || dynamic_cast<const DimensionMismatch*>(&e) ||
        dynamic_cast<const BetaNonpositive*>(&e) || dynamic_cast<const DegenerateSpectrum*>(&e) ||
        dynamic_cast<const IndexOutOfRange*>(&e) ||
        dynamic_cast<const IncompleteProjectors*>(&e) ||
        dynamic_cast<const MissingArtifact*>(&e))
        return 2;
    return 3;
}

struct CommonArgs {
    std::string config_path;
    double gamma = -1.0; // negative means "keep the config value"
    std::string outdir;
    std::string mode;
};

void add_common(CLI::App* sub, CommonArgs& args, bool with_mode) {
    sub->add_option("--config", args.config_path, "run configuration JSON")->required();
    sub->add_option("--gamma", args.gamma, "broadening width (overrides config)");
    sub->add_option("--outdir", args.outdir, "output directory (overrides config)");
    if (with_mode)
        sub->add_option("--mode", args.mode, "oracle, circuits or full (overrides config)")
            ->check(CLI::IsMember({"oracle", "circuits", "full"}));
}

RunConfig make_config(const CommonArgs& args) {
    RunConfig cfg = load_config_file(args.config_path);
    if (args.gamma >= 0.0) cfg.gamma = args.gamma;
    if (!args.outdir.empty()) cfg.outdir = args.outdir;
    if (!args.mode.empty()) {
        if (args.mode == "oracle") cfg.mode = RunMode::oracle;
        else if (args.mode == "circuits") cfg.mode = RunMode::circuits;
        else cfg.mode = RunMode::full;
    }
    return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw MissingArtifact("cannot open " + path.string() + " for writing");
    os << text;
}

int cmd_oracle(const CommonArgs& args) {
    RunConfig cfg = make_config(args);
    cfg.mode = RunMode::oracle;
    const FeedbackProtocol& p = cfg.protocol;
    p.validate();

    int n_qubits = 0;
    for (int d = p.dim(); d > 1; d /= 2) {
        if (d % 2 != 0) throw ProtocolInvalid("time reversal needs a register of qubits");
        ++n_qubits;
    }
    const BackwardProtocol b = build_backward(p, TimeReversalOp::qubits(n_qubits));
    const auto [jf, jb] = joint_pdfs(p, b);

    std::filesystem::create_directories(cfg.outdir);
    const std::filesystem::path base(cfg.outdir);
    write_text(base / "atoms_joint_fwd.csv", atoms_to_csv(jf));
    write_text(base / "atoms_joint_bwd.csv", atoms_to_csv(jb));
    for (int k = 0; k < p.n_branches(); ++k) {
        const auto [wf, wb] = wcm_mixed_work_pdfs(p, b, k);
        write_text(base / ("atoms_wcm_fwd_k" + std::to_string(k) + ".csv"), atoms_to_csv(wf));
        write_text(base / ("atoms_wcm_bwd_k" + std::to_string(k) + ".csv"), atoms_to_csv(wb));
    }

    const QdfrCheck check = qdfr_atom_check(jf, jb, p.beta);
    std::printf("atoms: %zu forward, %zu backward; max ratio deviation %.3e\n", jf.atoms.size(),
                jb.atoms.size(), check.max_rel_dev);
    std::printf("artifacts written to %s\n", cfg.outdir.c_str());
    return 0;
}

int cmd_chi(const CommonArgs& args) {
    RunConfig cfg = make_config(args);
    const PipelineResult r = run_pipeline(cfg);
    std::filesystem::create_directories(cfg.outdir);
    const std::filesystem::path base(cfg.outdir);
    for (const SampledCharFn& c : r.chi_fwd)
        write_text(base / ("chi_fwd_k" + std::to_string(c.k) + "_l" + std::to_string(c.l) +
                           ".csv"),
                   chi_to_csv(c));
    for (const SampledCharFn& c : r.chi_bwd)
        write_text(base / ("chi_bwd_k" + std::to_string(c.k) + "_l" + std::to_string(c.l) +
                           ".csv"),
                   chi_to_csv(c));
    for (const SampledCharFn& c : r.chi_fwd_wcm)
        write_text(base / ("chi_fwd_wcm_k" + std::to_string(c.k) + ".csv"), chi_to_csv(c));
    for (const SampledCharFn& c : r.chi_bwd_wcm)
        write_text(base / ("chi_bwd_wcm_k" + std::to_string(c.k) + ".csv"), chi_to_csv(c));
    std::printf("sampled %d characteristic functions on %d grid points to %s\n",
                static_cast<int>(r.chi_fwd.size() + r.chi_bwd.size() + r.chi_fwd_wcm.size() +
                                 r.chi_bwd_wcm.size()),
                r.grid.n, cfg.outdir.c_str());
    return 0;
}

int cmd_reconstruct(const CommonArgs& args) {
    RunConfig cfg = make_config(args);
    const PipelineResult r = run_pipeline(cfg);
    std::filesystem::create_directories(cfg.outdir);
    const std::filesystem::path base(cfg.outdir);
    const int L = cfg.protocol.n_outcomes();
    for (int k = 0; k < cfg.protocol.n_branches(); ++k)
        for (int l = 0; l < L; ++l) {
            const size_t idx = static_cast<size_t>(k * L + l);
            const std::string kl = "_k" + std::to_string(k) + "_l" + std::to_string(l);
            std::string pf = "W,density,k,l,gamma\n";
            const BroadenedPDF& d = r.pdf_fwd[idx];
            char buf[128];
            for (size_t m = 0; m < d.w_grid.size(); ++m) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d,%.17g\n", d.w_grid[m],
                              d.values[m], k, l, d.gamma);
                pf += buf;
            }
            write_text(base / ("pdf_fwd" + kl + ".csv"), pf);
        }
    std::printf("reconstructed %zu densities at gamma %.4g to %s\n", r.pdf_fwd.size(),
                r.plot_gamma, cfg.outdir.c_str());
    return 0;
}

int cmd_verify(const CommonArgs& args) {
    RunConfig cfg = make_config(args);
    const PipelineResult r = run_pipeline(cfg);
    const FitReport& rep = r.report;
    for (const NamedEstimate& e : rep.beta_hats)
        std::printf("beta_hat[%s] = %.12g\n", e.name.c_str(), e.value);
    const HyperplaneFit& hp = rep.hyperplane;
    std::printf("hyperplane: c_w %.12g, c_df %.12g, c_i %.12g, c0 %.12g, residual %.3e\n",
                hp.c_w, hp.c_df, hp.c_i, hp.c0, hp.residual_max);
    std::printf("checks: c_i %s, c_w %s, c_df %s\n", rep.verdict_ci ? "pass" : "fail",
                rep.verdict_cw ? "pass" : "fail", rep.verdict_cdf ? "pass" : "fail");
    std::printf("verdict: %s\n", rep.verdict ? "true" : "false");
    if (!args.outdir.empty()) {
        std::filesystem::create_directories(cfg.outdir);
        write_text(std::filesystem::path(cfg.outdir) / "report.json", r.report_json);
    }
    return r.exit_code;
}

int cmd_pipeline(const CommonArgs& args) {
    RunConfig cfg = make_config(args);
    const PipelineResult r = run_pipeline(cfg);
    write_artifacts(r, cfg.outdir);
    emit_plot_data(r, cfg.outdir);
    std::printf("verdict: %s (report in %s/report.json)\n", r.report.verdict ? "true" : "false",
                cfg.outdir.c_str());
    return r.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedback-protocol work statistics workbench"};
    app.require_subcommand(1);

    CommonArgs oracle_args, chi_args, rec_args, verify_args, pipe_args;
    add_common(app.add_subcommand("oracle", "enumerate exact atom PDFs and check the ratios"),
               oracle_args, false);
    add_common(app.add_subcommand("chi", "sample characteristic functions to CSV"), chi_args,
               true);
    add_common(app.add_subcommand("reconstruct", "broadened work densities to CSV"), rec_args,
               true);
    add_common(app.add_subcommand("verify", "run fits and print the verdict"), verify_args, true);
    add_common(app.add_subcommand("pipeline", "full run with artifacts and plot data"), pipe_args,
               true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("oracle")) return cmd_oracle(oracle_args);
        if (app.got_subcommand("chi")) return cmd_chi(chi_args);
        if (app.got_subcommand("reconstruct")) return cmd_reconstruct(rec_args);
        if (app.got_subcommand("verify")) return cmd_verify(verify_args);
        if (app.got_subcommand("pipeline")) return cmd_pipeline(pipe_args);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return classify(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}
