// Batch orchestration: load a run configuration, evaluate the oracle and
// circuit paths, reconstruct PDFs, verify the fluctuation relations through
// both estimation pathways, and emit plot-ready CSV files plus a versioned
// JSON report.
#ifndef QDFR_PIPELINE_HPP
#define QDFR_PIPELINE_HPP

#include <map>
#include <string>
#include <vector>

#include "qdfr/circuits.hpp"
#include "qdfr/verify.hpp"

namespace qdfr {

enum class RunMode { oracle, circuits, full };

struct RunConfig {
    FeedbackProtocol protocol;
    double gamma = 0.05;       // 0 switches verification to exact atoms
    double grid_margin = 0.25;
    double tol_i = 0.02;
    double tol_beta = 0.02;
    std::string outdir = ".";
    RunMode mode = RunMode::full;
};

// Parses the JSON run configuration (see README for the schema). Throws
// ConfigInvalid naming the offending field.
RunConfig load_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

// Everything a run produces, kept in memory so the CLI and tests can write
// or inspect artifacts selectively.
struct PipelineResult {
    RunConfig config;
    BackwardProtocol backward;

    AtomPDF joint_fwd; // whole-process joint PDFs
    AtomPDF joint_bwd;
    std::vector<AtomPDF> fwd_slices;          // per (k,l), index k*L+l
    std::vector<AtomPDF> bwd_slices;          // per (k,l), index k*L+l
    std::vector<AtomPDF> wcm_fwd, wcm_bwd;    // per k

    UGrid grid;
    std::vector<SampledCharFn> chi_fwd;       // per (k,l)
    std::vector<SampledCharFn> chi_fwd_wcm;   // per k
    std::vector<SampledCharFn> chi_bwd;       // per (l,k), index k*L+l
    std::vector<SampledCharFn> chi_bwd_wcm;   // per k
    std::vector<std::vector<double>> joint_probs; // p(k,l) measured

    double plot_gamma = 0.0;                  // broadening used for curves
    std::vector<BroadenedPDF> pdf_fwd;        // per (k,l)
    std::vector<BroadenedPDF> pdf_bwd;        // per (l,k)
    BroadenedPDF pdf_work_fwd, pdf_work_bwd;  // whole-process work PDFs

    std::vector<RatioPoint> points_joint;
    std::vector<std::vector<RatioPoint>> points_wcm;      // per k
    std::vector<std::vector<RatioPoint>> points_mismatch; // per (k,l)

    FitReport report;
    // Pathway estimates: "blue" takes dF from the ideal-controller fits and
    // then information from the mismatch fits; "red" takes information from
    // the measured joint probabilities and then dF from the mismatch fits.
    std::vector<double> blue_deltaF, red_deltaF;
    std::vector<std::vector<double>> blue_i, red_i;

    int exit_code = 0;
    std::string report_json;
};

// Runs the full pipeline in memory. Does not touch the filesystem.
PipelineResult run_pipeline(const RunConfig& config);

// Writes chi_*.csv, pdf_*.csv, ratio_*.csv and report.json under outdir.
void write_artifacts(const PipelineResult& r, const std::string& outdir);

// Writes the figure-equivalent CSV files (fig8_wcm_ratio.csv,
// fig9_mixed_pdf.csv, fig10_mismatch_ratio.csv, fig11_work_pdfs.csv,
// fig12_hyperplane.csv) from a completed result. Throws MissingArtifact
// when a needed piece is absent.
void emit_plot_data(const PipelineResult& r, const std::string& outdir);

// Exit-code contract: 0 verdict true, 1 verdict false, 2 validation error,
// 3 numerical failure.
int exit_code_for(const PipelineResult& r);

} // namespace qdfr

#endif
