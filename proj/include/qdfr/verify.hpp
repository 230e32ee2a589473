// Ratio points from paired forward/backward atoms, line and hyperplane
// least-squares fits, and the consistency verdict assembled from them.
#ifndef QDFR_VERIFY_HPP
#define QDFR_VERIFY_HPP

#include <cmath>
#include <string>
#include <vector>

#include "qdfr/oracle.hpp"

namespace qdfr {

// One paired atom: coordinates of the forward atom and the log weight ratio
// ln(weight_F / weight_B). Only pairs with both weights above the floor
// become points.
struct RatioPoint {
    double w = 0.0;
    double df = 0.0;
    double i = 0.0;
    double logratio = 0.0;
    int k = -1;
    int l = -1;
};

std::vector<RatioPoint> ratio_points(const AtomPDF& fwd, const AtomPDF& bwd);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double zero_crossing = 0.0; // -intercept/slope
    double residual_max = 0.0;
    int n_points = 0;
};

// Ordinary least squares of logratio against w. Throws DegeneratePoints
// for fewer than two distinct abscissas.
LineFit fit_line(const std::vector<RatioPoint>& points);

// i_hat = beta_hat * (deltaF_hat - zero_crossing).
double extract_information(double zero_crossing, double beta_hat, double deltaF_hat);

enum class HyperplaneModel { full3, two_var_intercept, one_var_intercept };

// Least-squares plane z = c_w W + c_df dF + c_i I. The full model carries no
// intercept; when a column is constant the model drops it, adds an intercept
// and records which variables stayed active. Coefficients of dropped
// variables are NaN.
struct HyperplaneFit {
    HyperplaneModel model = HyperplaneModel::full3;
    double c_w = std::nan("");
    double c_df = std::nan("");
    double c_i = std::nan("");
    double c0 = 0.0; // intercept, 0 in the full model
    bool w_active = false;
    bool df_active = false;
    bool i_active = false;
    double residual_max = 0.0;
};

// Strict fit: all three columns must vary and the normal equations must be
// well conditioned, otherwise RankDeficient.
HyperplaneFit hyperplane_fit(const std::vector<RatioPoint>& points);

// Fallback ladder: full 3-variable model, then two variables plus intercept,
// then one variable plus intercept, dropping constant columns in order.
HyperplaneFit hyperplane_fit_ladder(const std::vector<RatioPoint>& points);

struct NamedEstimate {
    std::string name;
    double value = 0.0;
};

struct FitReport {
    std::vector<NamedEstimate> beta_hats; // one per fit that yields a slope
    std::vector<double> deltaF_hat;       // per branch k
    std::vector<std::vector<double>> i_hat; // [k][l]
    HyperplaneFit hyperplane;
    double residual_max = 0.0;
    double beta_ref = 0.0;
    double tol_i = 0.0;
    double tol_beta = 0.0;
    // Per-coefficient checks; each is vacuously true when its column was
    // dropped by the fallback ladder.
    bool verdict_ci = false;   // |c_i - 1| <= tol_i
    bool verdict_cw = false;   // |c_w - beta_ref| <= tol_beta * beta_ref
    bool verdict_cdf = false;  // |c_df + beta_ref| <= tol_beta * beta_ref
    bool verdict = false;      // conjunction of the applicable checks
};

// Assemble the verdict from the hyperplane fit and the side-by-side slope
// estimates. The c_df check only applies when the dF column was active.
FitReport consistency_report(const HyperplaneFit& hp, const std::vector<NamedEstimate>& beta_hats,
                             const std::vector<double>& deltaF_hat,
                             const std::vector<std::vector<double>>& i_hat, double beta_ref,
                             double tol_i, double tol_beta);

// Ratio points as CSV, columns W,dF,I,logratio,k,l.
std::string ratio_points_to_csv(const std::vector<RatioPoint>& points);

} // namespace qdfr

#endif
