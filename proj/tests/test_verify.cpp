#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "analytic_twolevel.hpp"
#include "qdfr/verify.hpp"

using namespace qdfr;

namespace {

std::pair<AtomPDF, AtomPDF> bundled_joint() {
    const auto p = twolevel::make_protocol();
    return joint_pdfs(p, build_backward(p, TimeReversalOp::qubit()));
}

// Exact points on z = c_w W + c_df dF + c_i I with all columns varying.
std::vector<RatioPoint> synthetic_points(double c_w, double c_df, double c_i) {
    std::vector<RatioPoint> pts;
    const double ws[] = {-2.0, -0.5, 1.0, 3.0, 4.0};
    const double dfs[] = {-0.3, 0.4, -0.8, 0.1, 0.6};
    const double is[] = {0.2, -0.5, 0.7, 0.0, -0.1};
    for (int j = 0; j < 5; ++j) {
        RatioPoint p;
        p.w = ws[j];
        p.df = dfs[j];
        p.i = is[j];
        p.logratio = c_w * p.w + c_df * p.df + c_i * p.i;
        pts.push_back(p);
    }
    return pts;
}

} // namespace

TEST_CASE("paired atoms produce one ratio point each") {
    const auto [jf, jb] = bundled_joint();
    const auto pts = ratio_points(jf, jb);
    REQUIRE(pts.size() == 8);
    for (const RatioPoint& p : pts) {
        CHECK(p.logratio ==
              doctest::Approx(0.2 * (p.w - p.df) + p.i).epsilon(1e-12));
        CHECK(p.k >= 0);
        CHECK(p.l >= 0);
    }
}

TEST_CASE("a forward atom without a partner is an error") {
    auto [jf, jb] = bundled_joint();
    jb.atoms.erase(jb.atoms.begin());
    CHECK_THROWS_AS(ratio_points(jf, jb), UnpairedAtom);
}

TEST_CASE("line fits recover slope and zero crossing") {
    const auto p = twolevel::make_protocol();
    const auto b = build_backward(p, TimeReversalOp::qubit());

    SUBCASE("ideal-controller branch") {
        const auto [wf, wb] = wcm_mixed_work_pdfs(p, b, 0);
        const LineFit fit = fit_line(ratio_points(wf, wb));
        CHECK(fit.n_points == 2);
        CHECK(fit.slope == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(fit.zero_crossing == doctest::Approx(twolevel::kDF0).epsilon(1e-12));
        CHECK(fit.residual_max < 1e-12);
    }
    SUBCASE("mismatch history (0,0)") {
        const auto fwd = forward_mixed_work_pdf(p, 0, 0);
        const auto bwd = backward_mixed_work_pdf(b, 0, 0);
        const LineFit fit = fit_line(ratio_points(fwd, bwd));
        CHECK(fit.slope == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(fit.zero_crossing == doctest::Approx(twolevel::kZeroCross00).epsilon(1e-12));
        // the zero crossing recovers the information density
        CHECK(extract_information(fit.zero_crossing, fit.slope, twolevel::kDF0) ==
              doctest::Approx(twolevel::kI00).epsilon(1e-11));
    }
}

TEST_CASE("degenerate abscissas are rejected") {
    std::vector<RatioPoint> pts;
    CHECK_THROWS_AS(fit_line(pts), DegeneratePoints);
    RatioPoint p;
    p.w = 1.0;
    p.logratio = 0.3;
    pts.push_back(p);
    CHECK_THROWS_AS(fit_line(pts), DegeneratePoints);
    pts.push_back(p);
    CHECK_THROWS_AS(fit_line(pts), DegeneratePoints);
}

TEST_CASE("hyperplane fit recovers exact coefficients") {
    const auto pts = synthetic_points(0.2, -0.2, 1.0);
    const HyperplaneFit hp = hyperplane_fit(pts);
    CHECK(hp.model == HyperplaneModel::full3);
    CHECK(hp.c_w == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(hp.c_df == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(hp.c_i == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hp.c0 == 0.0);
    CHECK(hp.residual_max < 1e-12);
    CHECK(hp.w_active);
    CHECK(hp.df_active);
    CHECK(hp.i_active);
}

TEST_CASE("hyperplane fit on the bundled protocol") {
    const auto [jf, jb] = bundled_joint();
    const HyperplaneFit hp = hyperplane_fit(ratio_points(jf, jb));
    CHECK(hp.c_w == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(hp.c_df == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(hp.c_i == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hp.residual_max < 1e-12);
}

TEST_CASE("constant columns force the fallback ladder") {
    SUBCASE("constant dF drops one variable") {
        auto pts = synthetic_points(0.2, -0.2, 1.0);
        for (auto& p : pts) {
            p.df = -0.5;
            p.logratio = 0.2 * p.w + 0.1 + p.i; // 0.1 = -c_df * dF
        }
        CHECK_THROWS_AS(hyperplane_fit(pts), RankDeficient);
        const HyperplaneFit hp = hyperplane_fit_ladder(pts);
        CHECK(hp.model == HyperplaneModel::two_var_intercept);
        CHECK(!hp.df_active);
        CHECK(std::isnan(hp.c_df));
        CHECK(hp.c_w == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(hp.c_i == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(hp.c0 == doctest::Approx(0.1).epsilon(1e-11));
    }
    SUBCASE("constant dF and I leave a single regressor") {
        auto pts = synthetic_points(0.2, 0.0, 0.0);
        for (auto& p : pts) {
            p.df = 0.4;
            p.i = 0.0;
            p.logratio = 0.2 * p.w - 0.08;
        }
        const HyperplaneFit hp = hyperplane_fit_ladder(pts);
        CHECK(hp.model == HyperplaneModel::one_var_intercept);
        CHECK(hp.w_active);
        CHECK(!hp.df_active);
        CHECK(!hp.i_active);
        CHECK(hp.c_w == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(hp.c0 == doctest::Approx(-0.08).epsilon(1e-11));
    }
    SUBCASE("no varying column at all") {
        auto pts = synthetic_points(0.2, -0.2, 1.0);
        for (auto& p : pts) {
            p.w = 1.0;
            p.df = 0.2;
            p.i = 0.3;
        }
        CHECK_THROWS_AS(hyperplane_fit_ladder(pts), RankDeficient);
    }
}

TEST_CASE("consistency verdicts") {
    const auto [jf, jb] = bundled_joint();
    const auto pts = ratio_points(jf, jb);
    const HyperplaneFit hp = hyperplane_fit(pts);
    const std::vector<NamedEstimate> betas = {{"joint", hp.c_w}};
    const std::vector<double> df = {twolevel::kDF0, twolevel::kDF1};
    const std::vector<std::vector<double>> info = {{twolevel::kI00, twolevel::kI01},
                                                   {twolevel::kI10, twolevel::kI11}};

    SUBCASE("exact fit passes tight tolerances") {
        const FitReport rep = consistency_report(hp, betas, df, info, 0.2, 1e-9, 1e-9);
        CHECK(rep.verdict_ci);
        CHECK(rep.verdict_cw);
        CHECK(rep.verdict_cdf);
        CHECK(rep.verdict);
        CHECK(rep.beta_ref == 0.2);
    }
    SUBCASE("an off coefficient flips the verdict") {
        HyperplaneFit bad = hp;
        bad.c_i = 1.01;
        const FitReport rep = consistency_report(bad, betas, df, info, 0.2, 1e-3, 1e-3);
        CHECK(!rep.verdict_ci);
        CHECK(!rep.verdict);
    }
    SUBCASE("dropped columns are vacuous") {
        HyperplaneFit dropped = hp;
        dropped.i_active = false;
        dropped.c_i = std::nan("");
        const FitReport rep = consistency_report(dropped, betas, df, info, 0.2, 1e-9, 1e-9);
        CHECK(rep.verdict_ci);
        CHECK(rep.verdict);
    }
    SUBCASE("nonpositive reference temperature") {
        CHECK_THROWS_AS(consistency_report(hp, betas, df, info, 0.0, 1e-9, 1e-9),
                        BetaNonpositive);
    }
}

TEST_CASE("a tampered weight is caught by the fit") {
    auto [jf, jb] = bundled_joint();
    jb.atoms[3].weight *= 1.1;
    const HyperplaneFit hp = hyperplane_fit(ratio_points(jf, jb));
    const FitReport rep = consistency_report(hp, {}, {}, {}, 0.2, 1e-6, 1e-6);
    CHECK(!rep.verdict);
}

TEST_CASE("ratio point export") {
    const auto [jf, jb] = bundled_joint();
    const auto pts = ratio_points(jf, jb);
    const std::string csv = ratio_points_to_csv(pts);
    CHECK(csv.rfind("W,dF,I,logratio,k,l\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}
