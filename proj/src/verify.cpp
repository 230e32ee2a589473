#include "qdfr/verify.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <sstream>

namespace qdfr {

namespace {

constexpr double kColumnSpreadTol = 1e-9;

bool column_varies(const std::vector<double>& col) {
    double lo = col[0], hi = col[0];
    for (double v : col) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
    return (hi - lo) > kColumnSpreadTol * scale;
}

// Gaussian elimination with partial pivoting on the normal equations.
std::vector<double> solve_normal(std::vector<std::vector<long double>> a,
                                 std::vector<long double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(static_cast<double>(a[r][col])) >
                std::abs(static_cast<double>(a[piv][col])))
                piv = r;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        if (std::abs(static_cast<double>(a[col][col])) < 1e-13)
            throw RankDeficient("normal equations are singular");
        for (int r = col + 1; r < n; ++r) {
            const long double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(static_cast<size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        long double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[static_cast<size_t>(c)];
        x[static_cast<size_t>(r)] = static_cast<double>(s / a[r][r]);
    }
    return x;
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& cols,
                                  const std::vector<double>& z) {
    const size_t nv = cols.size();
    const size_t np = z.size();
    std::vector<std::vector<long double>> a(nv, std::vector<long double>(nv, 0.0L));
    std::vector<long double> b(nv, 0.0L);
    for (size_t p = 0; p < np; ++p) {
        for (size_t r = 0; r < nv; ++r) {
            b[r] += static_cast<long double>(cols[r][p]) * z[p];
            for (size_t c = r; c < nv; ++c)
                a[r][c] += static_cast<long double>(cols[r][p]) * cols[c][p];
        }
    }
    for (size_t r = 0; r < nv; ++r)
        for (size_t c = 0; c < r; ++c) a[r][c] = a[c][r];
    return solve_normal(std::move(a), std::move(b));
}

double plane_residual_max(const std::vector<std::vector<double>>& cols,
                          const std::vector<double>& coef, const std::vector<double>& z) {
    double worst = 0.0;
    for (size_t p = 0; p < z.size(); ++p) {
        double fit = 0.0;
        for (size_t c = 0; c < cols.size(); ++c) fit += coef[c] * cols[c][p];
        worst = std::max(worst, std::abs(fit - z[p]));
    }
    return worst;
}

} // namespace

std::vector<RatioPoint> ratio_points(const AtomPDF& fwd, const AtomPDF& bwd) {
    std::map<std::array<int, 4>, const Atom*> rev;
    for (const Atom& a : bwd.atoms) rev[a.labels] = &a;

    std::vector<RatioPoint> pts;
    for (const Atom& f : fwd.atoms) {
        if (f.weight < kWeightFloor) continue;
        const auto it = rev.find(f.labels);
        if (it == rev.end() || it->second->weight < kWeightFloor)
            throw UnpairedAtom("forward atom has no backward partner above the weight floor");
        RatioPoint p;
        p.w = f.w;
        p.df = f.df;
        p.i = f.i;
        p.logratio = std::log(f.weight / it->second->weight);
        p.k = f.labels[1];
        p.l = f.labels[2];
        pts.push_back(p);
    }
    return pts;
}

LineFit fit_line(const std::vector<RatioPoint>& points) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const RatioPoint& p : points) {
        if (first) {
            lo = hi = p.w;
            first = false;
        }
        lo = std::min(lo, p.w);
        hi = std::max(hi, p.w);
    }
    if (points.size() < 2 || (hi - lo) <= kColumnSpreadTol * std::max({std::abs(lo), std::abs(hi), 1.0}))
        throw DegeneratePoints("line fit needs two distinct work values");

    long double sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (const RatioPoint& p : points) {
        sx += p.w;
        sxx += static_cast<long double>(p.w) * p.w;
        sy += p.logratio;
        sxy += static_cast<long double>(p.w) * p.logratio;
    }
    const long double n = static_cast<long double>(points.size());
    const long double det = n * sxx - sx * sx;
    LineFit fit;
    fit.slope = static_cast<double>((n * sxy - sx * sy) / det);
    fit.intercept = static_cast<double>((sxx * sy - sx * sxy) / det);
    fit.zero_crossing = -fit.intercept / fit.slope;
    fit.n_points = static_cast<int>(points.size());
    for (const RatioPoint& p : points)
        fit.residual_max =
            std::max(fit.residual_max, std::abs(fit.slope * p.w + fit.intercept - p.logratio));
    return fit;
}

double extract_information(double zero_crossing, double beta_hat, double deltaF_hat) {
    return beta_hat * (deltaF_hat - zero_crossing);
}

namespace {

HyperplaneFit fit_with_columns(const std::vector<RatioPoint>& points, bool use_w, bool use_df,
                               bool use_i, bool with_intercept) {
    std::vector<std::vector<double>> cols;
    std::vector<int> which; // 0 w, 1 df, 2 i, 3 intercept
    auto add = [&](bool on, int id, auto getter) {
        if (!on) return;
        std::vector<double> c;
        c.reserve(points.size());
        for (const RatioPoint& p : points) c.push_back(getter(p));
        cols.push_back(std::move(c));
        which.push_back(id);
    };
    add(use_w, 0, [](const RatioPoint& p) { return p.w; });
    add(use_df, 1, [](const RatioPoint& p) { return p.df; });
    add(use_i, 2, [](const RatioPoint& p) { return p.i; });
    if (with_intercept) {
        cols.emplace_back(points.size(), 1.0);
        which.push_back(3);
    }
    if (cols.empty() || points.size() < cols.size())
        throw RankDeficient("not enough points for the requested hyperplane model");

    std::vector<double> z;
    z.reserve(points.size());
    for (const RatioPoint& p : points) z.push_back(p.logratio);

    const std::vector<double> coef = least_squares(cols, z);

    HyperplaneFit fit;
    fit.w_active = use_w;
    fit.df_active = use_df;
    fit.i_active = use_i;
    for (size_t c = 0; c < which.size(); ++c) {
        switch (which[c]) {
        case 0: fit.c_w = coef[c]; break;
        case 1: fit.c_df = coef[c]; break;
        case 2: fit.c_i = coef[c]; break;
        default: fit.c0 = coef[c]; break;
        }
    }
    fit.residual_max = plane_residual_max(cols, coef, z);
    const int active = (use_w ? 1 : 0) + (use_df ? 1 : 0) + (use_i ? 1 : 0);
    fit.model = !with_intercept ? HyperplaneModel::full3
                                : (active == 2 ? HyperplaneModel::two_var_intercept
                                               : HyperplaneModel::one_var_intercept);
    return fit;
}

void split_columns(const std::vector<RatioPoint>& points, bool& w_varies, bool& df_varies,
                   bool& i_varies) {
    std::vector<double> w, df, i;
    for (const RatioPoint& p : points) {
        w.push_back(p.w);
        df.push_back(p.df);
        i.push_back(p.i);
    }
    w_varies = column_varies(w);
    df_varies = column_varies(df);
    i_varies = column_varies(i);
}

} // namespace

HyperplaneFit hyperplane_fit(const std::vector<RatioPoint>& points) {
    if (points.size() < 3) throw RankDeficient("hyperplane fit needs at least three points");
    bool wv, dfv, iv;
    split_columns(points, wv, dfv, iv);
    if (!wv || !dfv || !iv)
        throw RankDeficient("a fit column is constant across the ratio points");
    return fit_with_columns(points, true, true, true, false);
}

HyperplaneFit hyperplane_fit_ladder(const std::vector<RatioPoint>& points) {
    if (points.empty()) throw RankDeficient("no ratio points to fit");
    bool wv, dfv, iv;
    split_columns(points, wv, dfv, iv);
    if (wv && dfv && iv) return fit_with_columns(points, true, true, true, false);
    const int active = (wv ? 1 : 0) + (dfv ? 1 : 0) + (iv ? 1 : 0);
    if (active == 2) return fit_with_columns(points, wv, dfv, iv, true);
    if (active == 1) return fit_with_columns(points, wv, dfv, iv, true);
    throw RankDeficient("all fit columns are constant across the ratio points");
}

FitReport consistency_report(const HyperplaneFit& hp, const std::vector<NamedEstimate>& beta_hats,
                             const std::vector<double>& deltaF_hat,
                             const std::vector<std::vector<double>>& i_hat, double beta_ref,
                             double tol_i, double tol_beta) {
    if (!(beta_ref > 0.0)) throw BetaNonpositive("reference inverse temperature must be positive");
    FitReport rep;
    rep.beta_hats = beta_hats;
    rep.deltaF_hat = deltaF_hat;
    rep.i_hat = i_hat;
    rep.hyperplane = hp;
    rep.residual_max = hp.residual_max;
    rep.beta_ref = beta_ref;
    rep.tol_i = tol_i;
    rep.tol_beta = tol_beta;

    // Checks on dropped columns are vacuous: the fallback models have no
    // coefficient to compare.
    rep.verdict_ci = !hp.i_active || std::abs(hp.c_i - 1.0) <= tol_i;
    rep.verdict_cw = !hp.w_active || std::abs(hp.c_w - beta_ref) <= tol_beta * beta_ref;
    rep.verdict_cdf = !hp.df_active || std::abs(hp.c_df + beta_ref) <= tol_beta * beta_ref;
    rep.verdict = rep.verdict_ci && rep.verdict_cw && rep.verdict_cdf;
    return rep;
}

std::string ratio_points_to_csv(const std::vector<RatioPoint>& points) {
    std::ostringstream os;
    os << "W,dF,I,logratio,k,l\n";
    char buf[192];
    for (const RatioPoint& p : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%d\n", p.w, p.df, p.i,
                      p.logratio, p.k, p.l);
        os << buf;
    }
    return os.str();
}

} // namespace qdfr
