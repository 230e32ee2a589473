#include "qdfr/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace qdfr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kMaxGridSize = 1 << 22;
} // namespace

std::vector<double> UGrid::points() const {
    std::vector<double> u(n);
    for (int j = 0; j < n; ++j) u[j] = -u_max + j * du;
    return u;
}

cplx SampledCharFn::at_zero() const {
    return samples.at(static_cast<size_t>(grid.n / 2));
}

UGrid plan_ugrid(double w_max, double gamma, double margin) {
    if (!(w_max > 0.0)) throw InfeasibleGrid("w_max must be positive");
    if (!(gamma > 0.0)) throw InfeasibleGrid("gamma must be positive");
    if (margin < 0.0) throw InfeasibleGrid("margin must be nonnegative");

    // Anti-aliasing bound on the spacing, then the smallest power-of-two n
    // that satisfies the resolution bound n*du >= 8 pi / gamma.
    const double du = (kTwoPi / 2.0) / (w_max * (1.0 + margin));
    const double n_needed = 4.0 * kTwoPi / (gamma * du);
    int n = 2;
    while (n < n_needed) {
        n *= 2;
        if (n > kMaxGridSize)
            throw InfeasibleGrid("grid would need more than 2^22 points");
    }
    UGrid g;
    g.n = n;
    g.du = du;
    g.u_max = 0.5 * n * du;
    return g;
}

SampledCharFn sample_chi(const std::function<cplx(double)>& source, const UGrid& grid, int k,
                         int l, CharFnKind kind) {
    SampledCharFn out;
    out.grid = grid;
    out.k = k;
    out.l = l;
    out.kind = kind;
    out.samples.reserve(grid.n);
    for (double u : grid.points()) out.samples.push_back(source(u));
    return out;
}

SampledCharFn sample_chi_atoms(const AtomPDF& pdf, const UGrid& grid, int k, int l,
                               CharFnKind kind) {
    return sample_chi(
        [&pdf](double u) {
            cplx s(0.0, 0.0);
            for (const Atom& a : pdf.atoms) s += a.weight * std::exp(cplx(0.0, u * a.w));
            return s;
        },
        grid, k, l, kind);
}

double BroadenedPDF::eval(double w) const {
    cplx s(0.0, 0.0);
    for (size_t j = 0; j < u_points.size(); ++j)
        s += windowed_samples[j] * std::exp(cplx(0.0, -u_points[j] * w));
    return s.real();
}

double BroadenedPDF::trapezoid_integral() const {
    if (w_grid.size() < 2) return 0.0;
    const double dw = w_grid[1] - w_grid[0];
    double s = 0.0;
    for (size_t i = 0; i + 1 < w_grid.size(); ++i) s += 0.5 * (values[i] + values[i + 1]);
    return s * dw;
}

BroadenedPDF reconstruct_pdf(const SampledCharFn& chi, double gamma,
                             const AtomPDF* exact_source) {
    if (gamma < 0.0) throw InfeasibleGrid("gamma must be nonnegative");
    if (gamma == 0.0) {
        // Zero width carries the delta atoms through untouched.
        if (exact_source == nullptr)
            throw GridTooCoarse("zero broadening needs the exact atom source");
        BroadenedPDF out;
        out.gamma = 0.0;
        out.exact = true;
        out.exact_atoms = exact_source->atoms;
        return out;
    }
    const UGrid& g = chi.grid;
    if (g.n < 2 || static_cast<int>(chi.samples.size()) != g.n)
        throw GridMismatch("sample count differs from grid size");
    if (kTwoPi / (g.n * g.du) > gamma / 4.0 + 1e-15)
        throw GridTooCoarse("grid resolution exceeds gamma/4");

    BroadenedPDF out;
    out.gamma = gamma;
    out.u_points = g.points();
    out.windowed_samples.resize(g.n);
    const double norm = g.du / kTwoPi;
    for (int j = 0; j < g.n; ++j)
        out.windowed_samples[j] =
            chi.samples[j] * std::exp(-gamma * std::abs(out.u_points[j])) * norm;

    // One full period of the conjugate domain, half-open.
    const double w_span = kTwoPi / (2.0 * g.du);
    const double dw = kTwoPi / (g.n * g.du);
    out.w_grid.resize(g.n);
    out.values.resize(g.n);
    for (int m = 0; m < g.n; ++m) {
        out.w_grid[m] = -w_span + m * dw;
        out.values[m] = out.eval(out.w_grid[m]);
    }
    return out;
}

namespace {

void check_separation(const std::vector<double>& locs, double gamma) {
    for (size_t i = 0; i < locs.size(); ++i)
        for (size_t j = i + 1; j < locs.size(); ++j)
            if (std::abs(locs[i] - locs[j]) < 6.0 * gamma)
                throw OverlappingPeaks("peaks closer than 6*gamma cannot be resolved");
}

} // namespace

std::vector<Atom> extract_atoms(const BroadenedPDF& pdf,
                                const std::optional<std::vector<double>>& expected_locations) {
    if (pdf.exact) return pdf.exact_atoms;
    if (pdf.gamma <= 0.0) throw GridTooCoarse("broadened density has no width");

    std::vector<double> locs;
    if (expected_locations.has_value()) {
        locs = *expected_locations;
    } else {
        // Local maxima above a relative floor, refined by the vertex of the
        // parabola through the three top samples.
        double vmax = 0.0;
        for (double v : pdf.values) vmax = std::max(vmax, v);
        const double floor_v = 1e-3 * vmax;
        const double dw = pdf.w_grid[1] - pdf.w_grid[0];
        for (size_t m = 1; m + 1 < pdf.values.size(); ++m) {
            const double ym = pdf.values[m - 1], y0 = pdf.values[m], yp = pdf.values[m + 1];
            if (y0 < floor_v || y0 < ym || y0 < yp) continue;
            if (y0 == ym && y0 == yp) continue; // flat stretch, not a peak
            const double denom = ym - 2.0 * y0 + yp;
            const double shift = (denom < 0.0) ? 0.5 * (ym - yp) / denom : 0.0;
            locs.push_back(pdf.w_grid[m] + shift * dw);
        }
    }
    check_separation(locs, pdf.gamma);

    std::vector<Atom> atoms;
    for (double w : locs) {
        Atom a;
        a.w = w;
        a.weight = kTwoPi / 2.0 * pdf.gamma * pdf.eval(w); // pi * gamma * height
        a.labels = {-1, -1, -1, -1};
        atoms.push_back(a);
    }
    return atoms;
}

} // namespace qdfr
