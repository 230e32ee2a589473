// Conjugate-variable grids, characteristic-function sampling, windowed
// inverse Fourier reconstruction of broadened PDFs, and peak-weight
// extraction.
#ifndef QDFR_SPECTRAL_HPP
#define QDFR_SPECTRAL_HPP

#include <functional>
#include <optional>
#include <vector>

#include "qdfr/oracle.hpp"

namespace qdfr {

// Symmetric grid u_j = -u_max + j*du, j = 0..n-1 (u_{n/2} = 0, +u_max
// excluded so the points tile one Fourier period).
struct UGrid {
    double u_max = 0.0;
    int n = 0;
    double du = 0.0;

    std::vector<double> points() const;
};

enum class CharFnKind { forward, backward, forward_wcm, backward_wcm };

struct SampledCharFn {
    UGrid grid;
    std::vector<cplx> samples;
    int k = -1;
    int l = -1;
    CharFnKind kind = CharFnKind::forward;

    cplx at_zero() const; // sample at u = 0
};

// Real-line density on a uniform w grid, plus the windowed source samples
// so the density can also be evaluated off-grid.
struct BroadenedPDF {
    std::vector<double> w_grid;
    std::vector<double> values;
    double gamma = 0.0;
    bool exact = false;            // gamma = 0: carries atoms, not a curve
    std::vector<Atom> exact_atoms; // only when exact

    std::vector<double> u_points;       // source grid (empty when exact)
    std::vector<cplx> windowed_samples; // chi(u_j) e^{-gamma|u_j|} du/(2 pi)

    double eval(double w) const; // Re sum_j windowed_samples[j] e^{-i u_j w}
    double trapezoid_integral() const;
};

// Smallest power-of-two grid satisfying the anti-aliasing bound
// du <= pi / (w_max (1+margin)) and the resolution bound n*du >= 8 pi/gamma.
UGrid plan_ugrid(double w_max, double gamma, double margin);

// Sample an arbitrary source (oracle closed form or a circuit runner) on
// the grid.
SampledCharFn sample_chi(const std::function<cplx(double)>& source, const UGrid& grid, int k,
                         int l, CharFnKind kind);

// Direct sum over atoms: chi(u) = sum_a weight_a e^{i u W_a}.
SampledCharFn sample_chi_atoms(const AtomPDF& pdf, const UGrid& grid, int k, int l,
                               CharFnKind kind);

// Multiply by the window e^{-gamma|u|} and invert the transform on a w grid
// spanning one period. gamma = 0 requires the exact atom source and returns
// it unchanged (the broadening path would be a no-op delta comb).
BroadenedPDF reconstruct_pdf(const SampledCharFn& chi, double gamma,
                             const AtomPDF* exact_source = nullptr);

// Peak weights: weight = pi * gamma * height. With expected_locations the
// density is evaluated exactly there; otherwise local maxima are located by
// a three-point parabolic refinement. Peaks closer than 6 gamma raise
// OverlappingPeaks. Labels of returned atoms are unset (-1) in search mode.
std::vector<Atom> extract_atoms(const BroadenedPDF& pdf,
                                const std::optional<std::vector<double>>& expected_locations =
                                    std::nullopt);

} // namespace qdfr

#endif
