// Closed forms for the bundled two-level protocol, derived by hand and
// frozen at full precision. Everything here is written from the model
// formulas alone so it can stand as an independent reference for the
// library: H0 = -sigma_z (levels -1, +1), diagonal drive, computational
// measurement, controller rotation angle phi, branch k ending in
// -gap_k * sigma_x (levels -gap_k, +gap_k with gap_k in {2, 3}).
#ifndef QDFR_TESTS_ANALYTIC_TWOLEVEL_HPP
#define QDFR_TESTS_ANALYTIC_TWOLEVEL_HPP

#include <cmath>
#include <complex>

#include "qdfr/protocol.hpp"

namespace twolevel {

constexpr double kBeta = 0.2;
constexpr double kPhi = 1.0471975511965977; // pi/3
constexpr double kGap0 = 2.0;               // branch-0 level at +-2
constexpr double kGap1 = 3.0;               // branch-1 level at +-3

// Outcome and branch probabilities. p(l) is thermal because the drive is
// diagonal in the measurement basis; p(k) = sum_l p(k|l) p(l).
constexpr double kPl0 = 0.598687660112452;
constexpr double kPl1 = 0.401312339887548;
constexpr double kPk0 = 0.450656169943774;
constexpr double kPk1 = 0.549343830056226;

// Mismatch channel entries for phi = pi/3.
constexpr double kPkl_diag = 0.25; // p(k=l)
constexpr double kPkl_off = 0.75;  // p(k!=l)

// I(k,l) = ln p(k|l)/p(k), row-major (k,l).
constexpr double kI00 = -0.58924375825642085;
constexpr double kI01 = 0.50936853041168884;
constexpr double kI10 = 0.31134867679954456;
constexpr double kI11 = -0.78726361186856513;

// Branch free-energy differences -(1/beta) ln(Z_k / Z_0).
constexpr double kDF0 = -0.29042706773912551;
constexpr double kDF1 = -0.75133607469039283;

// Forward per-history atom weight (equal for both final levels):
// 0.5 * p(k|l) * p(l).
constexpr double kFwdW00 = 0.0748359575140565;  // atoms at W = -1, 3
constexpr double kFwdW01 = 0.1504921274578305;  // atoms at W = -3, 1
constexpr double kFwdW10 = 0.2245078725421695;  // atoms at W = -2, 4
constexpr double kFwdW11 = 0.0501640424859435;  // atoms at W = -4, 2

// Ideal-controller forward weight: 0.5 * p(l=k).
constexpr double kWcmFwdW0 = 0.299343830056226;
constexpr double kWcmFwdW1 = 0.200656169943774;

// Backward history (l=0, k=0): weights 0.5 * g~_m * p(k).
constexpr double kBwdW00m0 = 0.1554706285119563;  // at W~ = +1
constexpr double kBwdW00m1 = 0.0698574564599307;  // at W~ = -3

// Spot checks of the detailed ratio at history (0,0), atom W = 3.
constexpr double kRatio00W3 = 1.0712665663254058;
constexpr double kZeroCross00 = 2.6557917235429788;

// Whole-process averages.
constexpr double kMeanW = 0.197375320224904;
constexpr double kMeanDF = -0.54362458692514639;
constexpr double kMeanI = 0.12593447343419288;

// The protocol built from library primitives. tau_1 and the branch phase
// drop out of every probability (the drive is diagonal in the measurement
// basis and the feedback unitary is diagonal in the final eigenbasis), so
// both are set to 1.
inline qdfr::FeedbackProtocol make_protocol(double beta = kBeta, double gap0 = kGap0,
                                            double gap1 = kGap1, double phi = kPhi) {
    using namespace qdfr;
    FeedbackProtocol p;
    p.beta = beta;
    p.h0 = -1.0 * pauli_z();
    p.u_drive = phase_exp(p.h0, -1.0);
    p.meas_projectors = {ketbra(2, 0, 0), ketbra(2, 1, 1)};
    p.mismatch = rx_mismatch(phi);
    p.rx_phi = phi;
    p.branches.resize(2);
    p.branches[0].h_final = -gap0 * pauli_x();
    p.branches[0].v_feedback = phase_exp(pauli_x(), -gap0);
    p.branches[1].h_final = -gap1 * pauli_x();
    p.branches[1].v_feedback = phase_exp(pauli_x(), -gap1);
    return p;
}

// Model closed forms of the four characteristic functions. E0_l is the
// initial level of outcome l; the forward final spectrum of branch k is
// +-gap_k.
inline std::complex<double> chi_fwd(int k, int l, double u, double beta = kBeta,
                                    double phi = kPhi) {
    const double gap = k == 0 ? kGap0 : kGap1;
    const double e0l = l == 0 ? -1.0 : 1.0;
    const double pl =
        (l == 0 ? std::exp(beta) : std::exp(-beta)) / (2.0 * std::cosh(beta));
    const double pkl = k == l ? std::cos(phi) * std::cos(phi) : std::sin(phi) * std::sin(phi);
    return pkl * pl * std::exp(std::complex<double>(0.0, -u * e0l)) * std::cos(gap * u);
}

inline std::complex<double> chi_fwd_wcm(int k, double u, double beta = kBeta) {
    const double gap = k == 0 ? kGap0 : kGap1;
    const double e0k = k == 0 ? -1.0 : 1.0;
    const double pl =
        (k == 0 ? std::exp(beta) : std::exp(-beta)) / (2.0 * std::cosh(beta));
    return pl * std::exp(std::complex<double>(0.0, -u * e0k)) * std::cos(gap * u);
}

inline std::complex<double> chi_bwd(int l, int k, double u, double beta = kBeta,
                                    double phi = kPhi) {
    const double gap = k == 0 ? kGap0 : kGap1;
    const double e0l = l == 0 ? -1.0 : 1.0;
    const double pk = k == 0 ? kPk0 : kPk1;
    (void)phi;
    const std::complex<double> osc(std::cos(gap * u), std::tanh(beta * gap) * std::sin(gap * u));
    return 0.5 * pk * std::exp(std::complex<double>(0.0, u * e0l)) * osc;
}

inline std::complex<double> chi_bwd_wcm(int k, double u, double beta = kBeta) {
    const double gap = k == 0 ? kGap0 : kGap1;
    const double e0k = k == 0 ? -1.0 : 1.0;
    const std::complex<double> osc(std::cos(gap * u), std::tanh(beta * gap) * std::sin(gap * u));
    return 0.5 * std::exp(std::complex<double>(0.0, u * e0k)) * osc;
}

} // namespace twolevel

#endif
