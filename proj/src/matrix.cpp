#include "qdfr/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qdfr {

ComplexMatrix::ComplexMatrix(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim)
        throw DimensionMismatch("matrix dimension " + std::to_string(dim) +
                                " outside [1, " + std::to_string(kMaxDim) + "]");
    a_.assign(static_cast<size_t>(dim) * dim, cplx(0.0, 0.0));
}

ComplexMatrix::ComplexMatrix(int dim, std::initializer_list<cplx> entries) : ComplexMatrix(dim) {
    if (static_cast<int>(entries.size()) != dim * dim)
        throw DimensionMismatch("entry count does not match dimension");
    std::copy(entries.begin(), entries.end(), a_.begin());
}

cplx ComplexMatrix::trace() const {
    cplx t(0.0, 0.0);
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const cplx& z : a_) m = std::max(m, std::abs(z));
    return m;
}

ComplexMatrix ComplexMatrix::dagger() const {
    ComplexMatrix r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(i, j) = std::conj((*this)(i, j));
    return r;
}

bool ComplexMatrix::is_hermitian(double tol) const {
    const double scale = std::max(1.0, max_abs());
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j)
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol * scale) return false;
    return true;
}

bool ComplexMatrix::is_unitary(double tol) const {
    const ComplexMatrix p = dagger() * (*this);
    const double scale = std::max(1.0, max_abs());
    return max_abs_diff(p, identity(dim_)) <= tol * scale;
}

bool ComplexMatrix::is_density(double tol) const {
    if (!is_hermitian(tol)) return false;
    if (std::abs(trace() - cplx(1.0, 0.0)) > tol) return false;
    const HermitianEigen e = herm_eigen(*this, std::max(tol, kTolValidate));
    for (double v : e.eigenvalues)
        if (v < -1e-12 - tol) return false;
    return true;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (o.dim_ != dim_) throw DimensionMismatch("operator+= dimensions differ");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (o.dim_ != dim_) throw DimensionMismatch("operator-= dimensions differ");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
    for (cplx& z : a_) z *= s;
    return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("operator* dimensions differ");
    const int n = a.dim();
    ComplexMatrix r(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

ComplexMatrix identity(int dim) {
    ComplexMatrix r(dim);
    for (int i = 0; i < dim; ++i) r(i, i) = 1.0;
    return r;
}

ComplexMatrix zeros(int dim) { return ComplexMatrix(dim); }

ComplexMatrix pauli_x() { return ComplexMatrix(2, {0, 1, 1, 0}); }

ComplexMatrix pauli_y() {
    return ComplexMatrix(2, {0, cplx(0, -1), cplx(0, 1), 0});
}

ComplexMatrix pauli_z() { return ComplexMatrix(2, {1, 0, 0, -1}); }

ComplexMatrix pauli_form(double cx, double cy, double cz, double c0) {
    ComplexMatrix r(2);
    r(0, 0) = cplx(cz + c0, 0);
    r(0, 1) = cplx(cx, -cy);
    r(1, 0) = cplx(cx, cy);
    r(1, 1) = cplx(-cz + c0, 0);
    return r;
}

ComplexMatrix ketbra(int dim, int i, int j) {
    if (i < 0 || i >= dim || j < 0 || j >= dim)
        throw DimensionMismatch("ketbra index outside dimension");
    ComplexMatrix r(dim);
    r(i, j) = 1.0;
    return r;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("max_abs_diff dimensions differ");
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

std::vector<std::vector<int>> HermitianEigen::degenerate_clusters() const {
    std::vector<std::vector<int>> clusters;
    const double scale = 1.0 + (eigenvalues.empty()
                                    ? 0.0
                                    : std::max(std::abs(eigenvalues.front()),
                                               std::abs(eigenvalues.back())));
    for (size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!clusters.empty() &&
            eigenvalues[i] - eigenvalues[clusters.back().back()] <= kTolDegeneracy * scale) {
            clusters.back().push_back(static_cast<int>(i));
        } else {
            clusters.push_back({static_cast<int>(i)});
        }
    }
    return clusters;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const int na = a.dim(), nb = b.dim();
    ComplexMatrix r(na * nb);
    for (int ia = 0; ia < na; ++ia)
        for (int ja = 0; ja < na; ++ja) {
            const cplx f = a(ia, ja);
            if (f == cplx(0.0, 0.0)) continue;
            for (int ib = 0; ib < nb; ++ib)
                for (int jb = 0; jb < nb; ++jb)
                    r(ia * nb + ib, ja * nb + jb) = f * b(ib, jb);
        }
    return r;
}

namespace {

double offdiag_norm(const ComplexMatrix& m) {
    double s = 0.0;
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j)
            if (i != j) s += std::norm(m(i, j));
    return std::sqrt(s);
}

} // namespace

HermitianEigen herm_eigen(const ComplexMatrix& h, double herm_tol) {
    const int n = h.dim();
    if (!h.is_hermitian(herm_tol))
        throw NotHermitian("herm_eigen input fails the symmetry check");

    // Work on the Hermitized copy so the rotations see an exactly
    // self-adjoint matrix regardless of construction round-off.
    ComplexMatrix a(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = 0.5 * (h(i, j) + std::conj(h(j, i)));
    ComplexMatrix v = identity(n);

    const double scale = std::max(1.0, a.max_abs());
    const double stop = 1e-15 * scale * n;
    const int max_sweeps = 100;

    for (int sweep = 0; sweep < max_sweeps && offdiag_norm(a) > stop; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double abs_apq = std::abs(apq);
                if (abs_apq <= 1e-300) continue;
                // Phase w and angle theta of the plane rotation that zeroes
                // a(p,q): tan(2*theta) = 2|a(p,q)| / (a(p,p) - a(q,q)).
                const cplx w = apq / abs_apq;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (app - aqq) / (2.0 * abs_apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(tau * tau + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                // Columns of the rotation: col p -> c*e_p + conj(w)*s*e_q,
                // col q -> -w*s*e_p + c*e_q.
                for (int r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const cplx arp = a(r, p), arq = a(r, q);
                    a(r, p) = c * arp + std::conj(w) * s * arq;
                    a(r, q) = -w * s * arp + c * arq;
                    a(p, r) = std::conj(a(r, p));
                    a(q, r) = std::conj(a(r, q));
                }
                const double app_new = app * c * c + aqq * s * s + 2.0 * abs_apq * c * s;
                const double aqq_new = app * s * s + aqq * c * c - 2.0 * abs_apq * c * s;
                a(p, p) = app_new;
                a(q, q) = aqq_new;
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                for (int r = 0; r < n; ++r) {
                    const cplx vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = c * vrp + std::conj(w) * s * vrq;
                    v(r, q) = -w * s * vrp + c * vrq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });

    HermitianEigen out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n);
    for (int k = 0; k < n; ++k) {
        const int src = order[k];
        out.eigenvalues[k] = a(src, src).real();
        // Phase convention: largest-modulus entry made real positive.
        int pivot = 0;
        double best = -1.0;
        for (int r = 0; r < n; ++r) {
            const double m = std::abs(v(r, src));
            if (m > best + 1e-12) {
                best = m;
                pivot = r;
            }
        }
        const cplx piv = v(pivot, src);
        const cplx phase = (std::abs(piv) > 0.0) ? std::abs(piv) / piv : cplx(1.0, 0.0);
        for (int r = 0; r < n; ++r) out.eigenvectors(r, k) = phase * v(r, src);
    }
    return out;
}

ComplexMatrix phase_exp(const ComplexMatrix& h, double theta) {
    const HermitianEigen e = herm_eigen(h);
    const int n = h.dim();
    ComplexMatrix r(n);
    for (int k = 0; k < n; ++k) {
        const cplx ph = std::exp(cplx(0.0, theta * e.eigenvalues[k]));
        for (int i = 0; i < n; ++i) {
            const cplx vik = e.eigenvectors(i, k);
            if (vik == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < n; ++j)
                r(i, j) += ph * vik * std::conj(e.eigenvectors(j, k));
        }
    }
    return r;
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, const std::vector<int>& dims,
                            const std::vector<int>& keep) {
    const int nf = static_cast<int>(dims.size());
    long total = 1;
    for (int d : dims) {
        if (d < 1) throw DimensionMismatch("partial_trace factor dimension < 1");
        total *= d;
    }
    if (total != rho.dim()) throw DimensionMismatch("partial_trace factor product != matrix dim");
    for (int k : keep)
        if (k < 0 || k >= nf) throw DimensionMismatch("partial_trace keep index outside dims");

    std::vector<bool> kept(nf, false);
    for (int k : keep) kept[k] = true;

    int out_dim = 1;
    for (int f = 0; f < nf; ++f)
        if (kept[f]) out_dim *= dims[f];

    // Strides of each factor in the flat index (slow-to-fast layout).
    std::vector<long> stride(nf, 1);
    for (int f = nf - 2; f >= 0; --f) stride[f] = stride[f + 1] * dims[f + 1];
    std::vector<long> out_stride(nf, 0);
    long os = 1;
    for (int f = nf - 1; f >= 0; --f)
        if (kept[f]) {
            out_stride[f] = os;
            os *= dims[f];
        }

    ComplexMatrix out(out_dim);
    std::vector<int> idx_row(nf, 0), idx_col(nf, 0);
    for (long i = 0; i < rho.dim(); ++i) {
        long rem = i;
        for (int f = 0; f < nf; ++f) {
            idx_row[f] = static_cast<int>(rem / stride[f]);
            rem %= stride[f];
        }
        for (long j = 0; j < rho.dim(); ++j) {
            rem = j;
            bool diag_traced = true;
            for (int f = 0; f < nf; ++f) {
                idx_col[f] = static_cast<int>(rem / stride[f]);
                rem %= stride[f];
                if (!kept[f] && idx_col[f] != idx_row[f]) {
                    diag_traced = false;
                    break;
                }
            }
            if (!diag_traced) continue;
            long oi = 0, oj = 0;
            for (int f = 0; f < nf; ++f)
                if (kept[f]) {
                    oi += idx_row[f] * out_stride[f];
                    oj += idx_col[f] * out_stride[f];
                }
            out(static_cast<int>(oi), static_cast<int>(oj)) += rho(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return out;
}

} // namespace qdfr
