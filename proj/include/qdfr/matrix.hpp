// Dense complex linear algebra for small Hilbert spaces (dim <= 32):
// products, tensor products, Hermitian eigendecomposition (cyclic Jacobi),
// operator phase functions and partial trace.
#ifndef QDFR_MATRIX_HPP
#define QDFR_MATRIX_HPP

#include <complex>
#include <initializer_list>
#include <vector>

#include "qdfr/errors.hpp"

namespace qdfr {

using cplx = std::complex<double>;

constexpr int kMaxDim = 32;

// Tolerances relative to the max-abs entry of the operand.
constexpr double kTolConstruct = 1e-12;
constexpr double kTolValidate = 1e-10;
constexpr double kTolDegeneracy = 1e-9;

// Dense square complex matrix, row-major.
class ComplexMatrix {
  public:
    ComplexMatrix() : dim_(0) {}
    explicit ComplexMatrix(int dim);
    ComplexMatrix(int dim, std::initializer_list<cplx> entries);

    int dim() const { return dim_; }
    cplx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
    const cplx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
    const std::vector<cplx>& data() const { return a_; }

    cplx trace() const;
    double max_abs() const;
    ComplexMatrix dagger() const;
    ComplexMatrix conj() const;

    bool is_hermitian(double tol = kTolConstruct) const;
    bool is_unitary(double tol = kTolConstruct) const;
    bool is_density(double tol = kTolConstruct) const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx s);

  private:
    int dim_;
    std::vector<cplx> a_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);

ComplexMatrix identity(int dim);
ComplexMatrix zeros(int dim);
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();
// a*sigma_x + b*sigma_y + c*sigma_z + d*identity
ComplexMatrix pauli_form(double cx, double cy, double cz, double c0 = 0.0);
// |i><j| in the computational basis of a dim-dimensional space
ComplexMatrix ketbra(int dim, int i, int j);

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

// Eigenvalues ascending; eigenvectors are the matching columns, orthonormal.
struct HermitianEigen {
    std::vector<double> eigenvalues;
    ComplexMatrix eigenvectors;

    // Groups of indices whose eigenvalues sit within kTolDegeneracy of each
    // other; a single-element group per index when the spectrum is simple.
    std::vector<std::vector<int>> degenerate_clusters() const;
};

// Tensor product with a's index as the slow (most significant) index.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Cyclic Jacobi diagonalization of a Hermitian matrix. Deterministic sweep
// order and eigenvector phase fixing, so identical input gives identical
// output. Throws NotHermitian when the symmetry check fails.
HermitianEigen herm_eigen(const ComplexMatrix& h, double herm_tol = kTolValidate);

// e^{i*theta*h} through the eigendecomposition of h.
ComplexMatrix phase_exp(const ComplexMatrix& h, double theta);

// Trace out every tensor factor not listed in keep. dims lists the factor
// dimensions slow-to-fast; keep holds indices into dims (ascending).
ComplexMatrix partial_trace(const ComplexMatrix& rho, const std::vector<int>& dims,
                            const std::vector<int>& keep);

} // namespace qdfr

#endif
