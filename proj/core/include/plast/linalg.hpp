#ifndef PLAST_LINALG_HPP
#define PLAST_LINALG_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace plast {

// Dense row-major real matrix. Only the operations needed by the spectral
// diagnostics are provided; this is not a general linear algebra library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }

  static Matrix identity(std::size_t n);
};

enum class SpectrumKind { SingularValues, Eigenvalues };

// Descending spectrum of a matrix; singular values are nonnegative.
struct SpectralSummary {
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::SingularValues;
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T a (cols x cols).
Matrix gram_ata(const Matrix& a);
// a a^T (rows x rows).
Matrix gram_aat(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// All eigenvalues of a symmetric matrix, descending, via cyclic Jacobi
// rotations. Input must be symmetric within 1e-9 * max|A|; it is symmetrized
// as (A + A^T)/2 before decomposition. If `vectors` is non-null it receives
// the orthonormal eigenvector columns in the same order.
SpectralSummary sym_eigvals(const Matrix& a, Matrix* vectors = nullptr);

// Singular values of z, descending, clamped at zero. Computed as square
// roots of the eigenvalues of the smaller of z^T z and z z^T.
SpectralSummary singular_values(const Matrix& z);

// Largest eigenvalue of a symmetric matrix (convenience over sym_eigvals).
double largest_eigenvalue(const Matrix& a);

}  // namespace plast

#endif  // PLAST_LINALG_HPP
