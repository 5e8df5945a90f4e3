#include "plast/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace plast {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      double* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix gram_ata(const Matrix& a) {
  Matrix g(a.cols, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* row = &a.data[i * a.cols];
    for (std::size_t j = 0; j < a.cols; ++j) {
      const double rj = row[j];
      if (rj == 0.0) continue;
      double* grow = &g.data[j * a.cols];
      for (std::size_t k = j; k < a.cols; ++k) grow[k] += rj * row[k];
    }
  }
  for (std::size_t j = 0; j < a.cols; ++j)
    for (std::size_t k = 0; k < j; ++k) g(j, k) = g(k, j);
  return g;
}

Matrix gram_aat(const Matrix& a) {
  Matrix g(a.rows, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ri = &a.data[i * a.cols];
    for (std::size_t j = i; j < a.rows; ++j) {
      const double* rj = &a.data[j * a.cols];
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += ri[k] * rj[k];
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

SpectralSummary sym_eigvals(const Matrix& a, Matrix* vectors) {
  if (a.rows != a.cols) throw std::invalid_argument("sym_eigvals: non-square input");
  const std::size_t n = a.rows;
  if (n == 0) throw std::invalid_argument("sym_eigvals: empty matrix");

  const double scale = max_abs(a);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-9 * scale)
        throw std::invalid_argument("sym_eigvals: input not symmetric");

  // Symmetrize, then run cyclic Jacobi sweeps until the off-diagonal mass
  // is negligible relative to the Frobenius norm.
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));

  Matrix q;
  if (vectors) q = Matrix::identity(n);

  const double fnorm = frobenius_norm(s);
  const double stop = 1e-15 * (fnorm > 0 ? fnorm : 1.0);
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r) off += s(p, r) * s(p, r);
    if (std::sqrt(2.0 * off) <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apq = s(p, r);
        if (apq == 0.0) continue;
        const double app = s(p, p);
        const double aqq = s(r, r);
        const double tau = (aqq - app) / (2.0 * apq);
        double t;
        if (tau >= 0.0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p);
          const double skq = s(k, r);
          s(k, p) = c * skp - sn * skq;
          s(k, r) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k);
          const double sqk = s(r, k);
          s(p, k) = c * spk - sn * sqk;
          s(r, k) = sn * spk + c * sqk;
        }
        if (vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double qkp = q(k, p);
            const double qkq = q(k, r);
            q(k, p) = c * qkp - sn * qkq;
            q(k, r) = sn * qkp + c * qkq;
          }
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = s(i, i);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

  SpectralSummary out;
  out.kind = SpectrumKind::Eigenvalues;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = diag[order[i]];
  if (vectors) {
    *vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) (*vectors)(k, i) = q(k, order[i]);
  }
  return out;
}

SpectralSummary singular_values(const Matrix& z) {
  if (z.rows == 0 || z.cols == 0)
    throw std::invalid_argument("singular_values: empty matrix");
  const Matrix g = (z.rows <= z.cols) ? gram_aat(z) : gram_ata(z);
  SpectralSummary eig = sym_eigvals(g);
  SpectralSummary out;
  out.kind = SpectrumKind::SingularValues;
  out.values.reserve(eig.values.size());
  for (double v : eig.values) out.values.push_back(v > 0.0 ? std::sqrt(v) : 0.0);
  return out;
}

double largest_eigenvalue(const Matrix& a) { return sym_eigvals(a).values.front(); }

}  // namespace plast
