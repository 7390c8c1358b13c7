#ifndef CSTARCAT_NUMC_HPP
#define CSTARCAT_NUMC_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cstarcat
{

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Malformed or out-of-contract input.
struct InvalidInput : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

/// Composition of morphisms whose objects do not match.
struct CompositionError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

/// A product or adjoint left the hom-space it should live in.
struct ClosureViolation : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct NotInvertible : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Residual R passes iff |R| <= atol + rtol * scale.
struct Tolerance
{
  double atol = 1e-9;
  double rtol = 1e-8;

  double bound(double scale) const { return atol + rtol * scale; }
  bool accepts(double residual, double scale) const { return residual <= bound(scale); }
};

namespace detail
{

inline void require_finite(const CMatrix& m, const char* what)
{
  if (!m.allFinite())
    throw InvalidInput(std::string(what) + ": non-finite entries");
}

inline void require_square(const CMatrix& m, const char* what)
{
  if (m.rows() != m.cols())
    throw InvalidInput(std::string(what) + ": matrix is not square");
}

} // namespace detail

/// Largest singular value, from the Hermitian eigenproblem of m* m (or m m*,
/// whichever is smaller).
inline double op_norm(const CMatrix& m)
{
  detail::require_finite(m, "op_norm");
  if (m.size() == 0)
    return 0.0;
  CMatrix gram = m.rows() < m.cols() ? CMatrix(m * m.adjoint()) : CMatrix(m.adjoint() * m);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double hermitian_residual(const CMatrix& m) { return op_norm(m - m.adjoint()); }

inline bool is_hermitian(const CMatrix& m, const Tolerance& tol = {})
{
  detail::require_square(m, "is_hermitian");
  return tol.accepts(hermitian_residual(m), op_norm(m));
}

/// Smallest eigenvalue of the Hermitian part of m.
inline double min_eigenvalue(const CMatrix& m)
{
  detail::require_square(m, "min_eigenvalue");
  if (m.size() == 0)
    return 0.0;
  CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Ascending eigenvalues of the Hermitian part of m.
inline RVector hermitian_spectrum(const CMatrix& m)
{
  detail::require_square(m, "hermitian_spectrum");
  if (m.size() == 0)
    return RVector();
  CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline bool psd_check(const CMatrix& m, const Tolerance& tol = {})
{
  detail::require_square(m, "psd_check");
  detail::require_finite(m, "psd_check");
  if (m.size() == 0)
    return true;
  const double scale = op_norm(m);
  if (!tol.accepts(hermitian_residual(m), scale))
    return false;
  return min_eigenvalue(m) >= -tol.bound(scale);
}

/// m^t for a positive semidefinite m. Eigenvalues below atol count as zero;
/// for t < 0 they are dropped (Moore-Penrose convention), so frac_power(m, -1)
/// is the pseudo-inverse.
inline CMatrix frac_power(const CMatrix& m, double t, const Tolerance& tol = {})
{
  detail::require_square(m, "frac_power");
  detail::require_finite(m, "frac_power");
  if (!std::isfinite(t) || t == 0.0)
    throw InvalidInput("frac_power: exponent must be finite and non-zero");
  if (m.size() == 0)
    return m;
  const double scale = op_norm(m);
  if (!tol.accepts(hermitian_residual(m), scale))
    throw InvalidInput("frac_power: matrix is not Hermitian");
  CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector& lambda = es.eigenvalues();
  if (lambda.minCoeff() < -tol.bound(scale))
    throw InvalidInput("frac_power: matrix is not positive semidefinite");
  RVector powered(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i)
    powered(i) = lambda(i) <= tol.atol ? 0.0 : std::pow(lambda(i), t);
  return es.eigenvectors() * powered.asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail
{
// BDCSVD in Eigen 3.4 can return NaN, or finite but wrong factors, on
// sparse structured stacks; accept it only if it reconstructs m
template <class Svd>
bool sound(const Svd& svd, const CMatrix& m)
{
  const RVector& s = svd.singularValues();
  const CMatrix& u = svd.matrixU();
  const CMatrix& v = svd.matrixV();
  if (!s.allFinite() || !u.allFinite() || !v.allFinite())
    return false;
  const Index k = s.size();
  const double top = std::max(k ? s(0) : 0.0, 1e-300);
  const double ortho = std::max((u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff(),
                                (v.adjoint() * v - CMatrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff());
  const double fit = (u.leftCols(k) * s.asDiagonal() * v.leftCols(k).adjoint() - m).cwiseAbs().maxCoeff() / top;
  return ortho < 1e-10 && fit < 1e-10;
}
} // namespace detail

/// Singular value decomposition with the shared rank cutoff.
struct RankedSvd
{
  CMatrix u;      // left singular vectors with sigma > cutoff
  RVector sigma;  // the retained singular values
  CMatrix v;      // right singular vectors with sigma > cutoff
};

inline RankedSvd ranked_svd(const CMatrix& m, double cutoff)
{
  RankedSvd out;
  if (m.size() == 0) {
    out.u = CMatrix(m.rows(), 0);
    out.v = CMatrix(m.cols(), 0);
    return out;
  }
  auto take = [&](const auto& svd) {
    const RVector& s = svd.singularValues();
    Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff)
      ++rank;
    out.u = svd.matrixU().leftCols(rank);
    out.v = svd.matrixV().leftCols(rank);
    out.sigma = s.head(rank);
  };
  Eigen::BDCSVD<CMatrix> fast(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (detail::sound(fast, m))
    take(fast);
  else
    take(Eigen::JacobiSVD<CMatrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV));
  return out;
}

/// Range of m with its singular values, V omitted. Wide inputs are first
/// reduced by a QR of the adjoint, which keeps both.
inline RankedSvd ranked_range(const CMatrix& m, double cutoff)
{
  if (m.cols() <= 2 * m.rows())
    return ranked_svd(m, cutoff);
  Eigen::HouseholderQR<CMatrix> qr(m.adjoint());
  CMatrix r = qr.matrixQR().topRows(m.rows()).triangularView<Eigen::Upper>();
  RankedSvd out = ranked_svd(r.adjoint(), cutoff);
  out.v = CMatrix(m.cols(), 0);
  return out;
}

inline Index numerical_rank(const CMatrix& m, const Tolerance& tol = {})
{
  return ranked_range(m, tol.atol).sigma.size();
}

inline CMatrix pseudo_inverse(const CMatrix& m, const Tolerance& tol = {})
{
  RankedSvd svd = ranked_svd(m, tol.atol);
  return svd.v * svd.sigma.cwiseInverse().asDiagonal() * svd.u.adjoint();
}

/// Orthonormal basis (columns) of the null space of m, for singular values at
/// most cutoff.
inline CMatrix null_space(const CMatrix& m, double cutoff)
{
  const Index n = m.cols();
  if (n == 0)
    return CMatrix(0, 0);
  if (m.rows() == 0)
    return CMatrix::Identity(n, n);
  auto take = [&](const auto& svd) -> CMatrix {
    const RVector& s = svd.singularValues();
    Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff)
      ++rank;
    return svd.matrixV().rightCols(n - rank);
  };
  Eigen::BDCSVD<CMatrix> fast(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
  if (detail::sound(fast, m))
    return take(fast);
  return take(Eigen::JacobiSVD<CMatrix>(m, Eigen::ComputeFullV));
}

/// Hermitian projection onto the column space of m.
inline CMatrix range_projection(const CMatrix& m, const Tolerance& tol = {})
{
  detail::require_finite(m, "range_projection");
  RankedSvd svd = ranked_svd(m, tol.atol);
  return svd.u * svd.u.adjoint();
}

/// Frobenius inner product tr(a* b).
inline Complex frobenius_inner(const CMatrix& a, const CMatrix& b)
{
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline CVector vectorize(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

inline CMatrix unvectorize(const CVector& v, Index rows, Index cols)
{
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

/// Frobenius-orthonormal basis of the complex span of mats.
inline std::vector<CMatrix> orthonormal_span(const std::vector<CMatrix>& mats, const Tolerance& tol = {})
{
  if (mats.empty())
    return {};
  const Index rows = mats.front().rows(), cols = mats.front().cols();
  CMatrix stack(rows * cols, static_cast<Index>(mats.size()));
  for (std::size_t k = 0; k < mats.size(); ++k) {
    if (mats[k].rows() != rows || mats[k].cols() != cols)
      throw InvalidInput("orthonormal_span: shape mismatch");
    detail::require_finite(mats[k], "orthonormal_span");
    stack.col(static_cast<Index>(k)) = vectorize(mats[k]);
  }
  RankedSvd svd = ranked_range(stack, tol.atol);
  std::vector<CMatrix> basis;
  basis.reserve(static_cast<std::size_t>(svd.u.cols()));
  for (Index k = 0; k < svd.u.cols(); ++k)
    basis.push_back(unvectorize(svd.u.col(k), rows, cols));
  return basis;
}

/// Coordinates of m in the orthonormal basis, or nothing if m is off the span.
inline std::optional<CVector> in_span(const CMatrix& m, const std::vector<CMatrix>& basis,
                                      const Tolerance& tol = {})
{
  CVector coords(static_cast<Index>(basis.size()));
  CMatrix residual = m;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].rows() != m.rows() || basis[k].cols() != m.cols())
      throw InvalidInput("in_span: shape mismatch");
    coords(static_cast<Index>(k)) = (basis[k].conjugate().cwiseProduct(m)).sum();
    residual -= coords(static_cast<Index>(k)) * basis[k];
  }
  if (!tol.accepts(residual.norm(), m.norm()))
    return std::nullopt;
  return coords;
}

/// Frobenius distance from m to the span of an orthonormal basis.
inline double span_residual(const CMatrix& m, const std::vector<CMatrix>& basis)
{
  CMatrix residual = m;
  for (const CMatrix& b : basis)
    residual -= (b.conjugate().cwiseProduct(m)).sum() * b;
  return residual.norm();
}

/// Standard complex Gaussian matrix.
template <class Rng>
CMatrix random_gaussian(Index rows, Index cols, Rng& rng)
{
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = Complex(normal(rng), normal(rng));
  return m;
}

/// Haar-ish random unitary from the QR factorization of a Gaussian matrix.
template <class Rng>
CMatrix random_unitary(Index n, Rng& rng)
{
  CMatrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(r(i, i));
    if (a > 0)
      q.col(i) *= r(i, i) / a;
  }
  return q;
}

} // namespace cstarcat

#endif
