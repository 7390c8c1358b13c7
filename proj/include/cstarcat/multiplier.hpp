#ifndef CSTARCAT_MULTIPLIER_HPP
#define CSTARCAT_MULTIPLIER_HPP

#include <vector>

#include "category.hpp"
#include "hull.hpp"

namespace cstarcat
{

/// Multiplier morphism x -> y in hom-basis coordinates:
///   left  : A(x,x) -> A(x,y), a right A(x,x)-module map (n_xy x n_xx),
///   right : A(y,y) -> A(x,y), a left A(y,y)-module map  (n_xy x n_yy),
/// with right(g) o f = g o left(f).
struct MultiplierMorphism
{
  ObjectId src = 0;
  ObjectId dst = 0;
  CMatrix left;
  CMatrix right;
};

/// The two arrays {L_w : A(w,x) -> A(w,y)} and {R_z : A(y,z) -> A(x,z)}.
struct MultiplierArrays
{
  ObjectId src = 0;
  ObjectId dst = 0;
  std::vector<CMatrix> left;   // indexed by w
  std::vector<CMatrix> right;  // indexed by z
};

namespace detail
{

inline CVector stacked(const MultiplierMorphism& m)
{
  CVector v(m.left.size() + m.right.size());
  v << vectorize(m.left), vectorize(m.right);
  return v;
}

/// Matrix of c |-> coords(h o c) on A(src, dst) for h in A(dst, dst2).
inline CMatrix left_multiplication(const CStarCategory& A, ObjectId src, ObjectId dst, ObjectId dst2, const CMatrix& h)
{
  const auto& basis = A.hom(src, dst);
  CMatrix m(A.hom_dim(src, dst2), static_cast<Index>(basis.size()));
  for (std::size_t l = 0; l < basis.size(); ++l)
    m.col(static_cast<Index>(l)) = A.coordinates(src, dst2, h * basis[l]);
  return m;
}

/// Matrix of c |-> coords(c o h) on A(src, dst) for h in A(src2, src).
inline CMatrix right_multiplication(const CStarCategory& A, ObjectId src, ObjectId dst, ObjectId src2,
                                    const CMatrix& h)
{
  const auto& basis = A.hom(src, dst);
  CMatrix m(A.hom_dim(src2, dst), static_cast<Index>(basis.size()));
  for (std::size_t l = 0; l < basis.size(); ++l)
    m.col(static_cast<Index>(l)) = A.coordinates(src2, dst, basis[l] * h);
  return m;
}

} // namespace detail

/// Linear constraint system whose null space is the space of multiplier
/// morphisms x -> y; unknowns are [vec(left); vec(right)].
inline CMatrix multiplier_constraints(const CStarCategory& A, ObjectId x, ObjectId y)
{
  const Index nxx = A.hom_dim(x, x), nyy = A.hom_dim(y, y), nxy = A.hom_dim(x, y);
  const Index nL = nxy * nxx, nR = nxy * nyy;
  const Index blocks = nxx * nxx + nyy * nyy + nxx * nyy;
  CMatrix C = CMatrix::Zero(blocks * nxy, nL + nR);
  if (nxy == 0)
    return C;
  Index row = 0;
  const auto& bx = A.hom(x, x);
  const auto& by = A.hom(y, y);

  // left(f h) = left(f) h
  for (Index b = 0; b < nxx; ++b) {
    CMatrix rho = detail::right_multiplication(A, x, y, x, bx[b]);
    for (Index a = 0; a < nxx; ++a) {
      CVector c = A.coordinates(x, x, bx[a] * bx[b]);
      for (Index k = 0; k < nxx; ++k)
        C.block(row, k * nxy, nxy, nxy) += c(k) * CMatrix::Identity(nxy, nxy);
      C.block(row, a * nxy, nxy, nxy) -= rho;
      row += nxy;
    }
  }
  // right(h g) = h right(g)
  for (Index b = 0; b < nyy; ++b) {
    CMatrix lambda = detail::left_multiplication(A, x, y, y, by[b]);
    for (Index a = 0; a < nyy; ++a) {
      CVector c = A.coordinates(y, y, by[b] * by[a]);
      for (Index k = 0; k < nyy; ++k)
        C.block(row, nL + k * nxy, nxy, nxy) += c(k) * CMatrix::Identity(nxy, nxy);
      C.block(row, nL + a * nxy, nxy, nxy) -= lambda;
      row += nxy;
    }
  }
  // right(g) f = g left(f)
  for (Index a = 0; a < nxx; ++a) {
    CMatrix rho = detail::right_multiplication(A, x, y, x, bx[a]);
    for (Index b = 0; b < nyy; ++b) {
      CMatrix lambda = detail::left_multiplication(A, x, y, y, by[b]);
      C.block(row, nL + b * nxy, nxy, nxy) += rho;
      C.block(row, a * nxy, nxy, nxy) -= lambda;
      row += nxy;
    }
  }
  return C;
}

/// Basis of the multiplier space x -> y, orthonormal in stacked coordinates.
inline std::vector<MultiplierMorphism> multiplier_space(const CStarCategory& A, ObjectId x, ObjectId y,
                                                        const Tolerance& tol = {})
{
  const Index nxx = A.hom_dim(x, x), nyy = A.hom_dim(y, y), nxy = A.hom_dim(x, y);
  std::vector<MultiplierMorphism> basis;
  if (nxy == 0)
    return basis;
  CMatrix C = multiplier_constraints(A, x, y);
  const double scale = std::max(1.0, op_norm(C));
  CMatrix kernel = null_space(C, tol.atol * scale);
  for (Index k = 0; k < kernel.cols(); ++k) {
    MultiplierMorphism m{x, y, unvectorize(kernel.col(k).head(nxy * nxx), nxy, nxx),
                         unvectorize(kernel.col(k).tail(nxy * nyy), nxy, nyy)};
    basis.push_back(std::move(m));
  }
  return basis;
}

/// Residuals of the three defining conditions on basis elements.
inline double multiplier_defect(const CStarCategory& A, const MultiplierMorphism& m)
{
  CMatrix C = multiplier_constraints(A, m.src, m.dst);
  if (C.rows() == 0)
    return 0.0;
  return (C * detail::stacked(m)).norm();
}

/// Pair of post- and pre-composition by a.
inline MultiplierMorphism kappa(const CStarCategory& A, const Morphism& a)
{
  const ObjectId x = a.src, y = a.dst;
  MultiplierMorphism m{x, y, detail::left_multiplication(A, x, x, y, a.mat),
                       detail::right_multiplication(A, y, y, x, a.mat)};
  return m;
}

inline Morphism apply_left(const CStarCategory& A, const MultiplierMorphism& m, const Morphism& f)
{
  if (f.src != m.src || f.dst != m.src)
    throw CompositionError("multiplier left map takes endomorphisms of the source");
  return Morphism{m.src, m.dst, A.from_coordinates(m.src, m.dst, m.left * A.coordinates(m.src, m.src, f.mat))};
}

inline Morphism apply_right(const CStarCategory& A, const MultiplierMorphism& m, const Morphism& g)
{
  if (g.src != m.dst || g.dst != m.dst)
    throw CompositionError("multiplier right map takes endomorphisms of the target");
  return Morphism{m.src, m.dst, A.from_coordinates(m.src, m.dst, m.right * A.coordinates(m.dst, m.dst, g.mat))};
}

/// Extends (L, R) to arrays through the factorization lemma:
///   L_w(s o t) = L(s) o t for f = s o t, s in A(x,x);
///   R_z(v o u) = v o R(u) for f = v o u, u in A(y,y).
inline MultiplierArrays multiplier_arrays(const CStarCategory& A, const MultiplierMorphism& m,
                                          const Tolerance& tol = {})
{
  const ObjectId x = m.src, y = m.dst;
  const std::size_t n = A.object_count();
  MultiplierArrays arr{x, y, {}, {}};
  for (ObjectId w = 0; w < n; ++w) {
    const auto& basis = A.hom(w, x);
    CMatrix Lw(A.hom_dim(w, y), static_cast<Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      LeftFactorization st = factorize_left(A, Morphism{w, x, basis[k]}, tol);
      Morphism ls = apply_left(A, m, st.s);
      Lw.col(static_cast<Index>(k)) = A.coordinates(w, y, ls.mat * st.t.mat);
    }
    arr.left.push_back(std::move(Lw));
  }
  for (ObjectId z = 0; z < n; ++z) {
    const auto& basis = A.hom(y, z);
    CMatrix Rz(A.hom_dim(x, z), static_cast<Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
      Factorization vw = factorize(A, Morphism{y, z, basis[k]}, tol);
      Morphism rw = apply_right(A, m, vw.w);
      Rz.col(static_cast<Index>(k)) = A.coordinates(x, z, vw.v.mat * rw.mat);
    }
    arr.right.push_back(std::move(Rz));
  }
  return arr;
}

/// Residuals of the three array compatibility conditions on basis elements.
inline double array_defect(const CStarCategory& A, const MultiplierArrays& arr)
{
  const ObjectId x = arr.src, y = arr.dst;
  const std::size_t n = A.object_count();
  double worst = 0.0;
  auto L = [&](ObjectId w, const CMatrix& f) {
    return A.from_coordinates(w, y, arr.left[w] * A.coordinates(w, x, f));
  };
  auto R = [&](ObjectId z, const CMatrix& g) {
    return A.from_coordinates(x, z, arr.right[z] * A.coordinates(y, z, g));
  };
  for (ObjectId w = 0; w < n; ++w)
    for (const CMatrix& f : A.hom(w, x))
      for (ObjectId w2 = 0; w2 < n; ++w2)
        for (const CMatrix& h : A.hom(w2, w))
          worst = std::max(worst, op_norm(L(w, f) * h - L(w2, f * h)));
  for (ObjectId z = 0; z < n; ++z)
    for (const CMatrix& f : A.hom(y, z))
      for (ObjectId z2 = 0; z2 < n; ++z2)
        for (const CMatrix& h : A.hom(z, z2))
          worst = std::max(worst, op_norm(h * R(z, f) - R(z2, h * f)));
  for (ObjectId w = 0; w < n; ++w)
    for (const CMatrix& f : A.hom(w, x))
      for (ObjectId z = 0; z < n; ++z)
        for (const CMatrix& g : A.hom(y, z))
          worst = std::max(worst, op_norm(R(z, g) * f - g * L(w, f)));
  return worst;
}

/// Restriction of compatible arrays to (L_x, R_y).
inline MultiplierMorphism multiplier_from_arrays(const CStarCategory& A, const MultiplierArrays& arr,
                                                 const Tolerance& tol = {})
{
  const std::size_t n = A.object_count();
  if (arr.left.size() != n || arr.right.size() != n)
    throw InvalidInput("multiplier_from_arrays: arrays must cover every object");
  for (ObjectId w = 0; w < n; ++w)
    if (arr.left[w].rows() != A.hom_dim(w, arr.dst) || arr.left[w].cols() != A.hom_dim(w, arr.src))
      throw InvalidInput("multiplier_from_arrays: left array has the wrong shape");
  for (ObjectId z = 0; z < n; ++z)
    if (arr.right[z].rows() != A.hom_dim(arr.src, z) || arr.right[z].cols() != A.hom_dim(arr.dst, z))
      throw InvalidInput("multiplier_from_arrays: right array has the wrong shape");
  double scale = 1.0;
  for (const CMatrix& m : arr.left)
    scale = std::max(scale, op_norm(m));
  for (const CMatrix& m : arr.right)
    scale = std::max(scale, op_norm(m));
  if (!tol.accepts(array_defect(A, arr), scale))
    throw InvalidInput("multiplier_from_arrays: arrays are not compatible");
  return MultiplierMorphism{arr.src, arr.dst, arr.left[arr.src], arr.right[arr.dst]};
}

/// Norm of a coordinate map between hom-spaces measured in operator norms,
/// estimated on probes: the unit (when the domain is an endomorphism space),
/// every basis element, and random elements.
inline double map_norm_estimate(const CStarCategory& A, ObjectId src, ObjectId dst, ObjectId src2, ObjectId dst2,
                                const CMatrix& map, int probes = 16, std::uint64_t seed = 0)
{
  double best = 0.0;
  auto probe = [&](const CMatrix& f) {
    const double nf = op_norm(f);
    if (nf <= 0.0)
      return;
    CMatrix image = A.from_coordinates(src2, dst2, map * A.coordinates(src, dst, f));
    best = std::max(best, op_norm(image) / nf);
  };
  if (src == dst)
    probe(CMatrix::Identity(A.dim(src), A.dim(src)));
  for (const CMatrix& b : A.hom(src, dst))
    probe(b);
  std::mt19937_64 rng(seed);
  for (int p = 0; p < probes && A.hom_dim(src, dst) > 0; ++p)
    probe(A.random_morphism(src, dst, rng).mat);
  return best;
}

/// Multiplier category: per ordered pair the multiplier space, with the
/// composition and involution of the multiplier calculus.
class MultiplierCategory
{
public:
  MultiplierCategory(CategoryRef base, const Tolerance& tol = {}) : base_(std::move(base)), tol_(tol)
  {
    const std::size_t n = base_->object_count();
    spaces_.assign(n, std::vector<std::vector<MultiplierMorphism>>(n));
    for (ObjectId x = 0; x < n; ++x)
      for (ObjectId y = 0; y < n; ++y)
        spaces_[x][y] = multiplier_space(*base_, x, y, tol_);
  }

  const CStarCategory& base() const { return *base_; }
  const CategoryRef& base_ref() const { return base_; }
  const std::vector<MultiplierMorphism>& space(ObjectId x, ObjectId y) const { return spaces_.at(x).at(y); }
  Index space_dim(ObjectId x, ObjectId y) const { return static_cast<Index>(space(x, y).size()); }

  MultiplierMorphism kappa(const Morphism& a) const { return cstarcat::kappa(*base_, a); }

  /// Coordinates in the multiplier basis (orthonormal in stacked form).
  CVector coordinates(const MultiplierMorphism& m) const
  {
    const auto& basis = space(m.src, m.dst);
    CVector v = detail::stacked(m);
    CVector c(static_cast<Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k)
      c(static_cast<Index>(k)) = detail::stacked(basis[k]).dot(v);
    return c;
  }

  double span_residual(const MultiplierMorphism& m) const
  {
    CVector v = detail::stacked(m);
    const CVector c = coordinates(m);
    const auto& basis = space(m.src, m.dst);
    for (std::size_t k = 0; k < basis.size(); ++k)
      v -= c(static_cast<Index>(k)) * detail::stacked(basis[k]);
    return v.norm();
  }

  MultiplierMorphism from_coordinates(ObjectId x, ObjectId y, const CVector& c) const
  {
    const CStarCategory& A = *base_;
    MultiplierMorphism m{x, y, CMatrix::Zero(A.hom_dim(x, y), A.hom_dim(x, x)),
                         CMatrix::Zero(A.hom_dim(x, y), A.hom_dim(y, y))};
    const auto& basis = space(x, y);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      m.left += c(static_cast<Index>(k)) * basis[k].left;
      m.right += c(static_cast<Index>(k)) * basis[k].right;
    }
    return m;
  }

  /// (L,R) o (L',R') = (L_w o L', R'_y o R) for (L,R): x -> y, (L',R'): w -> x.
  MultiplierMorphism compose(const MultiplierMorphism& m, const MultiplierMorphism& mp) const
  {
    if (mp.dst != m.src)
      throw CompositionError("multiplier composition: objects do not match");
    MultiplierArrays outer = multiplier_arrays(*base_, m, tol_);
    MultiplierArrays inner = multiplier_arrays(*base_, mp, tol_);
    return MultiplierMorphism{mp.src, m.dst, outer.left[mp.src] * mp.left, inner.right[m.dst] * m.right};
  }

  /// (L,R)* = (g |-> R(g*)*, f |-> L(f*)*).
  MultiplierMorphism involute(const MultiplierMorphism& m) const
  {
    const CStarCategory& A = *base_;
    const ObjectId x = m.src, y = m.dst;
    const auto& by = A.hom(y, y);
    const auto& bx = A.hom(x, x);
    MultiplierMorphism out{y, x, CMatrix(A.hom_dim(y, x), A.hom_dim(y, y)), CMatrix(A.hom_dim(y, x), A.hom_dim(x, x))};
    for (std::size_t b = 0; b < by.size(); ++b) {
      Morphism r = apply_right(A, m, Morphism{y, y, by[b].adjoint()});
      out.left.col(static_cast<Index>(b)) = A.coordinates(y, x, r.mat.adjoint());
    }
    for (std::size_t a = 0; a < bx.size(); ++a) {
      Morphism l = apply_left(A, m, Morphism{x, x, bx[a].adjoint()});
      out.right.col(static_cast<Index>(a)) = A.coordinates(y, x, l.mat.adjoint());
    }
    return out;
  }

  /// L(id_x), the morphism representing m in the unital case.
  Morphism representative(const MultiplierMorphism& m) const
  {
    return apply_left(*base_, m, base_->identity(m.src));
  }

  /// |(L,R)| = |L_x| = |R_y|.
  double norm(const MultiplierMorphism& m) const
  {
    return map_norm_estimate(*base_, m.src, m.src, m.src, m.dst, m.left);
  }

  /// Concrete category realizing the multipliers through m |-> L(id); valid
  /// when the base is unital.
  CStarCategory realize() const
  {
    const CStarCategory& A = *base_;
    const std::size_t n = A.object_count();
    std::vector<std::vector<std::vector<CMatrix>>> homs(n, std::vector<std::vector<CMatrix>>(n));
    for (ObjectId x = 0; x < n; ++x)
      for (ObjectId y = 0; y < n; ++y) {
        std::vector<CMatrix> reps;
        for (const MultiplierMorphism& m : space(x, y))
          reps.push_back(representative(m).mat);
        homs[x][y] = orthonormal_span(reps, tol_);
      }
    return CStarCategory(A.objects(), std::move(homs));
  }

private:
  CategoryRef base_;
  Tolerance tol_;
  std::vector<std::vector<std::vector<MultiplierMorphism>>> spaces_;
};

/// Matrix of kappa on hom(x,y) in multiplier coordinates (columns indexed by
/// the hom basis).
inline CMatrix kappa_matrix(const MultiplierCategory& M, ObjectId x, ObjectId y)
{
  const CStarCategory& A = M.base();
  CMatrix K(M.space_dim(x, y), A.hom_dim(x, y));
  for (Index k = 0; k < A.hom_dim(x, y); ++k)
    K.col(k) = M.coordinates(M.kappa(A.basis_element(x, y, static_cast<std::size_t>(k))));
  return K;
}

/// A morphism of the hull of the multiplier category: a block array of
/// multipliers T[j][i] : x_i -> y_j.
struct MultiplierBlock
{
  ObjectList src;
  ObjectList dst;
  std::vector<std::vector<MultiplierMorphism>> entries; // [j][i]
};

inline MultiplierBlock compose(const MultiplierCategory& M, const MultiplierBlock& S, const MultiplierBlock& T)
{
  if (S.src != T.dst)
    throw CompositionError("multiplier block composition: lists do not match");
  const CStarCategory& A = M.base();
  MultiplierBlock out{T.src, S.dst, {}};
  for (std::size_t j = 0; j < S.dst.size(); ++j) {
    std::vector<MultiplierMorphism> row;
    for (std::size_t i = 0; i < T.src.size(); ++i) {
      MultiplierMorphism acc{T.src[i], S.dst[j], CMatrix::Zero(A.hom_dim(T.src[i], S.dst[j]), A.hom_dim(T.src[i], T.src[i])),
                             CMatrix::Zero(A.hom_dim(T.src[i], S.dst[j]), A.hom_dim(S.dst[j], S.dst[j]))};
      for (std::size_t k = 0; k < S.src.size(); ++k) {
        MultiplierMorphism p = M.compose(S.entries[j][k], T.entries[k][i]);
        acc.left += p.left;
        acc.right += p.right;
      }
      row.push_back(std::move(acc));
    }
    out.entries.push_back(std::move(row));
  }
  return out;
}

/// Canonical map from the hull of the multiplier category into the
/// multipliers of the hull: a block array [T_ji] becomes the pair
///   L(F)_{jk} = sum_i L^{T_ji}_{x_k}(F_ik),  R(G)_{li} = sum_j R^{T_ji}_{y_l}(G_lj).
/// hull_src/hull_dst index the lists inside the materialized hull.
inline MultiplierMorphism hull_multiplier(const MultiplierCategory& M, const AdditiveHull& hull, ObjectId hull_src,
                                          ObjectId hull_dst, const MultiplierBlock& T, const Tolerance& tol = {})
{
  const CStarCategory& A = M.base();
  const CStarCategory& H = *hull.cat;
  const ObjectList& xs = hull.lists.at(hull_src);
  const ObjectList& ys = hull.lists.at(hull_dst);
  if (xs != T.src || ys != T.dst)
    throw InvalidInput("hull_multiplier: block lists do not match hull objects");
  const auto xo = list_offsets(A, xs), yo = list_offsets(A, ys);

  std::vector<std::vector<MultiplierArrays>> arrays(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j)
    for (std::size_t i = 0; i < xs.size(); ++i)
      arrays[j].push_back(multiplier_arrays(A, T.entries[j][i], tol));

  auto L = [&](const CMatrix& F) {
    CMatrix out = CMatrix::Zero(yo.back(), xo.back());
    for (std::size_t k = 0; k < xs.size(); ++k)
      for (std::size_t j = 0; j < ys.size(); ++j)
        for (std::size_t i = 0; i < xs.size(); ++i) {
          CMatrix Fik = F.block(xo[i], xo[k], A.dim(xs[i]), A.dim(xs[k]));
          CVector c = arrays[j][i].left[xs[k]] * A.coordinates(xs[k], xs[i], Fik);
          out.block(yo[j], xo[k], A.dim(ys[j]), A.dim(xs[k])) += A.from_coordinates(xs[k], ys[j], c);
        }
    return out;
  };
  auto R = [&](const CMatrix& G) {
    CMatrix out = CMatrix::Zero(yo.back(), xo.back());
    for (std::size_t l = 0; l < ys.size(); ++l)
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) {
          CMatrix Glj = G.block(yo[l], yo[j], A.dim(ys[l]), A.dim(ys[j]));
          CVector c = arrays[j][i].right[ys[l]] * A.coordinates(ys[j], ys[l], Glj);
          out.block(yo[l], xo[i], A.dim(ys[l]), A.dim(xs[i])) += A.from_coordinates(xs[i], ys[l], c);
        }
    return out;
  };

  const auto& bx = H.hom(hull_src, hull_src);
  const auto& by = H.hom(hull_dst, hull_dst);
  MultiplierMorphism out{hull_src, hull_dst, CMatrix(H.hom_dim(hull_src, hull_dst), static_cast<Index>(bx.size())),
                         CMatrix(H.hom_dim(hull_src, hull_dst), static_cast<Index>(by.size()))};
  for (std::size_t a = 0; a < bx.size(); ++a)
    out.left.col(static_cast<Index>(a)) = H.coordinates(hull_src, hull_dst, L(bx[a]));
  for (std::size_t b = 0; b < by.size(); ++b)
    out.right.col(static_cast<Index>(b)) = H.coordinates(hull_src, hull_dst, R(by[b]));
  return out;
}

} // namespace cstarcat

#endif
