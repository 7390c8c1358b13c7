#ifndef CSTARCAT_HULL_HPP
#define CSTARCAT_HULL_HPP

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "category.hpp"

namespace cstarcat
{

// Block-matrix arithmetic for finite object lists. A morphism from the list
// X = [x_1..x_n] to Y = [y_1..y_k] is a dim(Y) x dim(X) matrix whose (j,i)
// block lies in hom(x_i, y_j).

inline Index list_dim(const CStarCategory& cat, const ObjectList& xs)
{
  Index d = 0;
  for (ObjectId x : xs)
    d += cat.dim(x);
  return d;
}

inline std::vector<Index> list_offsets(const CStarCategory& cat, const ObjectList& xs)
{
  std::vector<Index> off(xs.size() + 1, 0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    off[i + 1] = off[i] + cat.dim(xs[i]);
  return off;
}

inline std::string list_label(const CStarCategory& cat, const ObjectList& xs)
{
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i)
      s += ",";
    s += cat.label(xs[i]);
  }
  return s + "]";
}

inline ObjectList concat(const ObjectList& a, const ObjectList& b)
{
  ObjectList out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline ObjectList all_objects(const CStarCategory& cat)
{
  ObjectList xs(cat.object_count());
  for (ObjectId x = 0; x < xs.size(); ++x)
    xs[x] = x;
  return xs;
}

/// Orthonormal block basis of the hull hom-space hom(X, Y).
inline std::vector<CMatrix> hull_hom_basis(const CStarCategory& cat, const ObjectList& xs, const ObjectList& ys)
{
  const auto xo = list_offsets(cat, xs), yo = list_offsets(cat, ys);
  std::vector<CMatrix> basis;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      for (const CMatrix& b : cat.hom(xs[i], ys[j])) {
        CMatrix m = CMatrix::Zero(yo.back(), xo.back());
        m.block(yo[j], xo[i], b.rows(), b.cols()) = b;
        basis.push_back(std::move(m));
      }
  return basis;
}

inline Index hull_hom_dim(const CStarCategory& cat, const ObjectList& xs, const ObjectList& ys)
{
  Index d = 0;
  for (ObjectId x : xs)
    for (ObjectId y : ys)
      d += cat.hom_dim(x, y);
  return d;
}

/// Frobenius distance of m from hom(X, Y), computed block by block.
inline double hull_span_residual(const CStarCategory& cat, const ObjectList& xs, const ObjectList& ys,
                                 const CMatrix& m)
{
  const auto xo = list_offsets(cat, xs), yo = list_offsets(cat, ys);
  if (m.rows() != yo.back() || m.cols() != xo.back())
    throw InvalidInput("hull morphism has the wrong shape for " + list_label(cat, xs) + " -> " +
                       list_label(cat, ys));
  double sq = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double r = cat.span_residual(xs[i], ys[j], m.block(yo[j], xo[i], cat.dim(ys[j]), cat.dim(xs[i])));
      sq += r * r;
    }
  return std::sqrt(sq);
}

inline bool hull_contains(const CStarCategory& cat, const ObjectList& xs, const ObjectList& ys, const CMatrix& m,
                          const Tolerance& tol = {})
{
  return tol.accepts(hull_span_residual(cat, xs, ys, m), m.norm());
}

/// Orthogonal projection of m onto hom(X, Y).
inline CMatrix hull_project(const CStarCategory& cat, const ObjectList& xs, const ObjectList& ys, const CMatrix& m)
{
  const auto xo = list_offsets(cat, xs), yo = list_offsets(cat, ys);
  CMatrix out = CMatrix::Zero(m.rows(), m.cols());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const Index r = yo[j], c = xo[i], h = cat.dim(ys[j]), w = cat.dim(xs[i]);
      CVector coords = cat.coordinates(xs[i], ys[j], m.block(r, c, h, w));
      out.block(r, c, h, w) = cat.from_coordinates(xs[i], ys[j], coords);
    }
  return out;
}

template <class Rng>
CMatrix random_hull_morphism(const CStarCategory& cat, const ObjectList& xs, const ObjectList& ys, Rng& rng)
{
  const auto xo = list_offsets(cat, xs), yo = list_offsets(cat, ys);
  CMatrix m = CMatrix::Zero(yo.back(), xo.back());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      m.block(yo[j], xo[i], cat.dim(ys[j]), cat.dim(xs[i])) = cat.random_morphism(xs[i], ys[j], rng).mat;
  return m;
}

/// Inclusion of the i-th entry of X as a hull morphism [x_i] -> X.
inline CMatrix hull_inclusion(const CStarCategory& cat, const ObjectList& xs, std::size_t i)
{
  const auto xo = list_offsets(cat, xs);
  CMatrix m = CMatrix::Zero(xo.back(), cat.dim(xs.at(i)));
  m.block(xo[i], 0, cat.dim(xs[i]), cat.dim(xs[i])).setIdentity();
  return m;
}

/// Additive hull materialized on a finite family of object lists. Every
/// singleton is always present; singletons come first, in object order.
struct AdditiveHull
{
  CategoryRef base;
  CategoryRef cat;
  std::vector<ObjectList> lists;
  CStarFunctor embedding;

  ObjectId singleton(ObjectId x) const { return x; }

  ObjectId index_of(const ObjectList& xs) const
  {
    auto it = std::find(lists.begin(), lists.end(), xs);
    if (it == lists.end())
      throw InvalidInput("list is not materialized in this hull");
    return static_cast<ObjectId>(it - lists.begin());
  }
};

inline AdditiveHull additive_hull(const CategoryRef& base, const std::vector<ObjectList>& extra_lists = {},
                                  bool include_full_list = true)
{
  const CStarCategory& A = *base;
  AdditiveHull hull;
  hull.base = base;
  for (ObjectId x = 0; x < A.object_count(); ++x)
    hull.lists.push_back({x});
  auto add = [&](const ObjectList& xs) {
    if (xs.empty())
      throw InvalidInput("additive_hull: empty lists have dimension zero");
    for (ObjectId x : xs)
      A.check_object(x);
    if (std::find(hull.lists.begin(), hull.lists.end(), xs) == hull.lists.end())
      hull.lists.push_back(xs);
  };
  if (include_full_list)
    add(all_objects(A));
  for (const ObjectList& xs : extra_lists)
    add(xs);

  std::vector<ObjectInfo> objects;
  for (const ObjectList& xs : hull.lists)
    objects.push_back({list_label(A, xs), list_dim(A, xs)});
  const std::size_t n = hull.lists.size();
  std::vector<std::vector<std::vector<CMatrix>>> homs(n, std::vector<std::vector<CMatrix>>(n));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      homs[s][t] = hull_hom_basis(A, hull.lists[s], hull.lists[t]);
  hull.cat = share(CStarCategory(std::move(objects), std::move(homs)));

  hull.embedding.source = base;
  hull.embedding.target = hull.cat;
  for (ObjectId x = 0; x < A.object_count(); ++x)
    hull.embedding.object_map.push_back(x);
  hull.embedding.action.assign(A.object_count(), std::vector<std::vector<CMatrix>>(A.object_count()));
  for (ObjectId x = 0; x < A.object_count(); ++x)
    for (ObjectId y = 0; y < A.object_count(); ++y)
      hull.embedding.action[x][y] = A.hom(x, y);
  return hull;
}

/// The sup-over-columns norm of a hull morphism f: X -> Y,
///   sup { |f b| : b column in hom(w, X), w an object, |b| <= 1 },
/// with |b| = sqrt|sum b_i* b_i|. Evaluated on random columns for every w,
/// then refined by power ascent: columns are pushed through high powers of
/// f* f, which stays inside hom(w, X) and concentrates on the top of the
/// spectrum. Never exceeds op_norm(f) beyond rounding.
inline double hull_norm_formula(const CStarCategory& A, const ObjectList& xs, const ObjectList& ys, const CMatrix& f,
                                int probes = 8, std::uint64_t seed = 0)
{
  if (f.rows() != list_dim(A, ys) || f.cols() != list_dim(A, xs))
    throw InvalidInput("hull_norm_formula: shape mismatch");
  std::mt19937_64 rng(seed);
  double best = 0.0;
  auto column_ratio = [&](const CMatrix& b) {
    const double nb = op_norm(b);
    if (nb <= 0.0)
      return;
    best = std::max(best, op_norm(f * b) / nb);
  };

  for (ObjectId w = 0; w < A.object_count(); ++w)
    for (int p = 0; p < probes; ++p)
      column_ratio(random_hull_morphism(A, {w}, xs, rng));

  CMatrix power = f.adjoint() * f;
  for (int k = 0; k < 48; ++k) {
    const double s = op_norm(power);
    if (s <= 0.0)
      return best;
    power /= s;
    power = power * power;
  }
  for (std::size_t i = 0; i < xs.size(); ++i)
    column_ratio(power * hull_inclusion(A, xs, i));
  for (ObjectId w = 0; w < A.object_count(); ++w)
    for (int p = 0; p < probes; ++p)
      column_ratio(power * random_hull_morphism(A, {w}, xs, rng));
  return best;
}

/// Endomorphism algebra of the full object list as a one-object category.
struct MatrixAlgebra
{
  CategoryRef algebra;
  ObjectList objects;            // the full non-repeating list
  std::vector<Index> offsets;    // block offset of each object
};

inline MatrixAlgebra matrix_algebra(const CategoryRef& base, const std::string& label = "Mat")
{
  const CStarCategory& A = *base;
  MatrixAlgebra out;
  out.objects = all_objects(A);
  out.offsets = list_offsets(A, out.objects);
  std::vector<std::vector<std::vector<CMatrix>>> homs(1, std::vector<std::vector<CMatrix>>(1));
  homs[0][0] = hull_hom_basis(A, out.objects, out.objects);
  out.algebra = share(CStarCategory({{label, list_dim(A, out.objects)}}, std::move(homs)));
  return out;
}

/// Idempotent completion on the pairs (x, id) for every x followed by the
/// supplied (x, p). Object (x, p) is realized on C^{rank p} through an
/// isometry V with V V* = p; hom((x,p),(y,q)) = V_q* hom(x,y) V_p.
struct IdempotentCompletion
{
  CategoryRef base;
  CategoryRef cat;
  std::vector<ObjectId> base_object;
  std::vector<CMatrix> projection;
  std::vector<CMatrix> isometry;
};

inline IdempotentCompletion idempotent_completion(const CategoryRef& base,
                                                  const std::vector<std::pair<ObjectId, CMatrix>>& projections,
                                                  const Tolerance& tol = {})
{
  const CStarCategory& A = *base;
  IdempotentCompletion out;
  out.base = base;
  for (ObjectId x = 0; x < A.object_count(); ++x) {
    const CMatrix id = CMatrix::Identity(A.dim(x), A.dim(x));
    if (!A.contains(x, x, id, tol))
      throw InvalidInput("idempotent_completion: category is not unital at " + A.label(x));
    out.base_object.push_back(x);
    out.projection.push_back(id);
    out.isometry.push_back(id);
  }
  for (const auto& [x, p] : projections) {
    A.check_object(x);
    if (p.rows() != A.dim(x) || p.cols() != A.dim(x))
      throw InvalidInput("idempotent_completion: projection has the wrong shape");
    const double scale = std::max(1.0, op_norm(p));
    if (!tol.accepts(op_norm(p - p.adjoint()), scale) || !tol.accepts(op_norm(p * p - p), scale))
      throw InvalidInput("idempotent_completion: supplied morphism is not a projection");
    if (!A.contains(x, x, p, tol))
      throw InvalidInput("idempotent_completion: projection is not an endomorphism of " + A.label(x));
    RankedSvd svd = ranked_svd(p, 0.5);
    if (svd.u.cols() == 0)
      throw InvalidInput("idempotent_completion: zero projection gives a zero-dimensional object");
    out.base_object.push_back(x);
    out.projection.push_back(svd.u * svd.u.adjoint());
    out.isometry.push_back(svd.u);
  }

  const std::size_t n = out.base_object.size();
  std::vector<ObjectInfo> objects;
  for (std::size_t s = 0; s < n; ++s) {
    std::string label = A.label(out.base_object[s]);
    if (s >= A.object_count())
      label = "(" + label + ",p" + std::to_string(s - A.object_count()) + ")";
    objects.push_back({label, out.isometry[s].cols()});
  }
  std::vector<std::vector<std::vector<CMatrix>>> homs(n, std::vector<std::vector<CMatrix>>(n));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<CMatrix> compressed;
      for (const CMatrix& b : A.hom(out.base_object[s], out.base_object[t]))
        compressed.push_back(out.isometry[t].adjoint() * b * out.isometry[s]);
      homs[s][t] = orthonormal_span(compressed, tol);
    }
  out.cat = share(CStarCategory(std::move(objects), std::move(homs)));
  return out;
}

} // namespace cstarcat

#endif
