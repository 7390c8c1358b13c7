#ifndef CSTARCAT_CATEGORY_HPP
#define CSTARCAT_CATEGORY_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "numc.hpp"
#include "report.hpp"

namespace cstarcat
{

using ObjectId = std::size_t;
using ObjectList = std::vector<ObjectId>;

struct ObjectInfo
{
  std::string label;
  Index dim = 0;
};

/// A morphism src -> dst realized as a dim(dst) x dim(src) matrix.
struct Morphism
{
  ObjectId src = 0;
  ObjectId dst = 0;
  CMatrix mat;
};

/// Concrete finite-dimensional C*-category: finitely many objects, each a
/// Hilbert space C^dim, and hom-spaces stored as Frobenius-orthonormal bases
/// of *-closed operator spaces. Closure under composition and adjoints is a
/// checked property (verify_category), not a construction guarantee.
class CStarCategory
{
public:
  CStarCategory() = default;

  /// Hom-spaces given by orthonormal bases; bases[src][dst].
  CStarCategory(std::vector<ObjectInfo> objects, std::vector<std::vector<std::vector<CMatrix>>> bases,
                const Tolerance& tol = {})
    : objects_(std::move(objects)), homs_(std::move(bases))
  {
    validate_shapes();
    for (ObjectId x = 0; x < object_count(); ++x)
      for (ObjectId y = 0; y < object_count(); ++y) {
        const auto& basis = homs_[x][y];
        for (std::size_t i = 0; i < basis.size(); ++i)
          for (std::size_t j = 0; j < basis.size(); ++j) {
            const Complex ip = frobenius_inner(basis[i], basis[j]);
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(ip - expected) > tol.bound(1.0))
              throw InvalidInput("hom basis (" + label(x) + "," + label(y) + ") is not orthonormal");
          }
      }
  }

  /// Hom-spaces spanned by arbitrary generators; generators[src][dst].
  static CStarCategory from_generators(std::vector<ObjectInfo> objects,
                                       const std::vector<std::vector<std::vector<CMatrix>>>& generators,
                                       const Tolerance& tol = {})
  {
    CStarCategory cat;
    cat.objects_ = std::move(objects);
    cat.homs_ = generators;
    cat.validate_shapes();
    for (auto& row : cat.homs_)
      for (auto& basis : row)
        basis = orthonormal_span(basis, tol);
    return cat;
  }

  std::size_t object_count() const { return objects_.size(); }
  const std::vector<ObjectInfo>& objects() const { return objects_; }
  const std::string& label(ObjectId x) const { return objects_.at(x).label; }
  Index dim(ObjectId x) const { return objects_.at(x).dim; }

  const std::vector<CMatrix>& hom(ObjectId src, ObjectId dst) const { return homs_.at(src).at(dst); }
  Index hom_dim(ObjectId src, ObjectId dst) const { return static_cast<Index>(hom(src, dst).size()); }

  void check_object(ObjectId x) const
  {
    if (x >= object_count())
      throw InvalidInput("object index " + std::to_string(x) + " out of range");
  }

  /// Orthogonal-projection coordinates of mat in the hom basis.
  CVector coordinates(ObjectId src, ObjectId dst, const CMatrix& mat) const
  {
    const auto& basis = hom(src, dst);
    CVector c(static_cast<Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k)
      c(static_cast<Index>(k)) = frobenius_inner(basis[k], mat);
    return c;
  }

  CMatrix from_coordinates(ObjectId src, ObjectId dst, const CVector& c) const
  {
    CMatrix m = CMatrix::Zero(dim(dst), dim(src));
    const auto& basis = hom(src, dst);
    for (std::size_t k = 0; k < basis.size(); ++k)
      m += c(static_cast<Index>(k)) * basis[k];
    return m;
  }

  /// Frobenius distance of mat from hom(src, dst).
  double span_residual(ObjectId src, ObjectId dst, const CMatrix& mat) const
  {
    return cstarcat::span_residual(mat, hom(src, dst));
  }

  bool contains(ObjectId src, ObjectId dst, const CMatrix& mat, const Tolerance& tol = {}) const
  {
    return tol.accepts(span_residual(src, dst, mat), mat.norm());
  }

  /// Validated morphism; throws ClosureViolation if mat is off the hom-space.
  Morphism morphism(ObjectId src, ObjectId dst, CMatrix mat, const Tolerance& tol = {}) const
  {
    check_object(src);
    check_object(dst);
    if (mat.rows() != dim(dst) || mat.cols() != dim(src))
      throw InvalidInput("morphism shape does not match objects");
    detail::require_finite(mat, "morphism");
    if (!contains(src, dst, mat, tol))
      throw ClosureViolation("matrix is not in hom(" + label(src) + "," + label(dst) + ")");
    return Morphism{src, dst, std::move(mat)};
  }

  Morphism basis_element(ObjectId src, ObjectId dst, std::size_t k) const
  {
    return Morphism{src, dst, hom(src, dst).at(k)};
  }

  Morphism identity(ObjectId x) const { return Morphism{x, x, CMatrix::Identity(dim(x), dim(x))}; }

  Morphism zero(ObjectId src, ObjectId dst) const
  {
    return Morphism{src, dst, CMatrix::Zero(dim(dst), dim(src))};
  }

  template <class Rng>
  Morphism random_morphism(ObjectId src, ObjectId dst, Rng& rng) const
  {
    const auto& basis = hom(src, dst);
    CVector c = random_gaussian(static_cast<Index>(basis.size()), 1, rng);
    return Morphism{src, dst, from_coordinates(src, dst, c)};
  }

  Index total_dim() const
  {
    Index d = 0;
    for (const auto& o : objects_)
      d += o.dim;
    return d;
  }

private:
  void validate_shapes() const
  {
    const std::size_t n = objects_.size();
    for (const auto& o : objects_)
      if (o.dim <= 0)
        throw InvalidInput("object '" + o.label + "' must have positive dimension");
    if (homs_.size() != n)
      throw InvalidInput("hom table has wrong number of rows");
    for (ObjectId x = 0; x < n; ++x) {
      if (homs_[x].size() != n)
        throw InvalidInput("hom table has wrong number of columns");
      for (ObjectId y = 0; y < n; ++y)
        for (const CMatrix& m : homs_[x][y]) {
          if (m.rows() != objects_[y].dim || m.cols() != objects_[x].dim)
            throw InvalidInput("hom(" + objects_[x].label + "," + objects_[y].label + ") has a badly shaped matrix");
          detail::require_finite(m, "hom basis");
        }
    }
  }

  std::vector<ObjectInfo> objects_;
  std::vector<std::vector<std::vector<CMatrix>>> homs_;
};

using CategoryRef = std::shared_ptr<const CStarCategory>;

inline CategoryRef share(CStarCategory cat) { return std::make_shared<const CStarCategory>(std::move(cat)); }

inline Morphism compose(const CStarCategory& cat, const Morphism& f, const Morphism& g, const Tolerance& tol = {})
{
  if (g.dst != f.src)
    throw CompositionError("compose: g ends at '" + cat.label(g.dst) + "' but f starts at '" + cat.label(f.src) + "'");
  CMatrix prod = f.mat * g.mat;
  if (!cat.contains(g.src, f.dst, prod, tol))
    throw ClosureViolation("compose: product left hom(" + cat.label(g.src) + "," + cat.label(f.dst) + ")");
  return Morphism{g.src, f.dst, std::move(prod)};
}

inline Morphism involute(const Morphism& f) { return Morphism{f.dst, f.src, f.mat.adjoint()}; }

inline Morphism operator+(const Morphism& a, const Morphism& b)
{
  if (a.src != b.src || a.dst != b.dst)
    throw CompositionError("sum of morphisms between different objects");
  return Morphism{a.src, a.dst, a.mat + b.mat};
}

inline Morphism operator*(Complex s, const Morphism& a) { return Morphism{a.src, a.dst, s * a.mat}; }

inline double norm(const Morphism& a) { return op_norm(a.mat); }

struct Factorization
{
  Morphism v; // x -> y
  Morphism w; // x -> x, positive
};

/// u = v o w with w = (u* u)^{1/4} and v = u o w^+ (pseudo-inverse).
inline Factorization factorize(const CStarCategory& cat, const Morphism& u, const Tolerance& tol = {})
{
  CMatrix uu = u.mat.adjoint() * u.mat;
  CMatrix w = frac_power(uu, 0.25, tol);
  CMatrix v = u.mat * frac_power(uu, -0.25, tol);
  Factorization f{Morphism{u.src, u.dst, std::move(v)}, Morphism{u.src, u.src, std::move(w)}};
  if (!cat.contains(u.src, u.dst, f.v.mat, tol) || !cat.contains(u.src, u.src, f.w.mat, tol))
    throw ClosureViolation("factorize: factors left their hom-spaces");
  return f;
}

/// Mirrored factorization u = s o t with s = (u u*)^{1/4} in A(y,y), t in A(x,y).
struct LeftFactorization
{
  Morphism s; // y -> y, positive
  Morphism t; // x -> y
};

inline LeftFactorization factorize_left(const CStarCategory& cat, const Morphism& u, const Tolerance& tol = {})
{
  Factorization f = factorize(cat, involute(u), tol);
  return LeftFactorization{involute(f.w), involute(f.v)};
}

/// Unitary part a (a* a)^{-1/2} of an invertible morphism.
inline Morphism polar_unitary(const CStarCategory& cat, const Morphism& a, const Tolerance& tol = {})
{
  if (a.mat.rows() != a.mat.cols())
    throw NotInvertible("polar_unitary: objects have different dimensions");
  if (a.mat.size() == 0 || ranked_svd(a.mat, tol.atol).sigma.size() < a.mat.cols())
    throw NotInvertible("polar_unitary: morphism is singular");
  CMatrix u = a.mat * frac_power(a.mat.adjoint() * a.mat, -0.5, tol);
  if (!cat.contains(a.src, a.dst, u, tol))
    throw ClosureViolation("polar_unitary: unitary part left the hom-space");
  return Morphism{a.src, a.dst, std::move(u)};
}

/// Axiom check of a concrete C*-category: composition and involution closure
/// on basis elements, units, and the C*-identity and positivity on samples.
inline Report verify_category(const CStarCategory& cat, const Tolerance& tol = {}, int samples = 4,
                              std::uint64_t seed = 0)
{
  Report report;
  const std::size_t n = cat.object_count();
  Worst comp, invol, unit, cstar, positive, submult;

  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (ObjectId z = 0; z < n; ++z)
        for (const CMatrix& g : cat.hom(x, y))
          for (const CMatrix& f : cat.hom(y, z)) {
            CMatrix fg = f * g;
            comp.update(cat.span_residual(x, z, fg), fg.norm());
          }

  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (const CMatrix& b : cat.hom(x, y))
        invol.update(cat.span_residual(y, x, b.adjoint()), 1.0);

  for (ObjectId x = 0; x < n; ++x) {
    const CMatrix id = CMatrix::Identity(cat.dim(x), cat.dim(x));
    unit.update(cat.span_residual(x, x, id), id.norm());
  }

  std::mt19937_64 rng(seed);
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y) {
      if (cat.hom(x, y).empty())
        continue;
      for (int s = 0; s < samples; ++s) {
        Morphism a = cat.random_morphism(x, y, rng);
        CMatrix aa = a.mat.adjoint() * a.mat;
        const double na = op_norm(a.mat);
        cstar.update(std::abs(op_norm(aa) - na * na), na * na);
        const double scale = op_norm(aa);
        positive.update(std::max(0.0, -min_eigenvalue(aa)), scale);
        for (ObjectId z = 0; z < n; ++z) {
          if (cat.hom(y, z).empty())
            continue;
          Morphism b = cat.random_morphism(y, z, rng);
          const double nb = op_norm(b.mat);
          submult.update(std::max(0.0, op_norm(b.mat * a.mat) - na * nb), na * nb);
        }
      }
    }

  report.add("composition_closure", comp.residual, tol.bound(comp.scale));
  report.add("involution_closure", invol.residual, tol.bound(invol.scale));
  report.add("unit_membership", unit.residual, tol.bound(unit.scale));
  report.add("cstar_identity", cstar.residual, tol.bound(cstar.scale));
  report.add("positive_spectrum", positive.residual, tol.bound(positive.scale));
  report.add("submultiplicative", submult.residual, tol.bound(submult.scale));
  return report;
}

/// Linear *-functor given by its values on hom bases.
struct CStarFunctor
{
  CategoryRef source;
  CategoryRef target;
  std::vector<ObjectId> object_map;
  /// action[x][y][k] = image of the k-th basis element of source hom(x,y).
  std::vector<std::vector<std::vector<CMatrix>>> action;

  Morphism apply(const Morphism& a) const
  {
    const CVector c = source->coordinates(a.src, a.dst, a.mat);
    const ObjectId fx = object_map.at(a.src), fy = object_map.at(a.dst);
    CMatrix m = CMatrix::Zero(target->dim(fy), target->dim(fx));
    const auto& images = action.at(a.src).at(a.dst);
    for (std::size_t k = 0; k < images.size(); ++k)
      m += c(static_cast<Index>(k)) * images[k];
    return Morphism{fx, fy, std::move(m)};
  }

  static CStarFunctor identity(const CategoryRef& cat)
  {
    CStarFunctor f{cat, cat, {}, {}};
    const std::size_t n = cat->object_count();
    for (ObjectId x = 0; x < n; ++x)
      f.object_map.push_back(x);
    f.action.assign(n, std::vector<std::vector<CMatrix>>(n));
    for (ObjectId x = 0; x < n; ++x)
      for (ObjectId y = 0; y < n; ++y)
        f.action[x][y] = cat->hom(x, y);
    return f;
  }
};

/// Functor axioms plus norm behaviour: *-preservation and multiplicativity on
/// basis pairs, norm decrease on samples, and isometry wherever the action on
/// a hom-space is injective. Per-hom-space injectivity is recorded as
/// informational flags named "injective(x,y)" that do not affect the verdict.
struct FunctorReport
{
  Report report;
  std::vector<std::vector<bool>> injective;
};

inline FunctorReport verify_functor(const CStarFunctor& F, const Tolerance& tol = {}, int samples = 4,
                                    std::uint64_t seed = 0)
{
  const CStarCategory& A = *F.source;
  const CStarCategory& B = *F.target;
  const std::size_t n = A.object_count();
  FunctorReport out;
  Report& report = out.report;
  if (F.object_map.size() != n || F.action.size() != n)
    throw InvalidInput("functor tables do not match the source category");
  for (ObjectId x = 0; x < n; ++x) {
    B.check_object(F.object_map[x]);
    if (F.action[x].size() != n)
      throw InvalidInput("functor action table is malformed");
    for (ObjectId y = 0; y < n; ++y) {
      if (F.action[x][y].size() != A.hom(x, y).size())
        throw InvalidInput("functor action does not cover the hom basis");
      for (const CMatrix& m : F.action[x][y])
        if (m.rows() != B.dim(F.object_map[y]) || m.cols() != B.dim(F.object_map[x]))
          throw InvalidInput("functor image has the wrong shape");
    }
  }

  Worst membership, mult, star, unit, decrease, isometry;
  out.injective.assign(n, std::vector<bool>(n, true));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y) {
      for (const CMatrix& m : F.action[x][y])
        membership.update(B.span_residual(F.object_map[x], F.object_map[y], m), m.norm());
      for (std::size_t k = 0; k < A.hom(x, y).size(); ++k) {
        Morphism a = A.basis_element(x, y, k);
        Morphism fa_star = involute(F.apply(a));
        Morphism f_astar = F.apply(involute(a));
        star.update(op_norm(fa_star.mat - f_astar.mat), op_norm(fa_star.mat));
        for (ObjectId z = 0; z < n; ++z)
          for (std::size_t l = 0; l < A.hom(y, z).size(); ++l) {
            Morphism b = A.basis_element(y, z, l);
            CMatrix lhs = F.apply(Morphism{x, z, b.mat * a.mat}).mat;
            CMatrix rhs = F.apply(b).mat * F.apply(a).mat;
            mult.update(op_norm(lhs - rhs), op_norm(rhs));
          }
      }
      const auto& images = F.action[x][y];
      if (!images.empty())
        out.injective[x][y] = static_cast<std::size_t>(orthonormal_span(images, tol).size()) == images.size();
    }
  for (ObjectId x = 0; x < n; ++x) {
    CMatrix fid = F.apply(A.identity(x)).mat;
    // units go to projections; unitality is not required
    unit.update(op_norm(fid * fid - fid) + op_norm(fid - fid.adjoint()), 1.0);
  }

  std::mt19937_64 rng(seed);
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y) {
      if (A.hom(x, y).empty())
        continue;
      for (int s = 0; s < samples; ++s) {
        Morphism a = A.random_morphism(x, y, rng);
        const double na = norm(a), nfa = norm(F.apply(a));
        decrease.update(std::max(0.0, nfa - na), na);
        if (out.injective[x][y])
          isometry.update(std::abs(nfa - na), na);
      }
    }

  report.add("image_membership", membership.residual, tol.bound(membership.scale));
  report.add("star_preserving", star.residual, tol.bound(star.scale));
  report.add("multiplicative", mult.residual, tol.bound(mult.scale));
  report.add("units_to_projections", unit.residual, tol.bound(unit.scale));
  report.add("norm_decreasing", decrease.residual, tol.bound(decrease.scale));
  report.add("isometric_where_injective", isometry.residual, tol.bound(isometry.scale));
  return out;
}

} // namespace cstarcat

#endif
