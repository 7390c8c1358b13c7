#ifndef CSTARCAT_BIMODULES_HPP
#define CSTARCAT_BIMODULES_HPP

#include <optional>
#include <random>
#include <vector>

#include "category.hpp"
#include "hull.hpp"
#include "modules.hpp"

namespace cstarcat
{

/// Right Hilbert A-B bimodule: a C*-functor A -> Hilb B. Objects go to
/// f.g.p. B-modules and each basis morphism of A to an operator block.
struct Bimodule
{
  CategoryRef source;
  CategoryRef target;
  std::vector<HilbertModule> ob_map;
  /// mor_map[x][x2][k]: block of the k-th basis element of A(x, x2),
  /// an operator E(x) -> E(x2).
  std::vector<std::vector<std::vector<CMatrix>>> mor_map;

  const HilbertModule& at(ObjectId x) const { return ob_map.at(x); }

  /// Operator block of an arbitrary morphism, by linearity.
  CMatrix action(const Morphism& a) const
  {
    const CVector c = source->coordinates(a.src, a.dst, a.mat);
    CMatrix m = CMatrix::Zero(at(a.dst).dim(), at(a.src).dim());
    const auto& blocks = mor_map.at(a.src).at(a.dst);
    for (std::size_t k = 0; k < blocks.size(); ++k)
      m += c(static_cast<Index>(k)) * blocks[k];
    return m;
  }

  ModuleOperator act(const Morphism& a) const { return ModuleOperator{at(a.src), at(a.dst), action(a)}; }
};

/// Natural transformation between bimodules A -> Hilb B.
struct BimoduleMap
{
  Bimodule dom;
  Bimodule cod;
  std::vector<ModuleOperator> components;
};

// Hull extension -------------------------------------------------------------

/// Base over B of E(x_1) (+) ... (+) E(x_n).
inline ObjectList extended_base(const Bimodule& E, const ObjectList& xs)
{
  ObjectList out;
  for (ObjectId x : xs)
    out = concat(out, E.at(x).base);
  return out;
}

inline std::vector<Index> extended_offsets(const Bimodule& E, const ObjectList& xs)
{
  std::vector<Index> off(xs.size() + 1, 0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    off[i + 1] = off[i] + E.at(xs[i]).dim();
  return off;
}

/// E applied blockwise to a hull morphism T : X -> Y over A.
inline CMatrix extend_morphism(const Bimodule& E, const ObjectList& xs, const ObjectList& ys, const CMatrix& T)
{
  const CStarCategory& A = *E.source;
  const auto xo = list_offsets(A, xs), yo = list_offsets(A, ys);
  if (T.rows() != yo.back() || T.cols() != xo.back())
    throw InvalidInput("extend_morphism: hull morphism has the wrong shape");
  const auto eo = extended_offsets(E, xs), fo = extended_offsets(E, ys);
  CMatrix out = CMatrix::Zero(fo.back(), eo.back());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      Morphism a{xs[i], ys[j], T.block(yo[j], xo[i], A.dim(ys[j]), A.dim(xs[i]))};
      out.block(fo[j], eo[i], E.at(ys[j]).dim(), E.at(xs[i]).dim()) = E.action(a);
    }
  return out;
}

// Standard bimodules -----------------------------------------------------------

/// Yoneda bimodule: x |-> h_x, a |-> postcomposition by a.
inline Bimodule yoneda_bimodule(const CategoryRef& A)
{
  Bimodule E{A, A, {}, {}};
  const std::size_t n = A->object_count();
  for (ObjectId x = 0; x < n; ++x)
    E.ob_map.push_back(representable(A, x));
  E.mor_map.assign(n, std::vector<std::vector<CMatrix>>(n));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      E.mor_map[x][y] = A->hom(x, y);
  return E;
}

/// The bimodule iota_B o F of a C*-functor F : A -> B.
inline Bimodule bimodule_from_functor(const CStarFunctor& F, const Tolerance& tol = {})
{
  FunctorReport fr = verify_functor(F, tol);
  if (!fr.report.passed())
    throw InvalidInput("bimodule_from_functor: input is not a C*-functor");
  const std::size_t n = F.source->object_count();
  Bimodule E{F.source, F.target, {}, F.action};
  for (ObjectId x = 0; x < n; ++x)
    E.ob_map.push_back(representable(F.target, F.object_map[x]));
  return E;
}

// Verification -------------------------------------------------------------------

inline Report verify_bimodule(const Bimodule& E, const Tolerance& tol = {}, int samples = 4, std::uint64_t seed = 0)
{
  const CStarCategory& A = *E.source;
  const CStarCategory& B = *E.target;
  const std::size_t n = A.object_count();
  if (E.ob_map.size() != n || E.mor_map.size() != n)
    throw InvalidInput("verify_bimodule: tables do not match the source category");
  Worst proj, membership, compressed, func, star, decrease;
  for (ObjectId x = 0; x < n; ++x) {
    const HilbertModule& M = E.at(x);
    if (M.cat != E.target)
      throw InvalidInput("verify_bimodule: module over the wrong category");
    proj.update(op_norm(M.proj - M.proj.adjoint()) + op_norm(M.proj * M.proj - M.proj), 1.0);
    proj.update(hull_span_residual(B, M.base, M.base, M.proj), 1.0);
    if (E.mor_map[x].size() != n)
      throw InvalidInput("verify_bimodule: morphism table is malformed");
  }
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y) {
      const auto& blocks = E.mor_map[x][y];
      if (blocks.size() != A.hom(x, y).size())
        throw InvalidInput("verify_bimodule: action does not cover the hom basis");
      for (const CMatrix& T : blocks) {
        if (T.rows() != E.at(y).dim() || T.cols() != E.at(x).dim())
          throw InvalidInput("verify_bimodule: operator block has the wrong shape");
        membership.update(hull_span_residual(B, E.at(x).base, E.at(y).base, T), T.norm());
        compressed.update(op_norm(E.at(y).proj * T * E.at(x).proj - T), op_norm(T));
      }
      for (std::size_t k = 0; k < A.hom(x, y).size(); ++k) {
        Morphism a = A.basis_element(x, y, k);
        CMatrix Ea = E.action(a);
        star.update(op_norm(E.action(involute(a)) - Ea.adjoint()), op_norm(Ea));
        for (ObjectId z = 0; z < n; ++z)
          for (std::size_t l = 0; l < A.hom(y, z).size(); ++l) {
            Morphism b = A.basis_element(y, z, l);
            CMatrix lhs = E.action(Morphism{x, z, b.mat * a.mat});
            CMatrix rhs = E.action(b) * Ea;
            func.update(op_norm(lhs - rhs), op_norm(rhs));
          }
      }
    }
  std::mt19937_64 rng(seed);
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y) {
      if (A.hom(x, y).empty())
        continue;
      for (int s = 0; s < samples; ++s) {
        Morphism a = A.random_morphism(x, y, rng);
        const double na = norm(a);
        decrease.update(std::max(0.0, op_norm(E.action(a)) - na), na);
      }
    }
  Report report;
  report.add("module_projections", proj.residual, tol.bound(proj.scale));
  report.add("operator_membership", membership.residual, tol.bound(membership.scale));
  report.add("operator_compression", compressed.residual, tol.bound(compressed.scale));
  report.add("functoriality", func.residual, tol.bound(func.scale));
  report.add("star_preserving", star.residual, tol.bound(star.scale));
  report.add("norm_decreasing", decrease.residual, tol.bound(decrease.scale));
  return report;
}

/// Orthonormal basis of the operator space K(E, F) = Q hom(X, Y) P.
inline std::vector<CMatrix> operator_space_basis(const HilbertModule& E, const HilbertModule& F,
                                                 const Tolerance& tol = {})
{
  std::vector<CMatrix> compressed;
  for (const CMatrix& b : hull_hom_basis(*E.cat, E.base, F.base))
    compressed.push_back(F.proj * b * E.proj);
  return orthonormal_span(compressed, tol);
}

/// Non-degeneracy in the unital setting, decided twice: by the unit
/// criterion E(id_x) = id_{E(x)} and by the rank of E(A(y,y)) o K(E(x),E(y))
/// against K(E(x),E(y)).
struct NondegeneracyReport
{
  bool unit_criterion = true;
  bool rank_criterion = true;
  Report report;

  bool nondegenerate() const { return unit_criterion && rank_criterion; }
};

inline NondegeneracyReport check_nondegenerate(const Bimodule& E, const Tolerance& tol = {})
{
  const CStarCategory& A = *E.source;
  const std::size_t n = A.object_count();
  NondegeneracyReport out;
  double unit_residual = 0.0;
  for (ObjectId x = 0; x < n; ++x) {
    const double r = op_norm(E.action(A.identity(x)) - E.at(x).proj);
    unit_residual = std::max(unit_residual, r);
  }
  out.unit_criterion = tol.accepts(unit_residual, 1.0);
  Index deficit = 0;
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y) {
      // E(A(y,y)) o K = q o K, q the unit of the image algebra, since the
      // compacts are a left ideal; rank read off the gram of q o K
      std::vector<CMatrix> K = operator_space_basis(E.at(x), E.at(y), tol);
      if (K.empty())
        continue;
      CMatrix support = CMatrix::Zero(E.at(y).dim(), E.at(y).dim());
      for (const CMatrix& a : E.mor_map[y][y])
        support += a * a.adjoint();
      const CMatrix q = range_projection(support, tol);
      const Index k = static_cast<Index>(K.size());
      CMatrix gram(k, k);
      for (Index i = 0; i < k; ++i) {
        const CMatrix qi = q * K[static_cast<std::size_t>(i)];
        for (Index j = 0; j <= i; ++j) {
          gram(i, j) = frobenius_inner(qi, K[static_cast<std::size_t>(j)]);
          gram(j, i) = std::conj(gram(i, j));
        }
      }
      const RVector spectrum = hermitian_spectrum(gram);
      const Index rank = (spectrum.array() > tol.bound(1.0)).count();
      deficit = std::max(deficit, k - rank);
    }
  out.rank_criterion = deficit == 0;
  out.report.add("unit_criterion", unit_residual, tol.bound(1.0));
  out.report.add("rank_deficit", static_cast<double>(deficit), 0.0);
  return out;
}

/// Fullness: inner products <E(x)(y'), E(x)(y)> span every B(y, y').
struct FullnessReport
{
  bool full = true;
  std::vector<std::vector<Index>> span_rank;  // [y][y2]
};

inline FullnessReport check_full(const Bimodule& E, const Tolerance& tol = {})
{
  const CStarCategory& A = *E.source;
  const CStarCategory& B = *E.target;
  const std::size_t nb = B.object_count();
  FullnessReport out;
  out.span_rank.assign(nb, std::vector<Index>(nb, 0));
  std::vector<std::vector<std::vector<CMatrix>>> evals(A.object_count());
  for (ObjectId x = 0; x < A.object_count(); ++x)
    for (ObjectId y = 0; y < nb; ++y)
      evals[x].push_back(evaluation_basis(E.at(x), y, tol));
  for (ObjectId y = 0; y < nb; ++y)
    for (ObjectId y2 = 0; y2 < nb; ++y2) {
      std::vector<CMatrix> products;
      for (ObjectId x = 0; x < A.object_count(); ++x)
        for (const CMatrix& e : evals[x][y2])
          for (const CMatrix& f : evals[x][y])
            products.push_back(e.adjoint() * f);
      const Index rank = static_cast<Index>(orthonormal_span(products, tol).size());
      out.span_rank[y][y2] = rank;
      if (rank != B.hom_dim(y, y2))
        out.full = false;
    }
  return out;
}

// Imprimitivity --------------------------------------------------------------------

/// Bimodule together with its left A-valued product
///   _A<e, f> = E^{-1}(theta^{e,f}),
/// decoded from the (injective) action.
struct BiHilbertData
{
  Bimodule bimodule;
  /// decoder[x][x2]: pseudo-inverse of the stacked images of A(x, x2).
  std::vector<std::vector<CMatrix>> decoder;
  std::vector<std::vector<CMatrix>> images;
};

/// _A<e, f> in A(xf, xe) for e in E(xe)(y), f in E(xf)(y).
inline Morphism left_product(const BiHilbertData& D, ObjectId xe, const ModuleElement& e, ObjectId xf,
                             const ModuleElement& f)
{
  if (e.at != f.at)
    throw InvalidInput("left_product: elements live at different objects");
  CMatrix theta = e.col * f.col.adjoint();
  CVector c = D.decoder.at(xf).at(xe) * vectorize(theta);
  return Morphism{xf, xe, D.bimodule.source->from_coordinates(xf, xe, c)};
}

struct ImprimitivityReport
{
  bool faithful = false;
  bool onto_compacts = false;
  bool full = false;
  Report report;
  std::optional<BiHilbertData> data;

  bool imprimitivity() const { return faithful && onto_compacts && full; }
};

inline ImprimitivityReport check_imprimitivity(const Bimodule& E, const Tolerance& tol = {}, int samples = 3,
                                               std::uint64_t seed = 0)
{
  const CStarCategory& A = *E.source;
  const CStarCategory& B = *E.target;
  const std::size_t n = A.object_count();
  ImprimitivityReport out;
  out.faithful = true;
  out.onto_compacts = true;
  Index kernel = 0, cokernel = 0;
  BiHilbertData D{E, {}, {}};
  D.decoder.assign(n, std::vector<CMatrix>(n));
  D.images.assign(n, std::vector<CMatrix>(n));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId x2 = 0; x2 < n; ++x2) {
      const auto& blocks = E.mor_map[x][x2];
      const Index rows = E.at(x2).dim() * E.at(x).dim();
      CMatrix V(rows, static_cast<Index>(blocks.size()));
      for (std::size_t k = 0; k < blocks.size(); ++k)
        V.col(static_cast<Index>(k)) = vectorize(blocks[k]);
      const Index rank = numerical_rank(V, tol);
      const Index kdim = static_cast<Index>(operator_space_basis(E.at(x), E.at(x2), tol).size());
      kernel = std::max(kernel, static_cast<Index>(blocks.size()) - rank);
      cokernel = std::max(cokernel, kdim - rank);
      if (rank < static_cast<Index>(blocks.size()))
        out.faithful = false;
      if (rank < kdim)
        out.onto_compacts = false;
      D.images[x][x2] = V;
      D.decoder[x][x2] = pseudo_inverse(V, tol);
    }
  out.full = check_full(E, tol).full;
  out.report.add("faithful_kernel_dim", static_cast<double>(kernel), 0.0);
  out.report.add("compacts_cokernel_dim", static_cast<double>(cokernel), 0.0);
  out.report.add_flag("full", out.full);
  if (!out.faithful || !out.onto_compacts)
    return out;

  // the forced left product and its identities on samples
  std::mt19937_64 rng(seed);
  Worst identity, forced, norms;
  for (ObjectId y = 0; y < B.object_count(); ++y)
    for (ObjectId x = 0; x < n; ++x)
      for (ObjectId x2 = 0; x2 < n; ++x2)
        for (int s = 0; s < samples; ++s) {
          ModuleElement e = random_element(E.at(x2), y, rng);
          ModuleElement f = random_element(E.at(x), y, rng);
          ObjectId y2 = static_cast<ObjectId>(rng() % B.object_count());
          ModuleElement g = random_element(E.at(x), y2, rng);
          Morphism l = left_product(D, x2, e, x, f);
          CMatrix lhs = E.action(l) * g.col;
          CMatrix rhs = e.col * (f.col.adjoint() * g.col);
          identity.update(op_norm(lhs - rhs), op_norm(rhs));
          CMatrix theta = e.col * f.col.adjoint();
          forced.update(op_norm(E.action(l) - theta), op_norm(theta));
          Morphism ll = left_product(D, x2, e, x2, e);
          const double left_norm = norm(ll), right_norm = op_norm(e.col.adjoint() * e.col);
          norms.update(std::abs(left_norm - right_norm), right_norm);
        }
  out.report.add("imprimitivity_identity", identity.residual, tol.bound(identity.scale));
  out.report.add("forced_left_product", forced.residual, tol.bound(forced.scale));
  out.report.add("norm_equality", norms.residual, tol.bound(norms.scale));
  out.data = std::move(D);
  return out;
}

// Tensor products ---------------------------------------------------------------

/// M (x)_A E by the projection method: E extended over the hull applied to
/// the projection of M.
inline HilbertModule tensor(const HilbertModule& M, const Bimodule& E)
{
  if (M.cat != E.source)
    throw InvalidInput("tensor: module is not over the bimodule's source category");
  ObjectList base = extended_base(E, M.base);
  CMatrix p = extend_morphism(E, M.base, M.base, M.proj);
  p = 0.5 * (p + p.adjoint());
  return HilbertModule{E.target, std::move(base), std::move(p)};
}

/// The image of a simple tensor m (x) f, m in M(y), f in E(y)(b).
inline ModuleElement tensor_element(const HilbertModule& M, const Bimodule& E, const ModuleElement& m,
                                    const ModuleElement& f)
{
  return ModuleElement{f.at, extend_morphism(E, {m.at}, M.base, m.col) * f.col};
}

/// T (x) id_E for an operator T over the source category.
inline ModuleOperator tensor_operator(const ModuleOperator& T, const Bimodule& E)
{
  return ModuleOperator{tensor(T.dom, E), tensor(T.cod, E), extend_morphism(E, T.dom.base, T.cod.base, T.block)};
}

/// E (x)_B F : x |-> E(x) (x) F.
inline Bimodule tensor(const Bimodule& E, const Bimodule& F)
{
  if (E.target != F.source)
    throw InvalidInput("tensor: bimodules are not composable");
  const std::size_t n = E.source->object_count();
  Bimodule out{E.source, F.target, {}, {}};
  for (ObjectId x = 0; x < n; ++x)
    out.ob_map.push_back(tensor(E.at(x), F));
  out.mor_map.assign(n, std::vector<std::vector<CMatrix>>(n));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (const CMatrix& T : E.mor_map[x][y])
        out.mor_map[x][y].push_back(extend_morphism(F, E.at(x).base, E.at(y).base, T));
  return out;
}

struct SimpleTensor
{
  ModuleElement m; // in M(y), y = m.at
  ModuleElement f; // in E(y)(b), b = f.at
};

/// Generators m_i (x) e_j with m_i = P iota_i and e_j the canonical
/// generators of E(x_i); they generate M (x) E as a B-module.
inline std::vector<SimpleTensor> canonical_tensors(const HilbertModule& M, const Bimodule& E)
{
  std::vector<SimpleTensor> out;
  for (std::size_t i = 0; i < M.base.size(); ++i) {
    ModuleElement m{M.base[i], M.proj * hull_inclusion(*M.cat, M.base, i)};
    const HilbertModule& Ex = E.at(M.base[i]);
    for (std::size_t j = 0; j < Ex.base.size(); ++j)
      out.push_back({m, ModuleElement{Ex.base[j], Ex.proj * hull_inclusion(*Ex.cat, Ex.base, j)}});
  }
  return out;
}

/// B-valued semi-inner products <m (x) f, m' (x) f'> = <f, E(<m, m'>) f'>.
inline CMatrix tensor_gram(const Bimodule& E, const std::vector<SimpleTensor>& ts)
{
  const CStarCategory& B = *E.target;
  std::vector<Index> off(ts.size() + 1, 0);
  for (std::size_t k = 0; k < ts.size(); ++k)
    off[k + 1] = off[k] + B.dim(ts[k].f.at);
  CMatrix G = CMatrix::Zero(off.back(), off.back());
  for (std::size_t k = 0; k < ts.size(); ++k)
    for (std::size_t l = 0; l < ts.size(); ++l) {
      Morphism ip = inner_product(ts[k].m, ts[l].m);
      CMatrix acted = E.action(ip) * ts[l].f.col;
      G.block(off[k], off[l], B.dim(ts[k].f.at), B.dim(ts[l].f.at)) = ts[k].f.col.adjoint() * acted;
    }
  return G;
}

/// Independent construction of M (x)_A E: simple tensors, their Gram
/// matrix, and the quotient by its null space, presented from the Gram data.
struct TensorQuotient
{
  std::vector<SimpleTensor> tensors;
  ObjectList objects;  // B-objects the generators live at
  CMatrix gram;
  GramPresentation presentation;
};

inline TensorQuotient tensor_quotient_oracle(const HilbertModule& M, const Bimodule& E, int extra = 0,
                                             std::uint64_t seed = 0, const Tolerance& tol = {})
{
  if (M.cat != E.source)
    throw InvalidInput("tensor_quotient_oracle: module is not over the bimodule's source category");
  TensorQuotient q;
  q.tensors = canonical_tensors(M, E);
  std::mt19937_64 rng(seed);
  const std::size_t na = E.source->object_count(), nb = E.target->object_count();
  for (int k = 0; k < extra; ++k) {
    ObjectId y = static_cast<ObjectId>(rng() % na), b = static_cast<ObjectId>(rng() % nb);
    q.tensors.push_back({random_element(M, y, rng), random_element(E.at(y), b, rng)});
  }
  for (const SimpleTensor& t : q.tensors)
    q.objects.push_back(t.f.at);
  q.gram = tensor_gram(E, q.tensors);
  q.presentation = module_from_gram(E.target, q.objects, q.gram, tol);
  return q;
}

/// Images of simple tensors in the projection-method module, concatenated.
inline CMatrix tensor_images(const HilbertModule& M, const Bimodule& E, const std::vector<SimpleTensor>& ts)
{
  const CStarCategory& B = *E.target;
  Index width = 0;
  for (const SimpleTensor& t : ts)
    width += B.dim(t.f.at);
  CMatrix out(list_dim(B, extended_base(E, M.base)), width);
  Index off = 0;
  for (const SimpleTensor& t : ts) {
    out.middleCols(off, B.dim(t.f.at)) = tensor_element(M, E, t.m, t.f).col;
    off += B.dim(t.f.at);
  }
  return out;
}

/// Projection method against the quotient oracle: equal evaluation
/// dimensions and equal Gram spectra for the same simple tensors.
inline Report tensor_cross_check(const HilbertModule& M, const Bimodule& E, int extra = 4, std::uint64_t seed = 0,
                                 const Tolerance& tol = {})
{
  Report report;
  HilbertModule P = tensor(M, E);
  TensorQuotient Q = tensor_quotient_oracle(M, E, extra, seed, tol);
  Index dim_gap = 0;
  for (ObjectId b = 0; b < E.target->object_count(); ++b) {
    const Index dp = evaluation_dim(P, b, tol);
    const Index dq = evaluation_dim(Q.presentation.module, b, tol);
    dim_gap = std::max(dim_gap, std::abs(dp - dq));
  }
  CMatrix images = tensor_images(M, E, Q.tensors);
  RVector s1 = hermitian_spectrum(Q.gram);
  RVector s2 = hermitian_spectrum(images.adjoint() * images);
  const double spectrum_gap = s1.size() ? (s1 - s2).cwiseAbs().maxCoeff() : 0.0;
  const double scale = s1.size() ? s1.cwiseAbs().maxCoeff() : 0.0;
  report.add("evaluation_dimension_gap", static_cast<double>(dim_gap), 0.0);
  report.add("gram_spectrum_gap", spectrum_gap, tol.bound(scale));
  return report;
}

/// Operator determined by its values on generating columns: X S = T.
struct SolvedOperator
{
  ModuleOperator op;
  double consistency = 0.0; // |X S - T| relative to |T|
};

inline SolvedOperator operator_from_generators(const HilbertModule& dom, const HilbertModule& cod,
                                               const CMatrix& source_cols, const CMatrix& target_cols,
                                               const Tolerance& tol = {})
{
  CMatrix X = target_cols * pseudo_inverse(source_cols, tol);
  X = cod.proj * hull_project(*dom.cat, dom.base, cod.base, X) * dom.proj;
  const double scale = std::max(1.0, op_norm(target_cols));
  return SolvedOperator{ModuleOperator{dom, cod, X}, op_norm(X * source_cols - target_cols) / scale};
}

/// Unitarity residuals of an operator U : E -> F between modules.
struct UnitarityResiduals
{
  double isometry = 0.0;   // |U* U - id_E|
  double coisometry = 0.0; // |U U* - id_F|
  Index rank_deficit = 0;  // max over evaluation objects of dim F(b) - dim U(E(b))
};

inline UnitarityResiduals unitarity(const ModuleOperator& U, const Tolerance& tol = {})
{
  UnitarityResiduals r;
  r.isometry = op_norm(U.block.adjoint() * U.block - U.dom.proj);
  r.coisometry = op_norm(U.block * U.block.adjoint() - U.cod.proj);
  const CStarCategory& B = *U.dom.cat;
  for (ObjectId b = 0; b < B.object_count(); ++b) {
    std::vector<CMatrix> images;
    for (const CMatrix& e : evaluation_basis(U.dom, b, tol))
      images.push_back(U.block * e);
    const Index rank = static_cast<Index>(orthonormal_span(images, tol).size());
    r.rank_deficit = std::max(r.rank_deficit, evaluation_dim(U.cod, b, tol) - rank);
  }
  return r;
}

inline void add_unitarity(Report& report, const std::string& prefix, const UnitarityResiduals& u,
                          const Tolerance& tol)
{
  report.add(prefix + "isometry", u.isometry, tol.bound(1.0));
  report.add(prefix + "coisometry", u.coisometry, tol.bound(1.0));
  report.add(prefix + "rank_deficit", static_cast<double>(u.rank_deficit), 0.0);
}

// Coherence ------------------------------------------------------------------------

/// Associator (M (x) E) (x) F -> M (x) (E (x) F), (m (x) e) (x) f |-> m (x) (e (x) f),
/// solved from generating simple tensors.
inline SolvedOperator associator(const HilbertModule& M, const Bimodule& E, const Bimodule& F,
                                 const Tolerance& tol = {})
{
  HilbertModule ME = tensor(M, E);
  HilbertModule dom = tensor(ME, F);
  Bimodule EF = tensor(E, F);
  HilbertModule cod = tensor(M, EF);
  std::vector<CMatrix> src, dst;
  Index width = 0;
  for (const SimpleTensor& me : canonical_tensors(M, E)) {
    ModuleElement g = tensor_element(M, E, me.m, me.f);
    const HilbertModule& Fb = F.at(me.f.at);
    for (std::size_t l = 0; l < Fb.base.size(); ++l) {
      ModuleElement f{Fb.base[l], Fb.proj * hull_inclusion(*Fb.cat, Fb.base, l)};
      src.push_back(tensor_element(ME, F, g, f).col);
      ModuleElement ef = tensor_element(E.at(me.m.at), F, me.f, f);
      dst.push_back(tensor_element(M, EF, me.m, ef).col);
      width += f.col.cols();
    }
  }
  CMatrix S(dom.dim(), width), T(cod.dim(), width);
  Index off = 0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    S.middleCols(off, src[k].cols()) = src[k];
    T.middleCols(off, dst[k].cols()) = dst[k];
    off += src[k].cols();
  }
  return operator_from_generators(dom, cod, S, T, tol);
}

/// Right unitor M (x) iota_A -> M, m (x) a |-> m . a.
inline SolvedOperator right_unitor(const HilbertModule& M, const Tolerance& tol = {})
{
  Bimodule Y = yoneda_bimodule(M.cat);
  HilbertModule dom = tensor(M, Y);
  std::vector<CMatrix> src, dst;
  for (const SimpleTensor& t : canonical_tensors(M, Y)) {
    src.push_back(tensor_element(M, Y, t.m, t.f).col);
    dst.push_back(act(t.m, Morphism{t.f.at, t.m.at, t.f.col}).col);
  }
  Index width = 0;
  for (const CMatrix& s : src)
    width += s.cols();
  CMatrix S(dom.dim(), width), T(M.dim(), width);
  Index off = 0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    S.middleCols(off, src[k].cols()) = src[k];
    T.middleCols(off, dst[k].cols()) = dst[k];
    off += src[k].cols();
  }
  return operator_from_generators(dom, M, S, T, tol);
}

/// Left unitor component h_x (x) E -> E(x), a (x) f |-> E(a) f.
inline SolvedOperator left_unitor(const Bimodule& E, ObjectId x, const Tolerance& tol = {})
{
  HilbertModule h = representable(E.source, x);
  HilbertModule dom = tensor(h, E);
  std::vector<CMatrix> src, dst;
  Index width = 0;
  for (const SimpleTensor& t : canonical_tensors(h, E)) {
    src.push_back(tensor_element(h, E, t.m, t.f).col);
    dst.push_back(E.action(Morphism{t.m.at, x, t.m.col}) * t.f.col);
    width += t.f.col.cols();
  }
  CMatrix S(dom.dim(), width), T(E.at(x).dim(), width);
  Index off = 0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    S.middleCols(off, src[k].cols()) = src[k];
    T.middleCols(off, dst[k].cols()) = dst[k];
    off += src[k].cols();
  }
  return operator_from_generators(dom, E.at(x), S, T, tol);
}

inline BimoduleMap left_unitor(const Bimodule& E, const Tolerance& tol = {})
{
  BimoduleMap out{tensor(yoneda_bimodule(E.source), E), E, {}};
  for (ObjectId x = 0; x < E.source->object_count(); ++x)
    out.components.push_back(left_unitor(E, x, tol).op);
  return out;
}

inline BimoduleMap associator(const Bimodule& E, const Bimodule& F, const Bimodule& G, const Tolerance& tol = {})
{
  BimoduleMap out{tensor(tensor(E, F), G), tensor(E, tensor(F, G)), {}};
  for (ObjectId x = 0; x < E.source->object_count(); ++x)
    out.components.push_back(associator(E.at(x), F, G, tol).op);
  return out;
}

/// id_M (x) tau : M (x) H -> M (x) H'.
inline ModuleOperator whisker_left(const HilbertModule& M, const BimoduleMap& tau)
{
  HilbertModule dom = tensor(M, tau.dom), cod = tensor(M, tau.cod);
  const auto eo = extended_offsets(tau.dom, M.base), fo = extended_offsets(tau.cod, M.base);
  CMatrix diag = CMatrix::Zero(fo.back(), eo.back());
  for (std::size_t i = 0; i < M.base.size(); ++i) {
    const CMatrix& c = tau.components.at(M.base[i]).block;
    diag.block(fo[i], eo[i], c.rows(), c.cols()) = c;
  }
  return ModuleOperator{dom, cod, cod.proj * diag * dom.proj};
}

/// Naturality residual max |tau_y E(a) - E'(a) tau_x| over basis morphisms.
inline double naturality_residual(const BimoduleMap& tau)
{
  const CStarCategory& A = *tau.dom.source;
  double worst = 0.0;
  for (ObjectId x = 0; x < A.object_count(); ++x)
    for (ObjectId y = 0; y < A.object_count(); ++y)
      for (std::size_t k = 0; k < A.hom(x, y).size(); ++k)
        worst = std::max(worst, op_norm(tau.components.at(y).block * tau.dom.mor_map[x][y][k] -
                                        tau.cod.mor_map[x][y][k] * tau.components.at(x).block));
  return worst;
}

struct CoherenceResiduals
{
  double consistency = 0.0;
  double unitarity = 0.0;
  double diagram = 0.0;
};

/// Pentagon for M over A and E : A -> B, F : B -> C, G : C -> D.
inline CoherenceResiduals pentagon(const HilbertModule& M, const Bimodule& E, const Bimodule& F, const Bimodule& G,
                                   const Tolerance& tol = {})
{
  HilbertModule ME = tensor(M, E);
  SolvedOperator a1 = associator(ME, F, G, tol);
  SolvedOperator a2 = associator(M, E, tensor(F, G), tol);
  SolvedOperator mef = associator(M, E, F, tol);
  ModuleOperator b1 = tensor_operator(mef.op, G);
  SolvedOperator b2 = associator(M, tensor(E, F), G, tol);
  ModuleOperator b3 = whisker_left(M, associator(E, F, G, tol));
  CoherenceResiduals r;
  for (const SolvedOperator* s : {&a1, &a2, &mef, &b2})
    r.consistency = std::max(r.consistency, s->consistency);
  for (const ModuleOperator* u : {&a1.op, &a2.op, &b1, &b2.op, &b3}) {
    UnitarityResiduals ur = unitarity(*u, tol);
    r.unitarity = std::max({r.unitarity, ur.isometry, ur.coisometry, static_cast<double>(ur.rank_deficit)});
  }
  ModuleOperator lhs = compose(a2.op, a1.op);
  ModuleOperator rhs = compose(b3, compose(b2.op, b1));
  r.diagram = op_norm(lhs.block - rhs.block);
  return r;
}

/// Triangle for M over A and E : A -> B:
/// (id_M (x) lambda_E) o alpha_{M, iota_A, E} = rho_M (x) id_E.
inline CoherenceResiduals triangle(const HilbertModule& M, const Bimodule& E, const Tolerance& tol = {})
{
  Bimodule Y = yoneda_bimodule(M.cat);
  SolvedOperator alpha = associator(M, Y, E, tol);
  BimoduleMap lambda = left_unitor(E, tol);
  ModuleOperator id_lambda = whisker_left(M, lambda);
  SolvedOperator rho = right_unitor(M, tol);
  ModuleOperator rho_id = tensor_operator(rho.op, E);
  CoherenceResiduals r;
  r.consistency = std::max(alpha.consistency, rho.consistency);
  for (const ModuleOperator* u : {&alpha.op, &id_lambda, &rho.op, &rho_id}) {
    UnitarityResiduals ur = unitarity(*u, tol);
    r.unitarity = std::max({r.unitarity, ur.isometry, ur.coisometry, static_cast<double>(ur.rank_deficit)});
  }
  r.diagram = op_norm(compose(id_lambda, alpha.op).block - rho_id.block);
  return r;
}

// Conjugate bimodule -----------------------------------------------------------------

/// Conjugate of a bi-Hilbert A-B bimodule, a B-A bimodule. The module at y is
/// presented from generators e~ (one per basis vector e of E(x)(y), living at
/// x) with Gram entries <e~_k, e~_l>_A = _A<e_k, e_l>; the action is
/// b . e~ = (e . b*)~. Only a generating subset is kept as the base.
struct ConjugateBimodule
{
  Bimodule bimodule;
  std::vector<std::vector<std::vector<CMatrix>>> bases; // [y][x]: basis of E(x)(y)
  std::vector<std::vector<std::size_t>> first;           // [y][x]: index of the first generator from E(x)(y)
  std::vector<std::vector<Index>> offsets;               // [y]: column offsets of all generators in root[y]
  std::vector<CMatrix> root;                             // [y]: every generator, in the module's coordinates

  /// The image of the k-th basis vector of E(x)(y).
  ModuleElement generator(ObjectId y, ObjectId x, std::size_t k) const
  {
    const std::size_t g = first[y][x] + k;
    return ModuleElement{x, root[y].middleCols(offsets[y][g], offsets[y][g + 1] - offsets[y][g])};
  }
};

/// The element e~ of the conjugate module at y, for e in E(x)(y).
inline ModuleElement conjugate_element(const ConjugateBimodule& C, ObjectId x, const ModuleElement& e)
{
  const ObjectId y = e.at;
  const CStarCategory& A = *C.bimodule.target;
  const HilbertModule& Ey = C.bimodule.at(y);
  const auto& basis = C.bases.at(y).at(x);
  CMatrix col = CMatrix::Zero(Ey.dim(), A.dim(x));
  for (std::size_t l = 0; l < basis.size(); ++l)
    col += std::conj(frobenius_inner(basis[l], e.col)) * C.generator(y, x, l).col;
  return ModuleElement{x, col};
}

inline ConjugateBimodule conjugate_bimodule(const BiHilbertData& D, const Tolerance& tol = {})
{
  const Bimodule& E = D.bimodule;
  const CategoryRef& A = E.source;
  const CategoryRef& B = E.target;
  const std::size_t na = A->object_count(), nb = B->object_count();
  ConjugateBimodule C;
  C.bimodule = Bimodule{B, A, {}, {}};
  C.bases.assign(nb, std::vector<std::vector<CMatrix>>(na));
  C.first.assign(nb, std::vector<std::size_t>(na, 0));
  std::vector<ObjectList> gens(nb);
  std::vector<CMatrix> pinv_root(nb);
  for (ObjectId y = 0; y < nb; ++y) {
    std::vector<std::pair<ObjectId, CMatrix>> elems;
    for (ObjectId x = 0; x < na; ++x) {
      C.bases[y][x] = evaluation_basis(E.at(x), y, tol);
      C.first[y][x] = elems.size();
      for (const CMatrix& b : C.bases[y][x])
        elems.push_back({x, b});
    }
    for (const auto& [x, b] : elems)
      gens[y].push_back(x);
    const auto off = list_offsets(*A, gens[y]);
    CMatrix G = CMatrix::Zero(off.back(), off.back());
    for (std::size_t k = 0; k < elems.size(); ++k)
      for (std::size_t l = 0; l < elems.size(); ++l) {
        Morphism p = left_product(D, elems[k].first, ModuleElement{y, elems[k].second}, elems[l].first,
                                  ModuleElement{y, elems[l].second});
        G.block(off[k], off[l], p.mat.rows(), p.mat.cols()) = p.mat;
      }
    G = 0.5 * (G + G.adjoint());
    // keep generators while they enlarge the span of the columns of G^{1/2}
    const CMatrix full = frac_power(G, 0.5, tol);
    const Index rank = numerical_rank(full, tol);
    std::vector<std::size_t> keep;
    ObjectList kept;
    CMatrix span(full.rows(), 0);
    for (std::size_t k = 0; k < elems.size() && span.cols() < rank; ++k) {
      const Index w = off[k + 1] - off[k];
      CMatrix rest = full.middleCols(off[k], w);
      rest -= span * (span.adjoint() * rest);
      RankedSvd fresh = ranked_svd(rest, tol.bound(1.0));
      if (fresh.sigma.size() == 0)
        continue;
      CMatrix grown(full.rows(), span.cols() + fresh.u.cols());
      grown << span, fresh.u;
      span = grown;
      keep.push_back(k);
      kept.push_back(elems[k].first);
    }
    const auto sub = list_offsets(*A, kept);
    CMatrix cols(full.rows(), sub.back());
    for (std::size_t i = 0; i < keep.size(); ++i)
      cols.middleCols(sub[i], sub[i + 1] - sub[i]) = full.middleCols(off[keep[i]], off[keep[i] + 1] - off[keep[i]]);
    GramPresentation pres = module_from_gram(A, kept, cols.adjoint() * cols, tol);
    // partial isometry from the full presentation onto the kept one
    const CMatrix W = pres.root * pseudo_inverse(cols, tol);
    C.bimodule.ob_map.push_back(pres.module);
    C.root.push_back(W * full);
    C.offsets.push_back(off);
    pinv_root[y] = W * frac_power(G, -0.5, tol);
  }
  C.bimodule.mor_map.assign(nb, std::vector<std::vector<CMatrix>>(nb));
  for (ObjectId y = 0; y < nb; ++y)
    for (ObjectId y2 = 0; y2 < nb; ++y2) {
      const auto src_off = list_offsets(*A, gens[y]), dst_off = list_offsets(*A, gens[y2]);
      for (const CMatrix& b : B->hom(y, y2)) {
        // e_k . b* expanded in the basis at y2, conjugated
        CMatrix coeffs = CMatrix::Zero(dst_off.back(), src_off.back());
        for (ObjectId x = 0; x < na; ++x) {
          const auto& from = C.bases[y][x];
          const auto& to = C.bases[y2][x];
          for (std::size_t k = 0; k < from.size(); ++k) {
            CMatrix moved = from[k] * b.adjoint();
            for (std::size_t l = 0; l < to.size(); ++l) {
              const Complex c = frobenius_inner(to[l], moved);
              const std::size_t gk = C.first[y][x] + k, gl = C.first[y2][x] + l;
              coeffs.block(dst_off[gl], src_off[gk], A->dim(x), A->dim(x)) =
                std::conj(c) * CMatrix::Identity(A->dim(x), A->dim(x));
            }
          }
        }
        C.bimodule.mor_map[y][y2].push_back(C.root[y2] * coeffs * pinv_root[y].adjoint());
      }
    }
  return C;
}

// Morita maps ----------------------------------------------------------------------------

struct MoritaMap
{
  BimoduleMap map;
  std::vector<double> consistency;
  Report report;
  bool unitary() const { return report.passed(); }
};

/// phi : E~ (x)_A E -> iota_B, e~ (x) f |-> <e, f>_B.
inline MoritaMap morita_phi(const BiHilbertData& D, const ConjugateBimodule& C, const Tolerance& tol = {})
{
  const Bimodule& E = D.bimodule;
  const Bimodule& Et = C.bimodule;
  const CategoryRef& A = E.source;
  const CategoryRef& B = E.target;
  Bimodule dom = tensor(Et, E);
  Bimodule cod = yoneda_bimodule(B);
  MoritaMap out{BimoduleMap{dom, cod, {}}, {}, {}};
  Worst consistency;
  UnitarityResiduals worst;
  for (ObjectId y = 0; y < B->object_count(); ++y) {
    const HilbertModule& Ety = Et.at(y);
    std::vector<CMatrix> src, dst;
    Index width = 0;
    for (ObjectId x = 0; x < A->object_count(); ++x) {
      const HilbertModule& Ex = E.at(x);
      for (std::size_t k = 0; k < C.bases[y][x].size(); ++k) {
        ModuleElement et = C.generator(y, x, k);
        const CMatrix& e = C.bases[y][x][k];
        for (std::size_t j = 0; j < Ex.base.size(); ++j) {
          ModuleElement f{Ex.base[j], Ex.proj * hull_inclusion(*B, Ex.base, j)};
          src.push_back(tensor_element(Ety, E, et, f).col);
          dst.push_back(e.adjoint() * f.col);
          width += f.col.cols();
        }
      }
    }
    const HilbertModule& S = dom.at(y);
    const HilbertModule& T = cod.at(y);
    CMatrix Sm(S.dim(), width), Tm(T.dim(), width);
    Index o = 0;
    for (std::size_t k = 0; k < src.size(); ++k) {
      Sm.middleCols(o, src[k].cols()) = src[k];
      Tm.middleCols(o, dst[k].cols()) = dst[k];
      o += src[k].cols();
    }
    SolvedOperator s = operator_from_generators(S, T, Sm, Tm, tol);
    consistency.update(s.consistency, 1.0);
    UnitarityResiduals u = unitarity(s.op, tol);
    worst.isometry = std::max(worst.isometry, u.isometry);
    worst.coisometry = std::max(worst.coisometry, u.coisometry);
    worst.rank_deficit = std::max(worst.rank_deficit, u.rank_deficit);
    out.consistency.push_back(s.consistency);
    out.map.components.push_back(s.op);
  }
  out.report.add("well_defined", consistency.residual, tol.bound(1.0));
  add_unitarity(out.report, "", worst, tol);
  const double nat = naturality_residual(out.map);
  out.report.add("natural", nat, tol.bound(1.0));
  return out;
}

/// psi : E (x)_B E~ -> iota_A, e (x) f~ |-> _A<e, f>.
inline MoritaMap morita_psi(const BiHilbertData& D, const ConjugateBimodule& C, const Tolerance& tol = {})
{
  const Bimodule& E = D.bimodule;
  const Bimodule& Et = C.bimodule;
  const CategoryRef& A = E.source;
  const CategoryRef& B = E.target;
  Bimodule dom = tensor(E, Et);
  Bimodule cod = yoneda_bimodule(A);
  MoritaMap out{BimoduleMap{dom, cod, {}}, {}, {}};
  Worst consistency;
  UnitarityResiduals worst;
  for (ObjectId x = 0; x < A->object_count(); ++x) {
    const HilbertModule& Ex = E.at(x);
    std::vector<CMatrix> src, dst;
    Index width = 0;
    for (std::size_t i = 0; i < Ex.base.size(); ++i) {
      const ObjectId b = Ex.base[i];
      ModuleElement e{b, Ex.proj * hull_inclusion(*B, Ex.base, i)};
      const HilbertModule& Etb = Et.at(b);
      for (ObjectId x2 = 0; x2 < A->object_count(); ++x2)
        for (std::size_t k = 0; k < C.bases[b][x2].size(); ++k) {
          ModuleElement ft = C.generator(b, x2, k);
          ModuleElement f{b, C.bases[b][x2][k]};
          src.push_back(tensor_element(Ex, Et, e, ft).col);
          dst.push_back(left_product(D, x, e, x2, f).mat);
          width += A->dim(x2);
        }
    }
    const HilbertModule& S = dom.at(x);
    const HilbertModule& T = cod.at(x);
    CMatrix Sm(S.dim(), width), Tm(T.dim(), width);
    Index o = 0;
    for (std::size_t k = 0; k < src.size(); ++k) {
      Sm.middleCols(o, src[k].cols()) = src[k];
      Tm.middleCols(o, dst[k].cols()) = dst[k];
      o += src[k].cols();
    }
    SolvedOperator s = operator_from_generators(S, T, Sm, Tm, tol);
    consistency.update(s.consistency, 1.0);
    UnitarityResiduals u = unitarity(s.op, tol);
    worst.isometry = std::max(worst.isometry, u.isometry);
    worst.coisometry = std::max(worst.coisometry, u.coisometry);
    worst.rank_deficit = std::max(worst.rank_deficit, u.rank_deficit);
    out.consistency.push_back(s.consistency);
    out.map.components.push_back(s.op);
  }
  out.report.add("well_defined", consistency.residual, tol.bound(1.0));
  add_unitarity(out.report, "", worst, tol);
  out.report.add("natural", naturality_residual(out.map), tol.bound(1.0));
  return out;
}

/// Full Morita verdict for a bimodule: imprimitivity checks, then (when the
/// left product exists) the conjugate and both Morita maps.
struct MoritaVerdict
{
  ImprimitivityReport imprimitivity;
  std::optional<ConjugateBimodule> conjugate;
  std::optional<MoritaMap> phi;
  std::optional<MoritaMap> psi;

  bool equivalence() const { return phi && psi && phi->unitary() && psi->unitary(); }
};

inline MoritaVerdict morita_check(const Bimodule& E, const Tolerance& tol = {})
{
  MoritaVerdict v;
  v.imprimitivity = check_imprimitivity(E, tol);
  if (!v.imprimitivity.data)
    return v;
  v.conjugate = conjugate_bimodule(*v.imprimitivity.data, tol);
  v.phi = morita_phi(*v.imprimitivity.data, *v.conjugate, tol);
  v.psi = morita_psi(*v.imprimitivity.data, *v.conjugate, tol);
  return v;
}

/// Mat(A) acting on the free module (+)_x h_x: a Mat(A)-A imprimitivity
/// bimodule.
struct MatEquivalence
{
  MatrixAlgebra mat;
  Bimodule bimodule;
};

inline MatEquivalence mat_equivalence(const CategoryRef& A)
{
  MatEquivalence out{matrix_algebra(A), {}};
  out.bimodule = Bimodule{out.mat.algebra, A, {free_module(A, out.mat.objects)}, {}};
  out.bimodule.mor_map.assign(1, std::vector<std::vector<CMatrix>>(1));
  out.bimodule.mor_map[0][0] = out.mat.algebra->hom(0, 0);
  return out;
}

// Eilenberg-Watts ------------------------------------------------------------------------

/// psi_M : M (x) E -> F(M), m (x) e |-> F(epsilon_m)(e) with F = - (x) E.
/// The source is the quotient-oracle presentation; the target is the
/// projection-method module, so psi compares the two constructions.
struct EwResult
{
  TensorQuotient source;
  HilbertModule target;
  SolvedOperator psi;
  Report report;
  bool unitary() const { return report.passed(); }
};

inline EwResult ew_map(const HilbertModule& M, const Bimodule& E, int extra = 4, std::uint64_t seed = 0,
                       const Tolerance& tol = {})
{
  NondegeneracyReport nd = check_nondegenerate(E, tol);
  if (!nd.nondegenerate())
    throw InvalidInput("ew_map: bimodule is degenerate");
  EwResult r;
  r.source = tensor_quotient_oracle(M, E, extra, seed, tol);
  r.target = tensor(M, E);
  // F(epsilon_m) = epsilon_m (x) id_E applied to e
  CMatrix images(r.target.dim(), r.source.presentation.root.cols());
  Index off = 0;
  for (const SimpleTensor& t : r.source.tensors) {
    ModuleOperator eps = yoneda_epsilon(M, t.m);
    ModuleOperator Feps = tensor_operator(eps, E);
    images.middleCols(off, t.f.col.cols()) = Feps.block * t.f.col;
    off += t.f.col.cols();
  }
  r.psi = operator_from_generators(r.source.presentation.module, r.target, r.source.presentation.root, images, tol);
  const double scale = std::max(1.0, op_norm(r.source.gram));
  r.report.add("well_defined", r.psi.consistency, tol.bound(1.0));
  const double ip = op_norm(images.adjoint() * images - r.source.gram);
  r.report.add("inner_products", ip, tol.bound(scale));
  add_unitarity(r.report, "", unitarity(r.psi.op, tol), tol);
  return r;
}

/// Extension of a natural family tau_x : E(x) -> E'(x) to M (x) E -> M (x) E',
/// by two routes: solving on simple tensors m (x) e |-> m (x) tau(e), and
/// conjugating the diagonal map on the free cover.
struct WhiskerResult
{
  ModuleOperator by_tensors;
  ModuleOperator by_cover;
  double consistency = 0.0;
  double agreement = 0.0;
};

inline WhiskerResult whisker_transform(const BimoduleMap& tau, const HilbertModule& M, const Tolerance& tol = {})
{
  const double nat = naturality_residual(tau);
  if (!tol.accepts(nat, 1.0))
    throw InvalidInput("whisker_transform: family is not natural");
  const Bimodule& E = tau.dom;
  const Bimodule& Ep = tau.cod;
  HilbertModule dom = tensor(M, E), cod = tensor(M, Ep);
  std::vector<CMatrix> src, dst;
  Index width = 0;
  for (const SimpleTensor& t : canonical_tensors(M, E)) {
    src.push_back(tensor_element(M, E, t.m, t.f).col);
    ModuleElement moved = apply(tau.components.at(t.m.at), t.f);
    dst.push_back(tensor_element(M, Ep, t.m, moved).col);
    width += t.f.col.cols();
  }
  CMatrix S(dom.dim(), width), T(cod.dim(), width);
  Index off = 0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    S.middleCols(off, src[k].cols()) = src[k];
    T.middleCols(off, dst[k].cols()) = dst[k];
    off += src[k].cols();
  }
  SolvedOperator solved = operator_from_generators(dom, cod, S, T, tol);

  FreeCover cover = free_cover(M);
  ModuleOperator phiE = tensor_operator(cover.phi, E);
  ModuleOperator phiEp = tensor_operator(cover.phi, Ep);
  const auto eo = extended_offsets(E, M.base), fo = extended_offsets(Ep, M.base);
  CMatrix diag = CMatrix::Zero(fo.back(), eo.back());
  for (std::size_t i = 0; i < M.base.size(); ++i) {
    const CMatrix& c = tau.components.at(M.base[i]).block;
    diag.block(fo[i], eo[i], c.rows(), c.cols()) = c;
  }
  ModuleOperator by_cover{dom, cod, phiEp.block * diag * phiE.block.adjoint()};
  WhiskerResult r{solved.op, by_cover, solved.consistency, op_norm(solved.op.block - by_cover.block)};
  return r;
}

} // namespace cstarcat

#endif
