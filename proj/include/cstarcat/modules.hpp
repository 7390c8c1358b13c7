#ifndef CSTARCAT_MODULES_HPP
#define CSTARCAT_MODULES_HPP

#include <random>
#include <vector>

#include "category.hpp"
#include "hull.hpp"

namespace cstarcat
{

/// Right Hilbert module in finitely-generated-projective presentation: the
/// image of a projection P in End(X) of the additive hull. Its value at y is
/// { P c : c in hom([y], X) } and elements are dim(X) x dim(y) columns.
struct HilbertModule
{
  CategoryRef cat;
  ObjectList base;
  CMatrix proj;

  Index dim() const { return proj.rows(); }
};

/// An element of E(at): a P-invariant column of morphisms c_i in A(at, x_i).
struct ModuleElement
{
  ObjectId at = 0;
  CMatrix col;
};

/// Adjointable operator E -> F: a hull morphism T in hom(X, Y) with Q T P = T.
/// In finite dimension every adjointable operator is compact.
struct ModuleOperator
{
  HilbertModule dom;
  HilbertModule cod;
  CMatrix block;
};

inline HilbertModule make_module(const CategoryRef& cat, ObjectList base, CMatrix proj, const Tolerance& tol = {})
{
  for (ObjectId x : base)
    cat->check_object(x);
  const Index d = list_dim(*cat, base);
  if (proj.rows() != d || proj.cols() != d)
    throw InvalidInput("module projection has the wrong shape");
  detail::require_finite(proj, "module projection");
  const double scale = std::max(1.0, op_norm(proj));
  if (!tol.accepts(op_norm(proj - proj.adjoint()), scale) || !tol.accepts(op_norm(proj * proj - proj), scale))
    throw InvalidInput("module projection is not a projection");
  if (!tol.accepts(hull_span_residual(*cat, base, base, proj), proj.norm()))
    throw InvalidInput("module projection is not in End" + list_label(*cat, base));
  return HilbertModule{cat, std::move(base), std::move(proj)};
}

/// h_x: base [x], projection the identity; <a, b> = a* b.
inline HilbertModule representable(const CategoryRef& cat, ObjectId x)
{
  cat->check_object(x);
  return HilbertModule{cat, {x}, CMatrix::Identity(cat->dim(x), cat->dim(x))};
}

inline HilbertModule free_module(const CategoryRef& cat, const ObjectList& base)
{
  for (ObjectId x : base)
    cat->check_object(x);
  const Index d = list_dim(*cat, base);
  return HilbertModule{cat, base, CMatrix::Identity(d, d)};
}

inline HilbertModule zero_module(const CategoryRef& cat, const ObjectList& base)
{
  const Index d = list_dim(*cat, base);
  return HilbertModule{cat, base, CMatrix::Zero(d, d)};
}

/// Element of E(y) from a column; the column is projected through P and the
/// projection residual must be within tolerance.
inline ModuleElement make_element(const HilbertModule& E, ObjectId y, const CMatrix& col, const Tolerance& tol = {})
{
  E.cat->check_object(y);
  if (col.rows() != E.dim() || col.cols() != E.cat->dim(y))
    throw InvalidInput("module element has the wrong shape");
  if (!tol.accepts(hull_span_residual(*E.cat, {y}, E.base, col), col.norm()))
    throw InvalidInput("module element entries are not morphisms of the category");
  CMatrix projected = E.proj * col;
  if (!tol.accepts(op_norm(projected - col), op_norm(col)))
    throw InvalidInput("module element is not invariant under the module projection");
  return ModuleElement{y, std::move(projected)};
}

/// Orthonormal basis of the vector space E(y).
inline std::vector<CMatrix> evaluation_basis(const HilbertModule& E, ObjectId y, const Tolerance& tol = {})
{
  std::vector<CMatrix> images;
  for (const CMatrix& b : hull_hom_basis(*E.cat, {y}, E.base))
    images.push_back(E.proj * b);
  return orthonormal_span(images, tol);
}

inline Index evaluation_dim(const HilbertModule& E, ObjectId y, const Tolerance& tol = {})
{
  return static_cast<Index>(evaluation_basis(E, y, tol).size());
}

template <class Rng>
ModuleElement random_element(const HilbertModule& E, ObjectId y, Rng& rng)
{
  return ModuleElement{y, E.proj * random_hull_morphism(*E.cat, {y}, E.base, rng)};
}

/// <e, f> = sum_i e_i* f_i, a morphism f.at -> e.at.
inline Morphism inner_product(const ModuleElement& e, const ModuleElement& f)
{
  if (e.col.rows() != f.col.rows())
    throw InvalidInput("inner_product: elements belong to different modules");
  return Morphism{f.at, e.at, e.col.adjoint() * f.col};
}

/// Module norm |e| = sqrt|<e,e>|.
inline double element_norm(const ModuleElement& e) { return op_norm(e.col); }

/// e . a for a : a.src -> e.at.
inline ModuleElement act(const ModuleElement& e, const Morphism& a)
{
  if (a.dst != e.at)
    throw InvalidInput("act: morphism does not end at the element's object");
  return ModuleElement{a.src, e.col * a.mat};
}

inline ModuleElement operator+(const ModuleElement& a, const ModuleElement& b)
{
  if (a.at != b.at)
    throw InvalidInput("sum of elements at different objects");
  return ModuleElement{a.at, a.col + b.col};
}

inline ModuleElement operator*(Complex s, const ModuleElement& e) { return ModuleElement{e.at, s * e.col}; }

// Operators -----------------------------------------------------------------

inline ModuleOperator make_operator(const HilbertModule& dom, const HilbertModule& cod, const CMatrix& block,
                                    const Tolerance& tol = {})
{
  if (block.rows() != cod.dim() || block.cols() != dom.dim())
    throw InvalidInput("operator block has the wrong shape");
  if (!tol.accepts(hull_span_residual(*dom.cat, dom.base, cod.base, block), block.norm()))
    throw InvalidInput("operator block is not a hull morphism");
  CMatrix compressed = cod.proj * block * dom.proj;
  if (!tol.accepts(op_norm(compressed - block), op_norm(block)))
    throw InvalidInput("operator is not compressed by the module projections");
  return ModuleOperator{dom, cod, std::move(compressed)};
}

inline ModuleOperator identity_operator(const HilbertModule& E) { return ModuleOperator{E, E, E.proj}; }

inline ModuleOperator zero_operator(const HilbertModule& E, const HilbertModule& F)
{
  return ModuleOperator{E, F, CMatrix::Zero(F.dim(), E.dim())};
}

inline ModuleElement apply(const ModuleOperator& T, const ModuleElement& e)
{
  if (e.col.rows() != T.dom.dim())
    throw InvalidInput("apply: element is not in the operator's domain");
  return ModuleElement{e.at, T.block * e.col};
}

inline ModuleOperator adjoint(const ModuleOperator& T) { return ModuleOperator{T.cod, T.dom, T.block.adjoint()}; }

inline ModuleOperator compose(const ModuleOperator& S, const ModuleOperator& T)
{
  if (S.dom.base != T.cod.base || S.dom.dim() != T.cod.dim())
    throw CompositionError("operator composition: modules do not match");
  return ModuleOperator{T.dom, S.cod, S.block * T.block};
}

inline double norm(const ModuleOperator& T) { return op_norm(T.block); }

// Single-rank operators and the Yoneda correspondence ------------------------

/// theta^{f,e} : E -> F, e' |-> f . <e, e'>; e in E(x), f in F(x).
inline ModuleOperator single_rank(const HilbertModule& E, const HilbertModule& F, const ModuleElement& f,
                                  const ModuleElement& e)
{
  if (e.at != f.at)
    throw InvalidInput("single_rank: elements live at different objects");
  if (e.col.rows() != E.dim() || f.col.rows() != F.dim())
    throw InvalidInput("single_rank: elements do not belong to the given modules");
  return ModuleOperator{E, F, f.col * e.col.adjoint()};
}

inline bool is_representable(const HilbertModule& E, const Tolerance& tol = {})
{
  return E.base.size() == 1 && tol.accepts(op_norm(E.proj - CMatrix::Identity(E.dim(), E.dim())), 1.0);
}

/// eta(T) = T(id_x) for T : h_x -> F; isometric.
inline ModuleElement yoneda_eta(const ModuleOperator& T, const Tolerance& tol = {})
{
  if (!is_representable(T.dom, tol))
    throw InvalidInput("yoneda_eta: domain is not representable");
  return ModuleElement{T.dom.base.front(), T.block};
}

/// epsilon_f : h_{f.at} -> F, a |-> f . a, with adjoint f' |-> <f, f'>.
inline ModuleOperator yoneda_epsilon(const HilbertModule& F, const ModuleElement& f)
{
  if (f.col.rows() != F.dim())
    throw InvalidInput("yoneda_epsilon: element is not in the module");
  return ModuleOperator{representable(F.cat, f.at), F, f.col};
}

/// [<e_i, e_j>] as a morphism of End([x_1..x_n]) in the hull.
inline CMatrix gram_matrix(const std::vector<ModuleElement>& elements)
{
  if (elements.empty())
    return CMatrix(0, 0);
  Index width = 0;
  for (const ModuleElement& e : elements) {
    if (e.col.rows() != elements.front().col.rows())
      throw InvalidInput("gram_matrix: elements from different modules");
    width += e.col.cols();
  }
  CMatrix C(elements.front().col.rows(), width);
  Index off = 0;
  for (const ModuleElement& e : elements) {
    C.middleCols(off, e.col.cols()) = e.col;
    off += e.col.cols();
  }
  return C.adjoint() * C;
}

inline ObjectList element_objects(const std::vector<ModuleElement>& elements)
{
  ObjectList xs;
  for (const ModuleElement& e : elements)
    xs.push_back(e.at);
  return xs;
}

// Direct sums, covers, splittings --------------------------------------------

struct DirectSum
{
  HilbertModule sum;
  std::vector<ModuleOperator> inclusions;
};

inline DirectSum direct_sum(const std::vector<HilbertModule>& modules)
{
  if (modules.empty())
    throw InvalidInput("direct_sum: empty family");
  const CategoryRef& cat = modules.front().cat;
  DirectSum out;
  ObjectList base;
  Index d = 0;
  for (const HilbertModule& E : modules) {
    if (E.cat != cat)
      throw InvalidInput("direct_sum: modules over different categories");
    base = concat(base, E.base);
    d += E.dim();
  }
  CMatrix proj = CMatrix::Zero(d, d);
  Index off = 0;
  for (const HilbertModule& E : modules) {
    proj.block(off, off, E.dim(), E.dim()) = E.proj;
    off += E.dim();
  }
  out.sum = HilbertModule{cat, base, proj};
  off = 0;
  for (const HilbertModule& E : modules) {
    CMatrix block = CMatrix::Zero(d, E.dim());
    block.middleRows(off, E.dim()) = E.proj;
    out.inclusions.push_back(ModuleOperator{E, out.sum, block});
    off += E.dim();
  }
  return out;
}

/// Exact free cover: phi : (+)_{x in X} h_x -> E with block P, so
/// phi phi* = id_E and phi* phi = P.
struct FreeCover
{
  HilbertModule free;
  ModuleOperator phi;
};

inline FreeCover free_cover(const HilbertModule& E)
{
  HilbertModule F = free_module(E.cat, E.base);
  return FreeCover{F, ModuleOperator{F, E, E.proj}};
}

/// Splitting E = ker P (+) im P of a projection operator on E.
struct ProjectionSplit
{
  HilbertModule kernel;
  HilbertModule image;
  DirectSum sum;
  ModuleOperator unitary; // E -> kernel (+) image
};

inline ProjectionSplit split_projection(const ModuleOperator& P, const Tolerance& tol = {})
{
  if (P.dom.base != P.cod.base || !tol.accepts(op_norm(P.dom.proj - P.cod.proj), 1.0))
    throw InvalidInput("split_projection: operator is not an endomorphism");
  const double scale = std::max(1.0, op_norm(P.block));
  if (!tol.accepts(op_norm(P.block - P.block.adjoint()), scale) ||
      !tol.accepts(op_norm(P.block * P.block - P.block), scale))
    throw InvalidInput("split_projection: operator is not a projection");
  const HilbertModule& E = P.dom;
  CMatrix p = 0.5 * (P.block + P.block.adjoint());
  ProjectionSplit out{HilbertModule{E.cat, E.base, E.proj - p}, HilbertModule{E.cat, E.base, p}, {}, {}};
  out.sum = direct_sum({out.kernel, out.image});
  CMatrix u(2 * E.dim(), E.dim());
  u << out.kernel.proj, out.image.proj;
  out.unitary = ModuleOperator{E, out.sum.sum, u};
  return out;
}

/// Module generated by columns over X whose Gram matrix is G in End(Z):
/// presented as (Z, range projection of G), with the k-th generator sent to
/// G^{1/2} iota_k. This is how abstract (generator, inner product) data is
/// ingested.
struct GramPresentation
{
  HilbertModule module;
  CMatrix root; // G^{1/2}; column block k is the image of generator k
};

inline GramPresentation module_from_gram(const CategoryRef& cat, const ObjectList& objects, const CMatrix& gram,
                                         const Tolerance& tol = {})
{
  const Index d = list_dim(*cat, objects);
  if (gram.rows() != d || gram.cols() != d)
    throw InvalidInput("module_from_gram: Gram matrix has the wrong shape");
  if (!psd_check(gram, tol))
    throw InvalidInput("module_from_gram: Gram matrix is not positive");
  if (!tol.accepts(hull_span_residual(*cat, objects, objects, gram), gram.norm()))
    throw InvalidInput("module_from_gram: Gram matrix is not a hull endomorphism");
  CMatrix h = 0.5 * (gram + gram.adjoint());
  CMatrix root = frac_power(h, 0.5, tol);
  CMatrix proj = range_projection(root, tol);
  return GramPresentation{HilbertModule{cat, objects, proj}, root};
}

/// Submodule of E generated by the given elements.
inline HilbertModule module_from_generators(const HilbertModule& E, const std::vector<ModuleElement>& gens,
                                            const Tolerance& tol = {})
{
  Index width = 0;
  for (const ModuleElement& g : gens)
    width += g.col.cols();
  CMatrix C(E.dim(), width);
  Index off = 0;
  for (const ModuleElement& g : gens) {
    if (g.col.rows() != E.dim())
      throw InvalidInput("module_from_generators: generator not in module");
    C.middleCols(off, g.col.cols()) = E.proj * g.col;
    off += g.col.cols();
  }
  CMatrix p = range_projection(C, tol);
  return HilbertModule{E.cat, E.base, p};
}

// Extension to the additive hull ---------------------------------------------

/// The same module read over a materialized additive hull: base entries are
/// replaced by their singleton lists. Evaluation at a hull object [y_1..y_k]
/// is E(y_1) (+) ... (+) E(y_k), and inner products assemble blockwise.
inline HilbertModule extend_to_hull(const HilbertModule& E, const AdditiveHull& hull)
{
  if (hull.base != E.cat)
    throw InvalidInput("extend_to_hull: hull built over a different category");
  ObjectList base;
  for (ObjectId x : E.base)
    base.push_back(hull.singleton(x));
  return HilbertModule{hull.cat, base, E.proj};
}

} // namespace cstarcat

#endif
