#ifndef CSTARCAT_GENERATORS_HPP
#define CSTARCAT_GENERATORS_HPP

#include <random>
#include <string>
#include <vector>

#include "bimodules.hpp"
#include "category.hpp"
#include "hull.hpp"
#include "modules.hpp"

namespace cstarcat
{

// Groupoids ----------------------------------------------------------------------

/// Finite groupoid given by tables. compose[g][h] = g o h (defined iff
/// dst(h) == src(g), else -1).
struct FiniteGroupoid
{
  std::vector<std::string> objects;
  std::vector<ObjectId> src, dst;
  std::vector<std::vector<long>> compose;
  std::vector<std::size_t> inverse;
  std::vector<std::size_t> identity;

  std::size_t size() const { return src.size(); }
};

inline void validate_groupoid(const FiniteGroupoid& G)
{
  const std::size_t n = G.size(), no = G.objects.size();
  auto bad = [](const std::string& what) { throw InvalidInput("groupoid: " + what); };
  if (no == 0)
    bad("no objects");
  if (G.dst.size() != n || G.compose.size() != n || G.inverse.size() != n || G.identity.size() != no)
    bad("table sizes disagree");
  for (std::size_t g = 0; g < n; ++g) {
    if (G.src[g] >= no || G.dst[g] >= no || G.compose[g].size() != n || G.inverse[g] >= n)
      bad("table entry out of range");
    for (std::size_t h = 0; h < n; ++h) {
      const long gh = G.compose[g][h];
      if ((G.dst[h] == G.src[g]) != (gh >= 0))
        bad("composition defined on the wrong pairs");
      if (gh >= 0 && (static_cast<std::size_t>(gh) >= n || G.src[gh] != G.src[h] || G.dst[gh] != G.dst[g]))
        bad("composite has the wrong endpoints");
    }
  }
  for (std::size_t x = 0; x < no; ++x) {
    const std::size_t e = G.identity[x];
    if (e >= n || G.src[e] != x || G.dst[e] != x)
      bad("identity has the wrong endpoints");
  }
  for (std::size_t g = 0; g < n; ++g) {
    if (G.compose[g][G.identity[G.src[g]]] != static_cast<long>(g) ||
        G.compose[G.identity[G.dst[g]]][g] != static_cast<long>(g))
      bad("identity law fails");
    const std::size_t gi = G.inverse[g];
    if (G.compose[g][gi] != static_cast<long>(G.identity[G.dst[g]]) ||
        G.compose[gi][g] != static_cast<long>(G.identity[G.src[g]]))
      bad("inverse law fails");
    for (std::size_t h = 0; h < n; ++h) {
      if (G.compose[g][h] < 0)
        continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (G.compose[h][k] < 0)
          continue;
        if (G.compose[G.compose[g][h]][k] != G.compose[g][G.compose[h][k]])
          bad("composition is not associative");
      }
    }
  }
}

/// One-object groupoid from a group multiplication table (element 0 is the unit).
inline FiniteGroupoid groupoid_from_group(const std::vector<std::vector<std::size_t>>& table,
                                          const std::string& label = "*")
{
  const std::size_t n = table.size();
  FiniteGroupoid G{{label}, std::vector<ObjectId>(n, 0), std::vector<ObjectId>(n, 0), {}, {}, {0}};
  G.compose.assign(n, std::vector<long>(n));
  G.inverse.assign(n, 0);
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t h = 0; h < n; ++h) {
      G.compose[g][h] = static_cast<long>(table.at(g).at(h));
      if (table[g][h] == 0)
        G.inverse[g] = h;
    }
  validate_groupoid(G);
  return G;
}

inline FiniteGroupoid cyclic_group(std::size_t n)
{
  std::vector<std::vector<std::size_t>> t(n, std::vector<std::size_t>(n));
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t h = 0; h < n; ++h)
      t[g][h] = (g + h) % n;
  return groupoid_from_group(t, "Z" + std::to_string(n));
}

/// Pair groupoid on k objects: exactly one morphism (i -> j) for each pair.
inline FiniteGroupoid codiscrete(std::size_t k)
{
  FiniteGroupoid G;
  for (std::size_t i = 0; i < k; ++i)
    G.objects.push_back("o" + std::to_string(i));
  auto id = [k](std::size_t i, std::size_t j) { return i * k + j; }; // morphism i -> j
  const std::size_t n = k * k;
  G.src.resize(n);
  G.dst.resize(n);
  G.inverse.resize(n);
  G.compose.assign(n, std::vector<long>(n, -1));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      G.src[id(i, j)] = i;
      G.dst[id(i, j)] = j;
      G.inverse[id(i, j)] = id(j, i);
    }
  for (std::size_t i = 0; i < k; ++i)
    G.identity.push_back(id(i, i));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < k; ++l)
        G.compose[id(j, l)][id(i, j)] = static_cast<long>(id(i, l));
  validate_groupoid(G);
  return G;
}

inline FiniteGroupoid disjoint_union(const FiniteGroupoid& a, const FiniteGroupoid& b)
{
  FiniteGroupoid G = a;
  const std::size_t no = a.objects.size(), n = a.size(), m = b.size();
  for (const auto& o : b.objects)
    G.objects.push_back(o);
  for (std::size_t g = 0; g < m; ++g) {
    G.src.push_back(b.src[g] + no);
    G.dst.push_back(b.dst[g] + no);
    G.inverse.push_back(b.inverse[g] + n);
  }
  for (std::size_t x : b.identity)
    G.identity.push_back(x + n);
  for (auto& row : G.compose)
    row.resize(n + m, -1);
  for (std::size_t g = 0; g < m; ++g) {
    std::vector<long> row(n + m, -1);
    for (std::size_t h = 0; h < m; ++h)
      if (b.compose[g][h] >= 0)
        row[n + h] = b.compose[g][h] + static_cast<long>(n);
    G.compose.push_back(std::move(row));
  }
  validate_groupoid(G);
  return G;
}

/// Left regular realization: object x acts on C[morphisms into x], and
/// g : x -> y is left composition, normalized to unit Frobenius norm.
inline CStarCategory groupoid_category(const FiniteGroupoid& G)
{
  validate_groupoid(G);
  const std::size_t no = G.objects.size(), n = G.size();
  std::vector<std::vector<std::size_t>> into(no);
  std::vector<Index> slot(n);
  for (std::size_t h = 0; h < n; ++h) {
    slot[h] = static_cast<Index>(into[G.dst[h]].size());
    into[G.dst[h]].push_back(h);
  }
  std::vector<ObjectInfo> objects;
  for (std::size_t x = 0; x < no; ++x)
    objects.push_back({G.objects[x], static_cast<Index>(into[x].size())});
  std::vector<std::vector<std::vector<CMatrix>>> bases(no, std::vector<std::vector<CMatrix>>(no));
  for (std::size_t g = 0; g < n; ++g) {
    const ObjectId x = G.src[g], y = G.dst[g];
    CMatrix L = CMatrix::Zero(objects[y].dim, objects[x].dim);
    for (std::size_t h : into[x])
      L(slot[static_cast<std::size_t>(G.compose[g][h])], slot[h]) = 1.0;
    bases[x][y].push_back(L / std::sqrt(static_cast<double>(objects[x].dim)));
  }
  return CStarCategory(std::move(objects), std::move(bases));
}

// Block categories -------------------------------------------------------------------

/// Sector data: sector sigma has amplification sector_dim[sigma]; object x
/// carries multiplicity mult[x][sigma]. hom(x, y) = (+)_sigma M_{m_y x m_x} (x) 1_d,
/// conjugated by the object frames.
struct BlockStructure
{
  std::vector<Index> sector_dim;
  std::vector<std::vector<Index>> mult;

  Index dim(ObjectId x) const
  {
    Index d = 0;
    for (std::size_t s = 0; s < sector_dim.size(); ++s)
      d += mult.at(x).at(s) * sector_dim[s];
    return d;
  }
};

struct BlockLabel
{
  std::size_t sector;
  Index row, col;
};

/// Ordering of the hom basis: sector, then row (target copy), then column.
inline std::vector<BlockLabel> block_labels(const BlockStructure& S, ObjectId x, ObjectId y)
{
  std::vector<BlockLabel> out;
  for (std::size_t s = 0; s < S.sector_dim.size(); ++s)
    for (Index j = 0; j < S.mult[y][s]; ++j)
      for (Index i = 0; i < S.mult[x][s]; ++i)
        out.push_back({s, j, i});
  return out;
}

/// Offset of copy i of sector s inside object x (before the frame).
inline Index block_offset(const BlockStructure& S, ObjectId x, std::size_t s, Index i)
{
  Index off = 0;
  for (std::size_t t = 0; t < s; ++t)
    off += S.mult[x][t] * S.sector_dim[t];
  return off + i * S.sector_dim[s];
}

struct BlockCategory
{
  CategoryRef cat;
  BlockStructure structure;
  std::vector<CMatrix> frames;
};

inline CStarCategory block_category(const BlockStructure& S, const std::vector<CMatrix>& frames,
                                    const std::string& prefix = "x")
{
  const std::size_t n = S.mult.size();
  std::vector<ObjectInfo> objects;
  for (ObjectId x = 0; x < n; ++x) {
    if (S.dim(x) == 0)
      throw InvalidInput("block_category: object of dimension 0");
    if (frames.at(x).rows() != S.dim(x))
      throw InvalidInput("block_category: frame has the wrong size");
    objects.push_back({prefix + std::to_string(x), S.dim(x)});
  }
  std::vector<std::vector<std::vector<CMatrix>>> bases(n, std::vector<std::vector<CMatrix>>(n));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (const BlockLabel& l : block_labels(S, x, y)) {
        const Index d = S.sector_dim[l.sector];
        CMatrix b = CMatrix::Zero(S.dim(y), S.dim(x));
        b.block(block_offset(S, y, l.sector, l.row), block_offset(S, x, l.sector, l.col), d, d) =
          CMatrix::Identity(d, d) / std::sqrt(static_cast<double>(d));
        bases[x][y].push_back(frames[y] * b * frames[x].adjoint());
      }
  return CStarCategory(std::move(objects), std::move(bases));
}

struct BlockParams
{
  std::size_t objects = 3;
  std::size_t sectors = 2;
  Index max_mult = 2;
  Index max_sector_dim = 2;
  Index max_total_dim = 64;
};

inline BlockCategory random_block_category(std::uint64_t seed, const BlockParams& p = {},
                                           const std::string& prefix = "x")
{
  if (p.objects == 0 || p.sectors == 0 || p.max_mult < 1 || p.max_sector_dim < 1)
    throw InvalidInput("random_block_category: parameters must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> sdim(1, p.max_sector_dim), mult(0, p.max_mult);
  BlockStructure S;
  for (;;) {
    S.sector_dim.clear();
    S.mult.assign(p.objects, {});
    for (std::size_t s = 0; s < p.sectors; ++s)
      S.sector_dim.push_back(sdim(rng));
    Index total = 0;
    for (std::size_t x = 0; x < p.objects; ++x) {
      for (std::size_t s = 0; s < p.sectors; ++s)
        S.mult[x].push_back(mult(rng));
      if (S.dim(x) == 0)
        S.mult[x][rng() % p.sectors] = 1;
      total += S.dim(x);
    }
    if (total <= p.max_total_dim)
      break;
  }
  std::vector<CMatrix> frames;
  for (std::size_t x = 0; x < p.objects; ++x)
    frames.push_back(random_unitary(S.dim(x), rng));
  return BlockCategory{share(block_category(S, frames, prefix)), S, frames};
}

// Modules ------------------------------------------------------------------------------

/// Random f.g.p. module: base of length 1..max_len, projection onto the
/// positive spectral part of a random Hermitian hull endomorphism.
inline HilbertModule random_module(std::uint64_t seed, const CategoryRef& cat, std::size_t max_len = 3)
{
  std::mt19937_64 rng(seed);
  const std::size_t n = cat->object_count();
  for (;;) {
    const std::size_t len = 1 + rng() % std::max<std::size_t>(max_len, 1);
    ObjectList base;
    for (std::size_t i = 0; i < len; ++i)
      base.push_back(static_cast<ObjectId>(rng() % n));
    CMatrix h = random_hull_morphism(*cat, base, base, rng);
    h = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    CMatrix p = CMatrix::Zero(h.rows(), h.cols());
    for (Index k = 0; k < h.rows(); ++k)
      if (es.eigenvalues()(k) > 1e-6)
        p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    if (p.norm() < 0.5)
      continue;
    p = hull_project(*cat, base, base, 0.5 * (p + p.adjoint()));
    return make_module(cat, base, p);
  }
}

// Bimodules ---------------------------------------------------------------------------------

/// A -> Hilb B from one B-module N_sigma per sector of A:
/// E(x) = (+)_sigma C^{m_x(sigma)} (x) N_sigma, acting through the sector
/// components. With degenerate = true the module projections are replaced by
/// the identity on the same base lists, so units no longer act as identities.
inline Bimodule sector_bimodule(const BlockCategory& A, const CategoryRef& B, const std::vector<HilbertModule>& N,
                                bool degenerate = false)
{
  const BlockStructure& S = A.structure;
  const std::size_t n = A.cat->object_count(), ns = S.sector_dim.size();
  if (N.size() != ns)
    throw InvalidInput("sector_bimodule: need one module per sector");
  Bimodule E{A.cat, B, {}, {}};
  // layout of E(x): copies (sigma, i) in sector order
  std::vector<std::vector<std::vector<Index>>> off(n, std::vector<std::vector<Index>>(ns));
  for (ObjectId x = 0; x < n; ++x) {
    ObjectList base;
    std::vector<CMatrix> blocks;
    Index pos = 0;
    for (std::size_t s = 0; s < ns; ++s)
      for (Index i = 0; i < S.mult[x][s]; ++i) {
        off[x][s].push_back(pos);
        base = concat(base, N[s].base);
        blocks.push_back(N[s].proj);
        pos += N[s].proj.rows();
      }
    CMatrix p = CMatrix::Zero(pos, pos);
    Index o = 0;
    for (const CMatrix& b : blocks) {
      p.block(o, o, b.rows(), b.cols()) = degenerate ? CMatrix::Identity(b.rows(), b.cols()) : b;
      o += b.rows();
    }
    E.ob_map.push_back(HilbertModule{B, base, p});
  }
  E.mor_map.assign(n, std::vector<std::vector<CMatrix>>(n));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (const BlockLabel& l : block_labels(S, x, y)) {
        CMatrix T = CMatrix::Zero(E.ob_map[y].dim(), E.ob_map[x].dim());
        const CMatrix& q = N[l.sector].proj;
        T.block(off[y][l.sector][static_cast<std::size_t>(l.row)], off[x][l.sector][static_cast<std::size_t>(l.col)],
                q.rows(), q.cols()) = q / std::sqrt(static_cast<double>(S.sector_dim[l.sector]));
        E.mor_map[x][y].push_back(T);
      }
  return E;
}

inline Bimodule random_bimodule(std::uint64_t seed, const BlockCategory& A, const CategoryRef& B,
                                std::size_t max_len = 2, bool degenerate = false)
{
  std::mt19937_64 rng(seed);
  std::vector<HilbertModule> N;
  for (std::size_t s = 0; s < A.structure.sector_dim.size(); ++s)
    N.push_back(random_module(rng(), B, max_len));
  if (degenerate) {
    // force spare capacity so the unit acts as a proper projection
    bool proper = false;
    for (const HilbertModule& m : N)
      proper = proper || op_norm(m.proj - CMatrix::Identity(m.dim(), m.dim())) > 0.5;
    if (!proper) {
      HilbertModule& m = N[0];
      ObjectList base = concat(m.base, {m.base[0]});
      CMatrix p = CMatrix::Zero(m.dim() + B->dim(m.base[0]), m.dim() + B->dim(m.base[0]));
      p.topLeftCorner(m.dim(), m.dim()) = m.proj;
      m = HilbertModule{B, base, p};
    }
  }
  return sector_bimodule(A, B, N, degenerate);
}

/// Isomorphic copy of a block category with fresh frames, and the
/// isomorphism a |-> V_y U_y* a U_x V_x* from the original.
struct FrameChange
{
  BlockCategory copy;
  CStarFunctor functor;
};

inline FrameChange frame_change(const BlockCategory& A, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<CMatrix> frames;
  for (std::size_t x = 0; x < A.cat->object_count(); ++x)
    frames.push_back(random_unitary(A.cat->dim(x), rng));
  BlockCategory copy{share(block_category(A.structure, frames, "y")), A.structure, frames};
  CStarFunctor F{A.cat, copy.cat, {}, {}};
  const std::size_t n = A.cat->object_count();
  for (ObjectId x = 0; x < n; ++x)
    F.object_map.push_back(x);
  F.action.assign(n, std::vector<std::vector<CMatrix>>(n));
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      for (const CMatrix& a : A.cat->hom(x, y))
        F.action[x][y].push_back(frames[y] * A.frames[y].adjoint() * a * A.frames[x] * frames[x].adjoint());
  return FrameChange{copy, F};
}

/// The non-injective functor C (+) C -> C, diag(a, b) |-> a.
inline CStarFunctor diagonal_projection_functor()
{
  CMatrix e0 = CMatrix::Zero(2, 2), e1 = CMatrix::Zero(2, 2);
  e0(0, 0) = 1.0;
  e1(1, 1) = 1.0;
  auto A = share(CStarCategory({{"d", 2}}, {{{e0, e1}}}));
  auto B = share(CStarCategory({{"c", 1}}, {{{CMatrix::Identity(1, 1)}}}));
  CMatrix one = CMatrix::Identity(1, 1), zero = CMatrix::Zero(1, 1);
  return CStarFunctor{A, B, {0}, {{{one, zero}}}};
}

} // namespace cstarcat

#endif
