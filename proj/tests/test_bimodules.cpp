#include <gtest/gtest.h>

#include <cstarcat/cstarcat.hpp>
#include <cstarcat/serialize.hpp>

using namespace cstarcat;

namespace
{

const BlockParams small{2, 2, 2, 2, 32};

/// A chain of block categories with a bimodule between consecutive ones.
struct Chain
{
  std::vector<BlockCategory> cats;
  std::vector<Bimodule> links;
};

Chain chain(std::uint64_t seed, std::size_t length)
{
  Chain c;
  for (std::size_t k = 0; k <= length; ++k)
    c.cats.push_back(random_block_category(seed + 10 * k, small, std::string(1, static_cast<char>('a' + k))));
  for (std::size_t k = 0; k < length; ++k)
    c.links.push_back(random_bimodule(seed + 10 * k + 5, c.cats[k], c.cats[k + 1].cat));
  return c;
}

/// Family of identities on E with the component at x scaled.
BimoduleMap scaled_identity(const Bimodule& E, ObjectId x, double s)
{
  BimoduleMap t{E, E, {}};
  for (const HilbertModule& m : E.ob_map)
    t.components.push_back(identity_operator(m));
  t.components[x].block *= s;
  return t;
}

} // namespace

// generators ----------------------------------------------------------------------------

TEST(Generators, GroupoidValidation)
{
  EXPECT_NO_THROW(validate_groupoid(cyclic_group(4)));
  EXPECT_NO_THROW(validate_groupoid(disjoint_union(codiscrete(2), cyclic_group(3))));
  FiniteGroupoid bad = cyclic_group(3);
  bad.inverse[1] = 1;
  EXPECT_THROW(validate_groupoid(bad), InvalidInput);
  // a table without identity is not a group
  EXPECT_THROW(groupoid_from_group({{1, 0}, {0, 0}}, "g"), InvalidInput);
}

TEST(Generators, GroupoidCategoryDimensions)
{
  for (std::size_t n : {1u, 3u, 5u}) {
    CStarCategory c = groupoid_category(cyclic_group(n));
    EXPECT_EQ(c.hom_dim(0, 0), static_cast<Index>(n));
    EXPECT_TRUE(verify_category(c).passed());
  }
  CStarCategory k = groupoid_category(codiscrete(3));
  for (ObjectId x = 0; x < 3; ++x)
    for (ObjectId y = 0; y < 3; ++y)
      EXPECT_EQ(k.hom_dim(x, y), 1);
  EXPECT_TRUE(verify_category(k).passed());
}

TEST(Generators, BlockCategoriesVerify)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    BlockCategory B = random_block_category(seed);
    EXPECT_TRUE(verify_category(*B.cat).passed()) << seed;
    for (ObjectId x = 0; x < B.cat->object_count(); ++x)
      EXPECT_EQ(B.cat->dim(x), B.structure.dim(x));
  }
}

TEST(Generators, RandomModulesAndBimodules)
{
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Chain c = chain(100 + seed, 1);
    const Bimodule& E = c.links[0];
    EXPECT_TRUE(verify_bimodule(E).passed()) << seed;
    EXPECT_TRUE(check_nondegenerate(E).nondegenerate()) << seed;
    HilbertModule M = random_module(seed, c.cats[0].cat);
    EXPECT_GT(M.proj.trace().real(), 0.5);
    EXPECT_LT(op_norm(M.proj * M.proj - M.proj), 1e-10);
  }
}

TEST(Generators, DegenerateBimoduleFailsBothCriteria)
{
  Chain c = chain(200, 0);
  BlockCategory B = random_block_category(201, small, "b");
  Bimodule E = random_bimodule(202, c.cats[0], B.cat, 2, true);
  EXPECT_TRUE(verify_bimodule(E).passed());
  NondegeneracyReport nd = check_nondegenerate(E);
  EXPECT_FALSE(nd.unit_criterion);
  EXPECT_FALSE(nd.rank_criterion);
  EXPECT_THROW(ew_map(random_module(1, c.cats[0].cat), E), InvalidInput);
}

// bimodules -----------------------------------------------------------------------------

TEST(Bimodules, YonedaAndFunctorBimodules)
{
  BlockCategory A = random_block_category(300, small);
  Bimodule Y = yoneda_bimodule(A.cat);
  EXPECT_TRUE(verify_bimodule(Y).passed());
  EXPECT_TRUE(check_nondegenerate(Y).nondegenerate());
  FrameChange fc = frame_change(A, 301);
  Bimodule F = bimodule_from_functor(fc.functor);
  EXPECT_TRUE(verify_bimodule(F).passed());
  // a non-functor is rejected
  CStarFunctor broken = fc.functor;
  broken.action[0][0][0] *= 2.0;
  EXPECT_THROW(bimodule_from_functor(broken), InvalidInput);
}

TEST(Bimodules, YonedaLeftProductIsComposition)
{
  BlockCategory A = random_block_category(310, small);
  const CStarCategory& cat = *A.cat;
  ImprimitivityReport ir = check_imprimitivity(yoneda_bimodule(A.cat));
  ASSERT_TRUE(ir.imprimitivity());
  ASSERT_TRUE(ir.data.has_value());
  EXPECT_TRUE(ir.report.passed());
  std::mt19937_64 rng(311);
  for (ObjectId y = 0; y < cat.object_count(); ++y)
    for (ObjectId xe = 0; xe < cat.object_count(); ++xe)
      for (ObjectId xf = 0; xf < cat.object_count(); ++xf) {
        if (cat.hom_dim(y, xe) == 0 || cat.hom_dim(y, xf) == 0)
          continue;
        Morphism a = cat.random_morphism(y, xe, rng), b = cat.random_morphism(y, xf, rng);
        Morphism l = left_product(*ir.data, xe, ModuleElement{y, a.mat}, xf, ModuleElement{y, b.mat});
        EXPECT_EQ(l.src, xf);
        EXPECT_EQ(l.dst, xe);
        EXPECT_LT(op_norm(l.mat - a.mat * b.mat.adjoint()), 1e-9);
      }
}

TEST(Bimodules, NonInjectiveFunctorIsNotFaithful)
{
  Bimodule P = bimodule_from_functor(diagonal_projection_functor());
  EXPECT_TRUE(verify_bimodule(P).passed());
  ImprimitivityReport ir = check_imprimitivity(P);
  EXPECT_FALSE(ir.faithful);
  EXPECT_FALSE(ir.imprimitivity());
  EXPECT_FALSE(morita_check(P).equivalence());
}

TEST(Bimodules, MatrixAlgebraEquivalence)
{
  BlockCategory A = random_block_category(320, small);
  MatEquivalence m = mat_equivalence(A.cat);
  EXPECT_TRUE(verify_bimodule(m.bimodule).passed());
  MoritaVerdict v = morita_check(m.bimodule);
  EXPECT_TRUE(v.imprimitivity.imprimitivity());
  ASSERT_TRUE(v.equivalence());
  EXPECT_TRUE(v.phi->report.passed());
  EXPECT_TRUE(v.psi->report.passed());
}

TEST(Bimodules, IsomorphismBimoduleEquivalence)
{
  BlockCategory A = random_block_category(330, small);
  Bimodule F = bimodule_from_functor(frame_change(A, 331).functor);
  EXPECT_TRUE(morita_check(F).equivalence());
}

TEST(Bimodules, ConjugateProducts)
{
  BlockCategory A = random_block_category(340, small);
  MatEquivalence m = mat_equivalence(A.cat);
  ImprimitivityReport ir = check_imprimitivity(m.bimodule);
  ASSERT_TRUE(ir.data.has_value());
  const BiHilbertData& D = *ir.data;
  const Bimodule& E = D.bimodule;
  ConjugateBimodule C = conjugate_bimodule(D);
  EXPECT_TRUE(verify_bimodule(C.bimodule).passed());
  ImprimitivityReport cr = check_imprimitivity(C.bimodule);
  ASSERT_TRUE(cr.data.has_value());
  std::mt19937_64 rng(341);
  const std::size_t na = E.source->object_count(), nb = E.target->object_count();
  for (int t = 0; t < 8; ++t) {
    ObjectId y = rng() % nb, y2 = rng() % nb, x = rng() % na, x2 = rng() % na;
    // A-valued: <e~, f~>_A = _A<e, f>
    ModuleElement e = random_element(E.at(x), y, rng), f = random_element(E.at(x2), y, rng);
    Morphism lhs = inner_product(conjugate_element(C, x, e), conjugate_element(C, x2, f));
    Morphism rhs = left_product(D, x, e, x2, f);
    EXPECT_LT(op_norm(lhs.mat - rhs.mat), 1e-8);
    // B-valued: _B<e~, f~> = <e, f>_B
    ModuleElement g = random_element(E.at(x), y2, rng);
    Morphism lb = left_product(*cr.data, y, conjugate_element(C, x, e), y2, conjugate_element(C, x, g));
    Morphism rb = inner_product(e, g);
    EXPECT_EQ(lb.src, rb.src);
    EXPECT_EQ(lb.dst, rb.dst);
    EXPECT_LT(op_norm(lb.mat - rb.mat), 1e-8);
    // b . e~ = (e . b*)~
    if (E.target->hom_dim(y, y2) == 0)
      continue;
    Morphism b = E.target->random_morphism(y, y2, rng);
    CMatrix moved = C.bimodule.action(b) * conjugate_element(C, x, e).col;
    EXPECT_LT(op_norm(moved - conjugate_element(C, x, act(e, involute(b))).col), 1e-8);
  }
}

TEST(Bimodules, RandomBimoduleNotFullIsNotEquivalence)
{
  Chain c = chain(350, 1);
  Bimodule E = c.links[0];
  ImprimitivityReport ir = check_imprimitivity(E);
  if (!ir.imprimitivity())
    EXPECT_FALSE(morita_check(E).equivalence());
}

// tensor products -------------------------------------------------------------------------

TEST(Tensor, OracleAgreement)
{
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Chain c = chain(400 + 7 * seed, 1);
    HilbertModule M = random_module(seed, c.cats[0].cat);
    Report r = tensor_cross_check(M, c.links[0], 4, seed);
    EXPECT_TRUE(r.passed()) << seed;
  }
}

TEST(Tensor, BalancedRelationCollapses)
{
  Chain c = chain(410, 1);
  const Bimodule& E = c.links[0];
  const CStarCategory& A = *c.cats[0].cat;
  HilbertModule M = random_module(411, c.cats[0].cat);
  std::mt19937_64 rng(412);
  int checked = 0;
  for (ObjectId y = 0; y < A.object_count(); ++y)
    for (ObjectId w = 0; w < A.object_count(); ++w) {
      if (A.hom_dim(w, y) == 0)
        continue;
      ModuleElement m = random_element(M, y, rng);
      Morphism a = A.random_morphism(w, y, rng);
      ObjectId b = rng() % E.target->object_count();
      ModuleElement f = random_element(E.at(w), b, rng);
      ModuleElement lhs = tensor_element(M, E, act(m, a), f);
      ModuleElement rhs = tensor_element(M, E, m, ModuleElement{b, E.action(a) * f.col});
      EXPECT_LT(op_norm(lhs.col - rhs.col), 1e-10);
      ++checked;
    }
  EXPECT_GT(checked, 0);
}

TEST(Tensor, InnerProductFormula)
{
  Chain c = chain(420, 1);
  const Bimodule& E = c.links[0];
  HilbertModule M = random_module(421, c.cats[0].cat);
  std::mt19937_64 rng(422);
  for (int t = 0; t < 6; ++t) {
    ObjectId y = rng() % M.cat->object_count(), y2 = rng() % M.cat->object_count();
    ObjectId b = rng() % E.target->object_count(), b2 = rng() % E.target->object_count();
    ModuleElement m = random_element(M, y, rng), m2 = random_element(M, y2, rng);
    ModuleElement f = random_element(E.at(y), b, rng), f2 = random_element(E.at(y2), b2, rng);
    Morphism lhs = inner_product(tensor_element(M, E, m, f), tensor_element(M, E, m2, f2));
    CMatrix rhs = f.col.adjoint() * E.action(inner_product(m, m2)) * f2.col;
    EXPECT_LT(op_norm(lhs.mat - rhs), 1e-10);
  }
}

TEST(Tensor, ZeroModuleGivesZero)
{
  Chain c = chain(430, 1);
  HilbertModule Z = zero_module(c.cats[0].cat, {0, 1});
  HilbertModule T = tensor(Z, c.links[0]);
  EXPECT_EQ(op_norm(T.proj), 0.0);
  for (ObjectId b = 0; b < c.cats[1].cat->object_count(); ++b)
    EXPECT_EQ(evaluation_dim(T, b), 0);
}

TEST(Tensor, OperatorFunctoriality)
{
  Chain c = chain(440, 1);
  const Bimodule& E = c.links[0];
  std::mt19937_64 rng(441);
  HilbertModule M = random_module(442, c.cats[0].cat), N = random_module(443, c.cats[0].cat);
  const CStarCategory& A = *c.cats[0].cat;
  ModuleOperator S = make_operator(M, N, N.proj * random_hull_morphism(A, M.base, N.base, rng) * M.proj);
  ModuleOperator T = make_operator(N, M, M.proj * random_hull_morphism(A, N.base, M.base, rng) * N.proj);
  ModuleOperator lhs = tensor_operator(compose(T, S), E);
  ModuleOperator rhs = compose(tensor_operator(T, E), tensor_operator(S, E));
  EXPECT_LT(op_norm(lhs.block - rhs.block), 1e-10);
  EXPECT_LT(op_norm(tensor_operator(adjoint(S), E).block - adjoint(tensor_operator(S, E)).block), 1e-10);
  EXPECT_LE(norm(tensor_operator(S, E)), norm(S) + 1e-9);
}

TEST(Tensor, BimoduleTensorVerifies)
{
  Chain c = chain(450, 2);
  Bimodule EF = tensor(c.links[0], c.links[1]);
  EXPECT_TRUE(verify_bimodule(EF).passed());
  EXPECT_THROW(tensor(c.links[1], c.links[0]), InvalidInput);
}

// coherence -----------------------------------------------------------------------------

TEST(Coherence, Pentagon)
{
  Chain c = chain(500, 3);
  HilbertModule M = random_module(501, c.cats[0].cat, 2);
  CoherenceResiduals r = pentagon(M, c.links[0], c.links[1], c.links[2]);
  EXPECT_LT(r.consistency, 1e-8);
  EXPECT_LT(r.unitarity, 1e-8);
  EXPECT_LT(r.diagram, 1e-8);
}

TEST(Coherence, Triangle)
{
  Chain c = chain(510, 1);
  HilbertModule M = random_module(511, c.cats[0].cat);
  CoherenceResiduals r = triangle(M, c.links[0]);
  EXPECT_LT(r.consistency, 1e-8);
  EXPECT_LT(r.unitarity, 1e-8);
  EXPECT_LT(r.diagram, 1e-8);
}

TEST(Coherence, UnitorsAreUnitaryAndNatural)
{
  Chain c = chain(520, 1);
  const Bimodule& E = c.links[0];
  BimoduleMap lambda = left_unitor(E);
  EXPECT_LT(naturality_residual(lambda), 1e-9);
  for (const ModuleOperator& u : lambda.components) {
    UnitarityResiduals r = unitarity(u);
    EXPECT_LT(r.isometry, 1e-9);
    EXPECT_LT(r.coisometry, 1e-9);
    EXPECT_EQ(r.rank_deficit, 0);
  }
  HilbertModule M = random_module(521, c.cats[0].cat);
  SolvedOperator rho = right_unitor(M);
  EXPECT_LT(rho.consistency, 1e-9);
  EXPECT_LT(unitarity(rho.op).isometry, 1e-9);
}

TEST(Coherence, WhiskerRoutesAgree)
{
  Chain c = chain(530, 1);
  BimoduleMap lambda = left_unitor(c.links[0]);
  HilbertModule M = random_module(531, c.cats[0].cat);
  WhiskerResult w = whisker_transform(lambda, M);
  EXPECT_LT(w.consistency, 1e-9);
  EXPECT_LT(w.agreement, 1e-9);
  EXPECT_LT(op_norm(w.by_tensors.block - whisker_left(M, lambda).block), 1e-9);
}

TEST(Coherence, NonNaturalFamilyRejected)
{
  // first chain whose source has a morphism between distinct objects
  for (std::uint64_t seed = 540; seed < 600; ++seed) {
    Chain c = chain(seed, 1);
    const Bimodule& E = c.links[0];
    const CStarCategory& A = *E.source;
    for (ObjectId x = 0; x < A.object_count(); ++x)
      for (ObjectId y = 0; y < A.object_count(); ++y) {
        if (x == y || A.hom_dim(x, y) == 0 || E.at(x).dim() == 0)
          continue;
        EXPECT_LT(naturality_residual(scaled_identity(E, x, 1.0)), 1e-12);
        BimoduleMap bad = scaled_identity(E, x, 2.0);
        EXPECT_GT(naturality_residual(bad), 0.1);
        EXPECT_THROW(whisker_transform(bad, random_module(seed, E.source)), InvalidInput);
        return;
      }
  }
  FAIL() << "no chain with a morphism between distinct objects";
}

TEST(Coherence, EwMapIsUnitary)
{
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Chain c = chain(550 + 3 * seed, 1);
    EwResult r = ew_map(random_module(seed, c.cats[0].cat), c.links[0], 4, seed);
    EXPECT_TRUE(r.unitary()) << seed;
  }
}

// serialization ---------------------------------------------------------------------------

TEST(Serialize, CategoryRoundTrip)
{
  BlockCategory B = random_block_category(600);
  std::string text = dump_spec("category", to_json(*B.cat));
  SpecFile s = parse_spec(text);
  EXPECT_EQ(s.kind, "category");
  CategoryRef back = category_from_json(s.payload);
  EXPECT_TRUE(same_category(*B.cat, *back));
  EXPECT_EQ(dump_spec("category", to_json(*back)), text);
  EXPECT_EQ(canonicalize(text), text);
}

TEST(Serialize, ModuleAndBimoduleRoundTrip)
{
  Chain c = chain(610, 1);
  HilbertModule M = random_module(611, c.cats[0].cat);
  std::string mt = dump_spec("module", to_json(M));
  HilbertModule Mb = module_from_json(parse_spec(mt).payload);
  EXPECT_LT(op_norm(Mb.proj - M.proj), 1e-15);
  EXPECT_EQ(Mb.base, M.base);
  EXPECT_EQ(canonicalize(mt), mt);
  std::string bt = dump_spec("bimodule", to_json(c.links[0]));
  Bimodule Eb = bimodule_from_json(parse_spec(bt).payload);
  EXPECT_TRUE(verify_bimodule(Eb).passed());
  EXPECT_EQ(canonicalize(bt), bt);
}

TEST(Serialize, GroupoidRoundTrip)
{
  FiniteGroupoid G = disjoint_union(codiscrete(2), cyclic_group(3));
  std::string text = dump_spec("groupoid", to_json(G));
  FiniteGroupoid back = groupoid_from_json(parse_spec(text).payload);
  EXPECT_EQ(back.compose, G.compose);
  EXPECT_EQ(back.inverse, G.inverse);
  EXPECT_EQ(canonicalize(text), text);
}

TEST(Serialize, MalformedInputs)
{
  EXPECT_THROW(parse_spec("not json"), FormatError);
  EXPECT_THROW(parse_spec(R"({"kind":"category"})"), FormatError);
  EXPECT_THROW(parse_spec(R"({"version":"99","kind":"category","payload":{}})"), FormatError);
  Json bad_matrix = {{"rows", 2}, {"cols", 2}, {"data", {{{1, 0}}}}};
  EXPECT_THROW(matrix_from_json(bad_matrix), FormatError);
  BlockCategory B = random_block_category(620, small);
  Json j = to_json(*B.cat);
  j["homs"][0]["matrices"][0]["data"][0][0] = {7.0, 0.0};
  EXPECT_THROW(category_from_json(j), FormatError);
}

TEST(Serialize, DigestIsStable)
{
  EXPECT_EQ(digest("abc"), digest("abc"));
  EXPECT_NE(digest("abc"), digest("abd"));
  EXPECT_EQ(digest("").size(), 16u);
}
