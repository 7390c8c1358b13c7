// Acceptance sweep. `acceptance` runs every criterion; `acceptance N` runs one.
// Each criterion prints a single PASS/FAIL line with its worst residual.

#include <cstarcat/cstarcat.hpp>
#include <cstarcat/serialize.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include <unistd.h>

using namespace cstarcat;
namespace fs = std::filesystem;

namespace
{

// pinned tolerances
constexpr double axiom_rel = 1e-8;        // 1: residual <= 1e-8 * scale
constexpr double axiom_seconds = 60.0;
constexpr double hull_norm_rel = 1e-6;    // 2
constexpr double factor_tol = 1e-8;       // 3
constexpr double multiplier_tol = 1e-8;   // 4
constexpr double psd_rel = 1e-9;          // 5: min eigenvalue >= -1e-9 * scale
constexpr double yoneda_exact = 1e-9;
constexpr double yoneda_isometric = 1e-8;
constexpr double cover_tol = 1e-9;        // 6
constexpr double spectrum_tol = 1e-7;     // 7
constexpr double unitor_tol = 1e-8;
constexpr double coherence_tol = 1e-7;
constexpr double morita_seconds = 120.0;  // 8
constexpr double ew_tol = 1e-8;           // 9
constexpr std::size_t min_fixtures = 20;  // 10

struct Outcome
{
  bool pass = true;
  std::string detail;
};

/// Running maximum with the label of the instance that produced it.
struct Track
{
  double worst = 0.0;
  std::string where;

  void update(double r, const std::string& at)
  {
    if (!(r <= worst)) {
      worst = r;
      where = at;
    }
  }
};

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double residual_of(const Report& r, const std::string& name)
{
  const Check* c = r.find(name);
  return c ? c->residual : 0.0;
}

/// Residual over threshold-scale for every check of a report.
double scaled_worst(const Report& r, double rel)
{
  double worst = 0.0;
  for (const Check& c : r.checks)
    worst = std::max(worst, c.residual / std::max(c.threshold, rel));
  return worst * rel;
}

// 1 -------------------------------------------------------------------------------------

Outcome axiom_suite()
{
  const auto t0 = std::chrono::steady_clock::now();
  const Tolerance tol{0.0, axiom_rel};
  Track t;
  int failures = 0;
  auto run = [&](const CStarCategory& c, const std::string& label) {
    Report r = verify_category(c, tol, 4, 0);
    if (!r.passed())
      ++failures;
    t.update(scaled_worst(r, axiom_rel), label);
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    run(*random_block_category(seed).cat, "block " + std::to_string(seed));
  std::vector<FiniteGroupoid> gs;
  for (std::size_t n = 1; n <= 8; ++n)
    gs.push_back(cyclic_group(n));
  for (std::size_t k = 1; k <= 6; ++k)
    gs.push_back(codiscrete(k));
  for (std::size_t n = 1; n <= 6; ++n)
    gs.push_back(disjoint_union(codiscrete(2), cyclic_group(n)));
  for (std::size_t k = 0; k < gs.size(); ++k)
    run(groupoid_category(gs[k]), "groupoid " + std::to_string(k));
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failures == 0 && secs <= axiom_seconds;
  o.detail = "120 categories, failing " + std::to_string(failures) + ", worst scaled residual " + fmt(t.worst) +
             " (" + t.where + "), " + fmt(secs) + " s";
  return o;
}

// 2 -------------------------------------------------------------------------------------

Outcome hull_norm()
{
  Track t;
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    BlockCategory B = random_block_category(1000 + static_cast<std::uint64_t>(k));
    const CStarCategory& A = *B.cat;
    auto pick = [&] {
      ObjectList xs(2 + rng() % 2);
      for (ObjectId& x : xs)
        x = rng() % A.object_count();
      return xs;
    };
    ObjectList xs = pick(), ys = pick();
    CMatrix f = random_hull_morphism(A, xs, ys, rng);
    const double exact = op_norm(f);
    const double formula = hull_norm_formula(A, xs, ys, f, 8, static_cast<std::uint64_t>(k));
    t.update(std::abs(formula - exact) / std::max(exact, 1e-300), "sample " + std::to_string(k));
  }
  return {t.worst <= hull_norm_rel, "100 hull morphisms, worst relative gap " + fmt(t.worst) + " (" + t.where + ")"};
}

// 3 -------------------------------------------------------------------------------------

Outcome factorization()
{
  Track fac, pol;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    BlockCategory B = random_block_category(2000 + static_cast<std::uint64_t>(k / 4));
    const CStarCategory& A = *B.cat;
    ObjectId x = rng() % A.object_count(), y = rng() % A.object_count();
    if (A.hom_dim(x, y) == 0)
      y = x;
    Morphism u = A.random_morphism(x, y, rng);
    Factorization f = factorize(A, u);
    fac.update(op_norm(f.v.mat * f.w.mat - u.mat) / std::max(1.0, op_norm(u.mat)), "sample " + std::to_string(k));
    // invertible endomorphism: well conditioned shift of a random element
    Morphism a = A.random_morphism(x, x, rng);
    Morphism inv{x, x, a.mat + (op_norm(a.mat) + 1.0) * CMatrix::Identity(A.dim(x), A.dim(x))};
    Morphism U = polar_unitary(A, inv);
    const CMatrix I = CMatrix::Identity(A.dim(x), A.dim(x));
    pol.update(std::max(op_norm(U.mat.adjoint() * U.mat - I), op_norm(U.mat * U.mat.adjoint() - I)),
               "sample " + std::to_string(k));
  }
  return {fac.worst <= factor_tol && pol.worst <= factor_tol,
          "200 samples, recomposition " + fmt(fac.worst) + ", polar unitarity " + fmt(pol.worst)};
}

// 4 -------------------------------------------------------------------------------------

double multiplier_gap(const MultiplierMorphism& a, const MultiplierMorphism& b)
{
  return std::max(op_norm(a.left - b.left), op_norm(a.right - b.right));
}

Outcome multipliers()
{
  Track collapse, hull;
  Index dim_mismatch = 0;
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    BlockCategory B = random_block_category(3000 + static_cast<std::uint64_t>(k));
    const CStarCategory& A = *B.cat;
    MultiplierCategory M(B.cat);
    const std::string at = "category " + std::to_string(k);
    const std::size_t n = A.object_count();
    for (ObjectId x = 0; x < n; ++x)
      for (ObjectId y = 0; y < n; ++y) {
        dim_mismatch += std::abs(M.space_dim(x, y) - A.hom_dim(x, y));
        for (ObjectId z = 0; z < n; ++z)
          for (Index i = 0; i < A.hom_dim(x, y); ++i)
            for (Index j = 0; j < A.hom_dim(y, z); ++j) {
              Morphism a = A.basis_element(x, y, i), b = A.basis_element(y, z, j);
              MultiplierMorphism lhs = M.compose(M.kappa(b), M.kappa(a));
              collapse.update(multiplier_gap(lhs, M.kappa(Morphism{x, z, b.mat * a.mat})), at);
            }
        for (Index i = 0; i < A.hom_dim(x, y); ++i) {
          Morphism a = A.basis_element(x, y, i);
          collapse.update(multiplier_gap(M.involute(M.kappa(a)), M.kappa(involute(a))), at);
        }
      }
  }
  const BlockParams tiny{2, 2, 1, 2, 16};
  for (int k = 0; k < 20; ++k) {
    BlockCategory B = random_block_category(3500 + static_cast<std::uint64_t>(k), tiny);
    const CStarCategory& A = *B.cat;
    MultiplierCategory M(B.cat);
    ObjectList xs{0, 1}, ys{1, 0}, zs{0, 0};
    AdditiveHull H = additive_hull(B.cat, {xs, ys, zs}, false);
    MultiplierCategory MH(H.cat);
    auto block = [&](const ObjectList& from, const ObjectList& to) {
      MultiplierBlock out{from, to, {}};
      for (ObjectId y : to) {
        std::vector<MultiplierMorphism> row;
        for (ObjectId x : from)
          row.push_back(M.kappa(A.random_morphism(x, y, rng)));
        out.entries.push_back(row);
      }
      return out;
    };
    MultiplierBlock T = block(xs, ys), S = block(ys, zs);
    const ObjectId hx = H.index_of(xs), hy = H.index_of(ys), hz = H.index_of(zs);
    MultiplierMorphism lhs = MH.compose(hull_multiplier(M, H, hy, hz, S), hull_multiplier(M, H, hx, hy, T));
    MultiplierMorphism rhs = hull_multiplier(M, H, hx, hz, compose(M, S, T));
    hull.update(multiplier_gap(lhs, rhs), "instance " + std::to_string(k));
  }
  return {dim_mismatch == 0 && collapse.worst <= multiplier_tol && hull.worst <= multiplier_tol,
          "50 categories, dimension mismatch " + std::to_string(dim_mismatch) + ", kappa transport " +
            fmt(collapse.worst) + "; 20 hulls, structure constants " + fmt(hull.worst)};
}

// 5 -------------------------------------------------------------------------------------

Outcome hilbert_modules()
{
  Track cs, gram, exact, iso;
  std::mt19937_64 rng(5);
  for (int k = 0; k < 500; ++k) {
    BlockCategory B = random_block_category(4000 + static_cast<std::uint64_t>(k / 10));
    HilbertModule E = random_module(4000 + static_cast<std::uint64_t>(k), B.cat);
    const std::size_t n = B.cat->object_count();
    ModuleElement e = random_element(E, rng() % n, rng), f = random_element(E, e.at, rng);
    CMatrix lhs = inner_product(e, f).mat * inner_product(f, e).mat;
    CMatrix rhs = op_norm(inner_product(f, f).mat) * inner_product(e, e).mat;
    const double scale = std::max(1.0, op_norm(rhs));
    cs.update(std::max(0.0, -min_eigenvalue(rhs - lhs)) / scale, "pair " + std::to_string(k));
    if (k % 5 == 0) {
      std::vector<ModuleElement> es;
      for (std::size_t l = 0, m = 1 + rng() % 5; l < m; ++l)
        es.push_back(random_element(E, rng() % n, rng));
      CMatrix G = gram_matrix(es);
      gram.update(std::max(0.0, -min_eigenvalue(G)) / std::max(1.0, op_norm(G)), "gram " + std::to_string(k));
    }
    if (k % 5 == 1 || k % 5 == 3) {
      ModuleOperator eps = yoneda_epsilon(E, f);
      exact.update(op_norm(yoneda_eta(eps).col - f.col), "yoneda " + std::to_string(k));
      // eps(eta(T)) = T for T = theta^{g, a} : h_y -> E
      ModuleElement g = random_element(E, f.at, rng);
      HilbertModule h = representable(B.cat, f.at);
      ModuleElement a{f.at, B.cat->random_morphism(f.at, f.at, rng).mat};
      ModuleOperator T = single_rank(h, E, g, a);
      exact.update(op_norm(yoneda_epsilon(E, yoneda_eta(T)).block - T.block), "yoneda " + std::to_string(k));
      iso.update(std::abs(norm(eps) - element_norm(f)), "yoneda " + std::to_string(k));
    }
  }
  return {cs.worst <= psd_rel && gram.worst <= psd_rel && exact.worst <= yoneda_exact && iso.worst <= yoneda_isometric,
          "500 pairs, Cauchy-Schwarz deficit " + fmt(cs.worst) + ", Gram deficit " + fmt(gram.worst) +
            "; 200 Yoneda round trips " + fmt(exact.worst) + ", isometry " + fmt(iso.worst)};
}

// 6 -------------------------------------------------------------------------------------

Outcome free_covers()
{
  Track t;
  for (int k = 0; k < 100; ++k) {
    BlockCategory B = random_block_category(5000 + static_cast<std::uint64_t>(k));
    HilbertModule E = random_module(5000 + static_cast<std::uint64_t>(k), B.cat, 3);
    FreeCover c = free_cover(E);
    const CMatrix& phi = c.phi.block;
    // phi : F -> E with F free on the base of E; P is E's projection read on F
    const double r = std::max(op_norm(phi * phi.adjoint() - E.proj), op_norm(phi.adjoint() * phi - E.proj));
    t.update(r, "module " + std::to_string(k));
  }
  return {t.worst <= cover_tol, "100 modules, worst cover residual " + fmt(t.worst) + " (" + t.where + ")"};
}

// 7 -------------------------------------------------------------------------------------

const BlockParams chain_params{3, 2, 2, 2, 32};
// a pentagon over three of the above costs minutes (M⊗E⊗F⊗G reaches ~900 dims)
const BlockParams triple_params{2, 2, 1, 2, 32};

std::vector<BlockCategory> categories(std::uint64_t seed, std::size_t count, const BlockParams& params = chain_params)
{
  std::vector<BlockCategory> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(random_block_category(seed + 17 * k, params, std::string(1, static_cast<char>('a' + k))));
  return out;
}

Outcome tensors()
{
  Track spectrum, unitors, coherence;
  Index dim_gap = 0;
  auto unit_track = [&](const UnitarityResiduals& u, const std::string& at) {
    unitors.update(std::max(u.isometry, u.coisometry), at);
    dim_gap = std::max(dim_gap, u.rank_deficit);
  };
  for (int k = 0; k < 50; ++k) {
    const std::uint64_t seed = 6000 + 100 * static_cast<std::uint64_t>(k);
    auto cs = categories(seed, 2);
    Bimodule E = random_bimodule(seed + 1, cs[0], cs[1].cat);
    HilbertModule M = random_module(seed + 2, cs[0].cat);
    Report r = tensor_cross_check(M, E, 4, seed);
    dim_gap = std::max(dim_gap, static_cast<Index>(residual_of(r, "evaluation_dimension_gap")));
    spectrum.update(residual_of(r, "gram_spectrum_gap"), "instance " + std::to_string(k));
    const std::string at = "instance " + std::to_string(k);
    for (const ModuleOperator& u : left_unitor(E).components)
      unit_track(unitarity(u), at);
    unit_track(unitarity(right_unitor(M).op), at);
  }
  for (int k = 0; k < 20; ++k) {
    const std::uint64_t seed = 7000 + 100 * static_cast<std::uint64_t>(k);
    auto cs = categories(seed, 4, triple_params);
    Bimodule E = random_bimodule(seed + 1, cs[0], cs[1].cat);
    Bimodule F = random_bimodule(seed + 2, cs[1], cs[2].cat);
    Bimodule G = random_bimodule(seed + 3, cs[2], cs[3].cat);
    HilbertModule M = random_module(seed + 4, cs[0].cat, 2);
    const std::string at = "triple " + std::to_string(k);
    SolvedOperator a = associator(M, E, F);
    coherence.update(a.consistency, at);
    unit_track(unitarity(a.op), at);
    CoherenceResiduals p = pentagon(M, E, F, G);
    CoherenceResiduals t = triangle(M, E);
    for (const CoherenceResiduals& c : {p, t}) {
      coherence.update(std::max(c.consistency, c.diagram), at);
      unitors.update(c.unitarity, at);
    }
  }
  return {dim_gap == 0 && spectrum.worst <= spectrum_tol && unitors.worst <= unitor_tol &&
            coherence.worst <= coherence_tol,
          "50 instances, dimension gap " + std::to_string(dim_gap) + ", spectrum gap " + fmt(spectrum.worst) +
            ", unitarity " + fmt(unitors.worst) + "; 20 triples, pentagon/triangle " + fmt(coherence.worst)};
}

// 8 -------------------------------------------------------------------------------------

Outcome morita()
{
  const auto t0 = std::chrono::steady_clock::now();
  int failures = 0;
  Track unit;
  std::string first;
  for (int k = 0; k < 50; ++k) {
    BlockCategory B = random_block_category(8000 + static_cast<std::uint64_t>(k));
    MoritaVerdict v = morita_check(mat_equivalence(B.cat).bimodule);
    const bool ok = v.imprimitivity.imprimitivity() && v.equivalence();
    if (!ok && first.empty())
      first = " first failure at category " + std::to_string(k);
    failures += ok ? 0 : 1;
    for (const auto* m : {&v.phi, &v.psi})
      if (*m)
        for (const char* name : {"isometry", "coisometry"})
          unit.update(residual_of((**m).report, name), "category " + std::to_string(k));
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs <= morita_seconds,
          "50 categories, failing " + std::to_string(failures) + ", worst unitarity " + fmt(unit.worst) + ", " +
            fmt(secs) + " s" + first};
}

// 9 -------------------------------------------------------------------------------------

Outcome eilenberg_watts()
{
  Track ip, iso;
  Index rank = 0;
  int non_free = 0, failures = 0;
  for (int k = 0; k < 100; ++k) {
    const std::uint64_t seed = 9000 + 100 * static_cast<std::uint64_t>(k);
    auto cs = categories(seed, 2);
    Bimodule E = random_bimodule(seed + 1, cs[0], cs[1].cat);
    HilbertModule M = random_module(seed + 2, cs[0].cat);
    if (op_norm(M.proj - CMatrix::Identity(M.dim(), M.dim())) > 0.5)
      ++non_free;
    EwResult r = ew_map(M, E, 4, seed);
    failures += r.unitary() ? 0 : 1;
    const double scale = std::max(1.0, op_norm(r.source.gram));
    const std::string at = "pair " + std::to_string(k);
    ip.update(residual_of(r.report, "inner_products") / scale, at);
    iso.update(std::max({residual_of(r.report, "isometry"), residual_of(r.report, "coisometry"),
                         residual_of(r.report, "well_defined")}),
               at);
    rank = std::max(rank, static_cast<Index>(residual_of(r.report, "rank_deficit")));
  }
  // negative control
  auto cs = categories(9999, 2);
  Bimodule D = random_bimodule(9998, cs[0], cs[1].cat, 2, true);
  const bool control_fails = !check_nondegenerate(D).nondegenerate();
  bool excluded = false;
  try {
    ew_map(random_module(9997, cs[0].cat), D);
  } catch (const InvalidInput&) {
    excluded = true;
  }
  return {failures == 0 && ip.worst <= ew_tol && iso.worst <= ew_tol && rank == 0 && non_free > 0 && control_fails &&
            excluded,
          "100 pairs (" + std::to_string(non_free) + " non-free), inner products " + fmt(ip.worst) + ", unitarity " +
            fmt(iso.worst) + ", rank deficit " + std::to_string(rank) + "; degenerate control " +
            (control_fails && excluded ? "rejected" : "NOT rejected")};
}

// 10 ------------------------------------------------------------------------------------

std::string generate_corpus(std::uint64_t seed)
{
  std::ostringstream all;
  BlockCategory A = random_block_category(seed);
  BlockCategory B = random_block_category(seed + 1, {}, "y");
  all << dump_spec("category", to_json(*A.cat));
  all << dump_spec("module", to_json(random_module(seed + 2, A.cat)));
  all << dump_spec("bimodule", to_json(random_bimodule(seed + 3, A, B.cat)));
  all << dump_spec("groupoid", to_json(disjoint_union(codiscrete(2), cyclic_group(3))));
  all << dump_spec("category", to_json(groupoid_category(cyclic_group(4))));
  return all.str();
}

std::string run_cli(const std::string& args, const fs::path& out)
{
  const std::string cmd = std::string(CSTARCAT_CLI) + " " + args + " --out " + out.string() + " > /dev/null 2>&1";
  if (std::system(cmd.c_str()) != 0)
    return "<cli failed>";
  return read_file(out.string());
}

Outcome round_trip()
{
  int mismatches = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    if (generate_corpus(seed) != generate_corpus(seed))
      ++mismatches;
  // across processes
  const fs::path dir = fs::temp_directory_path() / ("cstarcat_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  for (const char* args : {"gen category --seed 11", "gen bimodule --seed 12", "gen groupoid --shape mixed"}) {
    const std::string a = run_cli(args, dir / "a.cstar.json"), b = run_cli(args, dir / "b.cstar.json");
    if (a != b || a == "<cli failed>")
      ++mismatches;
  }
  fs::remove_all(dir);
  std::size_t files = 0;
  int not_identical = 0;
  for (const auto& entry : fs::directory_iterator(CSTARCAT_FIXTURES)) {
    if (entry.path().string().find(".cstar.json") == std::string::npos)
      continue;
    ++files;
    const std::string text = read_file(entry.path().string());
    try {
      if (canonicalize(text) != text)
        ++not_identical;
    } catch (const std::exception&) {
      ++not_identical;
    }
  }
  return {mismatches == 0 && not_identical == 0 && files >= min_fixtures,
          "determinism mismatches " + std::to_string(mismatches) + "; " + std::to_string(files) +
            " fixtures, non-identical round trips " + std::to_string(not_identical)};
}

} // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
    {"C*-axiom suite", axiom_suite},
    {"hull norm formula", hull_norm},
    {"factorization and polar", factorization},
    {"multiplier collapse", multipliers},
    {"Hilbert-module suite", hilbert_modules},
    {"free cover", free_covers},
    {"tensor cross-validation", tensors},
    {"Morita pipeline", morita},
    {"Eilenberg-Watts", eilenberg_watts},
    {"determinism and round-trip", round_trip},
  };
  std::vector<std::size_t> which;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << argv[i] << "\n";
      return 2;
    }
    which.push_back(static_cast<std::size_t>(k - 1));
  }
  if (which.empty())
    for (std::size_t k = 0; k < criteria.size(); ++k)
      which.push_back(k);
  bool all = true;
  for (std::size_t k : which) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (k + 1) << " " << criteria[k].first << ": "
              << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
