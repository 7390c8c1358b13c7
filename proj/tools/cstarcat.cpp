// cstarcat: verify, construct, tensor, Morita and Eilenberg-Watts checks on
// .cstar.json files. Exit status: 0 pass, 1 mathematical failure, 2 input error.

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include <cstarcat/cstarcat.hpp>
#include <cstarcat/serialize.hpp>

using namespace cstarcat;

namespace
{

struct Options
{
  double tol_abs = Tolerance{}.atol;
  double tol_rel = Tolerance{}.rtol;
  std::uint64_t seed = 0;
  int count = 10;
  bool oracle = false;
  std::string out;
  std::string format = "text";

  Tolerance tol() const { return Tolerance{tol_abs, tol_rel}; }
};

struct Input
{
  std::string path;
  std::string text;
  SpecFile spec;
};

Input load(const std::string& path)
{
  Input in{path, read_file(path), {}};
  in.spec = parse_spec(in.text);
  return in;
}

Input expect(const std::string& path, const std::string& kind)
{
  Input in = load(path);
  if (in.spec.kind != kind)
    throw FormatError(path + ": expected a " + kind + " file, found " + in.spec.kind);
  return in;
}

class Run
{
public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt),
                                                 start_(std::chrono::steady_clock::now())
  {
  }

  void input(const Input& in) { inputs_.push_back({in.path, digest(in.text)}); }
  Report& report() { return report_; }

  int finish()
  {
    const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const bool pass = report_.passed();
    if (opt_.format == "json") {
      Json inputs = Json::array();
      for (const auto& [path, d] : inputs_)
        inputs.push_back(Json{{"path", path}, {"digest", d}});
      Json j{{"command", command_}, {"inputs", inputs},     {"verdict", pass ? "pass" : "fail"},
             {"checks", to_json(report_)}, {"timing", seconds}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "command: " << command_ << "\n";
      for (const auto& [path, d] : inputs_)
        std::cout << "input: " << path << " (" << d << ")\n";
      for (const Check& c : report_.checks)
        std::cout << "  " << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << std::right
                  << std::scientific << std::setprecision(3) << " residual " << c.residual << "  threshold "
                  << c.threshold << "\n";
      std::cout << std::defaultfloat << "verdict: " << (pass ? "pass" : "fail") << "\n"
                << "timing: " << std::fixed << std::setprecision(3) << seconds << " s\n";
    }
    return pass ? 0 : 1;
  }

private:
  std::string command_;
  Options opt_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  Report report_;
};

void emit(const Options& opt, const std::string& kind, const Json& payload)
{
  const std::string text = dump_spec(kind, payload);
  if (opt.out.empty())
    std::cout << text;
  else
    write_file(opt.out, text);
}

/// A category file loaded for verification: non-orthonormal "basis" lists
/// are reported as a failed check instead of rejected.
CategoryRef load_category_for_verify(const Json& payload, const Tolerance& tol, Report& report)
{
  Json j = payload;
  double worst = 0.0;
  if (detail::field(j, "representation") == "basis") {
    for (const Json& h : detail::field(j, "homs")) {
      std::vector<CMatrix> mats;
      for (const Json& m : detail::field(h, "matrices"))
        mats.push_back(matrix_from_json(m));
      for (std::size_t a = 0; a < mats.size(); ++a)
        for (std::size_t b = 0; b < mats.size(); ++b) {
          if (mats[a].rows() != mats[b].rows() || mats[a].cols() != mats[b].cols())
            throw FormatError("category: hom matrices have inconsistent shapes");
          worst = std::max(worst, std::abs(frobenius_inner(mats[a], mats[b]) - (a == b ? 1.0 : 0.0)));
        }
    }
    j["representation"] = "generators";
    report.add("basis_orthonormal", worst, tol.bound(1.0));
  }
  return category_from_json(j, tol);
}

Report module_checks(const HilbertModule& M, const Tolerance& tol)
{
  Report r;
  const double scale = std::max(1.0, op_norm(M.proj));
  r.add("projection_selfadjoint", op_norm(M.proj - M.proj.adjoint()), tol.bound(scale));
  r.add("projection_idempotent", op_norm(M.proj * M.proj - M.proj), tol.bound(scale));
  r.add("projection_membership", hull_span_residual(*M.cat, M.base, M.base, M.proj), tol.bound(M.proj.norm()));
  return r;
}

int cmd_verify(const std::string& path, const Options& opt)
{
  const Tolerance tol = opt.tol();
  Input in = load(path);
  Run run("verify", opt);
  run.input(in);
  Report& r = run.report();
  const std::string& kind = in.spec.kind;
  if (kind == "category") {
    CategoryRef cat = load_category_for_verify(in.spec.payload, tol, r);
    r.merge(verify_category(*cat, tol, 4, opt.seed));
  } else if (kind == "module") {
    Report pre;
    CategoryRef cat = load_category_for_verify(detail::field(in.spec.payload, "category"), tol, pre);
    r.merge(pre, "category.");
    HilbertModule M = module_from_body(cat, in.spec.payload, tol, false);
    r.merge(module_checks(M, tol));
  } else if (kind == "bimodule") {
    Bimodule E = bimodule_from_json(in.spec.payload, tol, false);
    r.merge(verify_category(*E.source, tol, 2, opt.seed), "source.");
    r.merge(verify_category(*E.target, tol, 2, opt.seed), "target.");
    r.merge(verify_bimodule(E, tol, 4, opt.seed));
  } else {
    FiniteGroupoid G = groupoid_from_json(in.spec.payload);
    r.add_flag("groupoid_axioms", true);
    r.merge(verify_category(groupoid_category(G), tol, 4, opt.seed), "category.");
  }
  return run.finish();
}

std::vector<ObjectList> parse_lists(const std::vector<std::string>& specs)
{
  std::vector<ObjectList> out;
  for (const std::string& s : specs) {
    ObjectList xs;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      try {
        xs.push_back(static_cast<ObjectId>(std::stoul(item)));
      } catch (const std::exception&) {
        throw FormatError("bad object list '" + s + "'");
      }
    out.push_back(xs);
  }
  return out;
}

int cmd_construct(const std::string& verb, const std::string& path, const std::vector<std::string>& lists,
                  const Options& opt)
{
  const Tolerance tol = opt.tol();
  if (verb == "hull" || verb == "matalg" || verb == "multiplier") {
    Input in = expect(path, "category");
    CategoryRef cat = category_from_json(in.spec.payload, tol);
    if (verb == "hull")
      emit(opt, "category", to_json(*additive_hull(cat, parse_lists(lists)).cat));
    else if (verb == "matalg")
      emit(opt, "category", to_json(*matrix_algebra(cat).algebra));
    else
      emit(opt, "category", to_json(MultiplierCategory(cat, tol).realize()));
    return 0;
  }
  if (verb == "idem") {
    Input in = expect(path, "module");
    HilbertModule M = module_from_json(in.spec.payload, tol);
    AdditiveHull hull = additive_hull(M.cat, {M.base});
    IdempotentCompletion c = idempotent_completion(hull.cat, {{hull.index_of(M.base), M.proj}}, tol);
    emit(opt, "category", to_json(*c.cat));
    return 0;
  }
  if (verb == "conjugate") {
    Input in = expect(path, "bimodule");
    Bimodule E = bimodule_from_json(in.spec.payload, tol);
    ImprimitivityReport imp = check_imprimitivity(E, tol);
    if (!imp.data) {
      Options text = opt;
      text.out.clear();
      Run run("construct conjugate", text);
      run.input(in);
      run.report() = imp.report;
      std::cerr << "conjugate: the left product does not exist for this bimodule\n";
      return std::max(run.finish(), 1);
    }
    emit(opt, "bimodule", to_json(conjugate_bimodule(*imp.data, tol).bimodule));
    return 0;
  }
  throw FormatError("construct: unknown verb '" + verb + "'");
}

int cmd_tensor(const std::string& first, const std::string& second, const Options& opt)
{
  const Tolerance tol = opt.tol();
  Input a = load(first);
  Input b = expect(second, "bimodule");
  Bimodule E = bimodule_from_json(b.spec.payload, tol);
  Run run("tensor", opt);
  run.input(a);
  run.input(b);
  if (a.spec.kind == "module") {
    HilbertModule M = module_from_json(a.spec.payload, tol);
    if (!same_category(*M.cat, *E.source, tol))
      throw FormatError("tensor: module is not over the bimodule's source category");
    M.cat = E.source;
    HilbertModule out = tensor(M, E);
    if (opt.oracle)
      run.report().merge(tensor_cross_check(M, E, 4, opt.seed, tol), "oracle.");
    run.report().merge(module_checks(out, tol));
    if (!opt.out.empty())
      emit(opt, "module", to_json(out));
    return run.finish();
  }
  if (a.spec.kind != "bimodule")
    throw FormatError("tensor: first input must be a module or a bimodule");
  Bimodule D = bimodule_from_json(a.spec.payload, tol);
  if (!same_category(*D.target, *E.source, tol))
    throw FormatError("tensor: bimodules are not composable");
  E.source = D.target;
  for (HilbertModule& m : D.ob_map)
    m.cat = D.target;
  Bimodule out = tensor(D, E);
  if (opt.oracle)
    for (ObjectId x = 0; x < D.source->object_count(); ++x)
      run.report().merge(tensor_cross_check(D.at(x), E, 4, opt.seed + x, tol),
                         "oracle[" + D.source->label(x) + "].");
  run.report().merge(verify_bimodule(out, tol, 2, opt.seed));
  if (!opt.out.empty())
    emit(opt, "bimodule", to_json(out));
  return run.finish();
}

int cmd_morita(const std::string& path, const Options& opt)
{
  const Tolerance tol = opt.tol();
  Input in = expect(path, "bimodule");
  Bimodule E = bimodule_from_json(in.spec.payload, tol);
  Run run("morita", opt);
  run.input(in);
  Report& r = run.report();
  r.merge(verify_bimodule(E, tol, 2, opt.seed), "bimodule.");
  MoritaVerdict v = morita_check(E, tol);
  r.merge(v.imprimitivity.report, "imprimitivity.");
  if (v.phi) {
    r.merge(v.phi->report, "phi.");
    r.merge(v.psi->report, "psi.");
  } else {
    r.add_flag("left_product_exists", false);
  }
  return run.finish();
}

int cmd_ew(const std::string& path, const Options& opt)
{
  const Tolerance tol = opt.tol();
  Input in = expect(path, "bimodule");
  Bimodule E = bimodule_from_json(in.spec.payload, tol);
  Run run("ew", opt);
  run.input(in);
  Report& r = run.report();
  NondegeneracyReport nd = check_nondegenerate(E, tol);
  r.merge(nd.report, "nondegenerate.");
  if (!nd.nondegenerate())
    return run.finish();
  Worst wd, ip, iso, coiso;
  double rank = 0.0;
  for (int k = 0; k < opt.count; ++k) {
    HilbertModule M = random_module(opt.seed + static_cast<std::uint64_t>(k), E.source);
    EwResult res = ew_map(M, E, 4, opt.seed + static_cast<std::uint64_t>(k), tol);
    auto get = [&](const char* name) { return res.report.find(name)->residual; };
    wd.update(get("well_defined"), 1.0);
    ip.update(get("inner_products"), std::max(1.0, op_norm(res.source.gram)));
    iso.update(get("isometry"), 1.0);
    coiso.update(get("coisometry"), 1.0);
    rank = std::max(rank, get("rank_deficit"));
  }
  r.add("well_defined", wd.residual, tol.bound(1.0));
  r.add("inner_products", ip.residual, tol.bound(ip.scale));
  r.add("isometry", iso.residual, tol.bound(1.0));
  r.add("coisometry", coiso.residual, tol.bound(1.0));
  r.add("rank_deficit", rank, 0.0);
  return run.finish();
}

struct GenParams
{
  std::size_t objects = 3;
  std::size_t sectors = 2;
  Index max_mult = 2;
  Index max_dim = 2;
  std::size_t order = 3;
  std::size_t len = 2;
  std::string shape = "cyclic";
  std::string over;
};

/// Category named by --over: a category file, a module's category, or a
/// bimodule's source (target when `target` is set).
CategoryRef over_category(const std::string& path, bool target, const Tolerance& tol)
{
  Input in = load(path);
  const Json& j = in.spec.payload;
  if (in.spec.kind == "category")
    return category_from_json(j, tol);
  if (in.spec.kind == "module")
    return category_from_json(detail::field(j, "category"), tol);
  if (in.spec.kind == "bimodule")
    return category_from_json(detail::field(j, target ? "target" : "source"), tol);
  throw FormatError(path + ": --over needs a category, module or bimodule file");
}

FiniteGroupoid make_groupoid(const GenParams& p)
{
  if (p.shape == "cyclic")
    return cyclic_group(p.order);
  if (p.shape == "codiscrete")
    return codiscrete(p.order);
  if (p.shape == "mixed")
    return disjoint_union(codiscrete(2), cyclic_group(p.order));
  throw FormatError("gen: unknown groupoid shape '" + p.shape + "'");
}

int cmd_gen(const std::string& kind, const GenParams& p, const Options& opt)
{
  std::mt19937_64 rng(opt.seed);
  const BlockParams bp{p.objects, p.sectors, p.max_mult, p.max_dim, 64};
  auto block = [&](const std::string& prefix) { return random_block_category(rng(), bp, prefix); };
  if (kind == "category")
    emit(opt, "category", to_json(*block("x").cat));
  else if (kind == "groupoid")
    emit(opt, "groupoid", to_json(make_groupoid(p)));
  else if (kind == "groupoid-category")
    emit(opt, "category", to_json(groupoid_category(make_groupoid(p))));
  else if (kind == "module") {
    CategoryRef A = p.over.empty() ? block("x").cat : over_category(p.over, false, opt.tol());
    emit(opt, "module", to_json(random_module(rng(), A, p.len)));
  } else if (kind == "identity-bimodule") {
    CategoryRef A = p.over.empty() ? block("x").cat : over_category(p.over, true, opt.tol());
    emit(opt, "bimodule", to_json(yoneda_bimodule(A)));
  } else if (kind == "bimodule" || kind == "degenerate-bimodule") {
    BlockCategory A = block("x");
    BlockCategory B = block("y");
    emit(opt, "bimodule", to_json(random_bimodule(rng(), A, B.cat, p.len, kind != "bimodule")));
  } else if (kind == "mat-bimodule") {
    emit(opt, "bimodule", to_json(mat_equivalence(block("x").cat).bimodule));
  } else if (kind == "iso-bimodule") {
    BlockCategory A = block("x");
    emit(opt, "bimodule", to_json(bimodule_from_functor(frame_change(A, rng()).functor, opt.tol())));
  } else if (kind == "projection-bimodule") {
    emit(opt, "bimodule", to_json(bimodule_from_functor(diagonal_projection_functor(), opt.tol())));
  } else {
    throw FormatError("gen: unknown kind '" + kind + "'");
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"finite-dimensional C*-category engine"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  if (const char* env = std::getenv("CSTARCAT_TOL_ABS")) {
    try {
      opt.tol_abs = std::stod(env);
    } catch (const std::exception&) {
      std::cerr << "error: CSTARCAT_TOL_ABS is not a number\n";
      return 2;
    }
  }
  app.add_option("--tol-abs", opt.tol_abs, "absolute tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--tol-rel", opt.tol_rel, "relative tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", opt.seed, "random seed");
  app.add_option("--count", opt.count, "number of random trials")->check(CLI::PositiveNumber);
  app.add_flag("--oracle", opt.oracle, "cross-check tensor products against the quotient construction");
  app.add_option("--out", opt.out, "output file");
  app.add_option("--format", opt.format, "report format")->check(CLI::IsMember({"text", "json"}));

  std::string path, path2, verb, kind;
  std::vector<std::string> lists;
  GenParams gp;

  auto* verify = app.add_subcommand("verify", "check the axioms of a category, module, bimodule or groupoid");
  verify->add_option("file", path)->required();
  auto* construct = app.add_subcommand("construct", "build hull, matalg, idem, multiplier or conjugate");
  construct->add_option("verb", verb)->required()->check(
    CLI::IsMember({"hull", "matalg", "idem", "multiplier", "conjugate"}));
  construct->add_option("file", path)->required();
  construct->add_option("--list", lists, "extra hull object list, e.g. 0,1,1");
  auto* tensor_cmd = app.add_subcommand("tensor", "tensor a module or bimodule with a bimodule");
  tensor_cmd->add_option("first", path)->required();
  tensor_cmd->add_option("second", path2)->required();
  auto* morita = app.add_subcommand("morita", "imprimitivity and Morita checks for a bimodule");
  morita->add_option("file", path)->required();
  auto* ew = app.add_subcommand("ew", "Eilenberg-Watts comparison over random modules");
  ew->add_option("file", path)->required();
  auto* gen = app.add_subcommand("gen", "generate test data");
  gen->add_option("kind", kind)->required()->check(
    CLI::IsMember({"category", "groupoid", "groupoid-category", "module", "bimodule", "degenerate-bimodule",
                   "mat-bimodule", "iso-bimodule", "projection-bimodule", "identity-bimodule"}));
  gen->add_option("--objects", gp.objects)->check(CLI::Range(1, 6));
  gen->add_option("--sectors", gp.sectors)->check(CLI::Range(1, 6));
  gen->add_option("--max-mult", gp.max_mult)->check(CLI::Range(1, 4));
  gen->add_option("--max-dim", gp.max_dim)->check(CLI::Range(1, 4));
  gen->add_option("--order", gp.order)->check(CLI::Range(1, 8));
  gen->add_option("--len", gp.len)->check(CLI::Range(1, 4));
  gen->add_option("--over", gp.over, "category, module or bimodule file to build over");
  gen->add_option("--shape", gp.shape)->check(CLI::IsMember({"cyclic", "codiscrete", "mixed"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify)
      return cmd_verify(path, opt);
    if (*construct)
      return cmd_construct(verb, path, lists, opt);
    if (*tensor_cmd)
      return cmd_tensor(path, path2, opt);
    if (*morita)
      return cmd_morita(path, opt);
    if (*ew)
      return cmd_ew(path, opt);
    if (*gen)
      return cmd_gen(kind, gp, opt);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CompositionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ClosureViolation& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  } catch (const NotInvertible& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
