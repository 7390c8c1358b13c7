#ifndef CSTARCAT_SERIALIZE_HPP
#define CSTARCAT_SERIALIZE_HPP

// JSON spec files: {"kind", "version", "payload"}, complex scalars as [re, im].

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bimodules.hpp"
#include "generators.hpp"
#include "report.hpp"

namespace cstarcat
{

using Json = nlohmann::json;

inline constexpr const char* format_version = "1";

/// Thrown for anything wrong with a file: syntax, schema, or failed validation.
struct FormatError : InvalidInput
{
  using InvalidInput::InvalidInput;
};

namespace detail
{

inline const Json& field(const Json& j, const char* key)
{
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const Json& j, const char* what)
{
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw FormatError(std::string("field '") + what + "' has the wrong type");
  }
}

} // namespace detail

// Matrices -------------------------------------------------------------------------

inline Json to_json(const CMatrix& m)
{
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline CMatrix matrix_from_json(const Json& j)
{
  const auto rows = detail::get_as<Index>(detail::field(j, "rows"), "rows");
  const auto cols = detail::get_as<Index>(detail::field(j, "cols"), "cols");
  const Json& data = detail::field(j, "data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Index>(data.size()) != rows)
    throw FormatError("matrix: row count disagrees with data");
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = data[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw FormatError("matrix: column count disagrees with data");
    for (Index k = 0; k < cols; ++k) {
      const Json& z = row[static_cast<std::size_t>(k)];
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
        throw FormatError("matrix: entries must be [re, im] pairs");
      m(i, k) = Complex(z[0].get<double>(), z[1].get<double>());
    }
  }
  detail::require_finite(m, "matrix");
  return m;
}

// Categories ------------------------------------------------------------------------

inline Json to_json(const CStarCategory& cat)
{
  Json objects = Json::array();
  for (const ObjectInfo& o : cat.objects())
    objects.push_back(Json{{"label", o.label}, {"dim", o.dim}});
  Json homs = Json::array();
  for (ObjectId x = 0; x < cat.object_count(); ++x)
    for (ObjectId y = 0; y < cat.object_count(); ++y) {
      Json mats = Json::array();
      for (const CMatrix& b : cat.hom(x, y))
        mats.push_back(to_json(b));
      homs.push_back(Json{{"src", x}, {"dst", y}, {"matrices", std::move(mats)}});
    }
  return Json{{"representation", "basis"}, {"objects", std::move(objects)}, {"homs", std::move(homs)}};
}

/// "basis" hom lists are validated as orthonormal and kept verbatim;
/// "generators" are orthonormalized on load.
inline CategoryRef category_from_json(const Json& j, const Tolerance& tol = {})
{
  const auto rep = detail::get_as<std::string>(detail::field(j, "representation"), "representation");
  if (rep != "basis" && rep != "generators")
    throw FormatError("category: representation must be 'basis' or 'generators'");
  std::vector<ObjectInfo> objects;
  for (const Json& o : detail::field(j, "objects"))
    objects.push_back({detail::get_as<std::string>(detail::field(o, "label"), "label"),
                       detail::get_as<Index>(detail::field(o, "dim"), "dim")});
  const std::size_t n = objects.size();
  if (n == 0)
    throw FormatError("category: no objects");
  std::vector<std::vector<std::vector<CMatrix>>> homs(n, std::vector<std::vector<CMatrix>>(n));
  for (const Json& h : detail::field(j, "homs")) {
    const auto x = detail::get_as<std::size_t>(detail::field(h, "src"), "src");
    const auto y = detail::get_as<std::size_t>(detail::field(h, "dst"), "dst");
    if (x >= n || y >= n)
      throw FormatError("category: hom entry refers to an unknown object");
    for (const Json& m : detail::field(h, "matrices"))
      homs[x][y].push_back(matrix_from_json(m));
  }
  try {
    if (rep == "basis")
      return share(CStarCategory(std::move(objects), std::move(homs), tol));
    return share(CStarCategory::from_generators(std::move(objects), homs, tol));
  } catch (const FormatError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("category: ") + e.what());
  }
}

/// Structural equality of two loaded categories (same objects, same hom spans).
inline bool same_category(const CStarCategory& a, const CStarCategory& b, const Tolerance& tol = {})
{
  if (a.object_count() != b.object_count())
    return false;
  for (ObjectId x = 0; x < a.object_count(); ++x)
    if (a.dim(x) != b.dim(x))
      return false;
  for (ObjectId x = 0; x < a.object_count(); ++x)
    for (ObjectId y = 0; y < a.object_count(); ++y) {
      if (a.hom_dim(x, y) != b.hom_dim(x, y))
        return false;
      for (const CMatrix& m : a.hom(x, y))
        if (!tol.accepts(b.span_residual(x, y, m), 1.0))
          return false;
    }
  return true;
}

// Modules and bimodules --------------------------------------------------------------

inline Json module_body(const HilbertModule& M)
{
  return Json{{"base", M.base}, {"projection", to_json(M.proj)}};
}

/// strict = false keeps a well-shaped projection without validating it, so
/// that verification can report the defect instead of refusing the file.
inline HilbertModule module_from_body(const CategoryRef& cat, const Json& j, const Tolerance& tol, bool strict = true)
{
  auto base = detail::get_as<ObjectList>(detail::field(j, "base"), "base");
  for (ObjectId x : base)
    if (x >= cat->object_count())
      throw FormatError("module: base refers to an unknown object");
  CMatrix p = matrix_from_json(detail::field(j, "projection"));
  if (!strict) {
    const Index d = list_dim(*cat, base);
    if (p.rows() != d || p.cols() != d)
      throw FormatError("module: projection has the wrong shape");
    return HilbertModule{cat, std::move(base), std::move(p)};
  }
  try {
    return make_module(cat, std::move(base), std::move(p), tol);
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("module: ") + e.what());
  }
}

inline Json to_json(const HilbertModule& M)
{
  Json j = module_body(M);
  j["category"] = to_json(*M.cat);
  return j;
}

inline HilbertModule module_from_json(const Json& j, const Tolerance& tol = {}, bool strict = true)
{
  return module_from_body(category_from_json(detail::field(j, "category"), tol), j, tol, strict);
}

inline Json to_json(const Bimodule& E)
{
  Json ob = Json::array();
  for (const HilbertModule& M : E.ob_map)
    ob.push_back(module_body(M));
  Json mor = Json::array();
  for (ObjectId x = 0; x < E.mor_map.size(); ++x)
    for (ObjectId y = 0; y < E.mor_map[x].size(); ++y) {
      Json blocks = Json::array();
      for (const CMatrix& b : E.mor_map[x][y])
        blocks.push_back(to_json(b));
      mor.push_back(Json{{"src", x}, {"dst", y}, {"blocks", std::move(blocks)}});
    }
  return Json{{"source", to_json(*E.source)}, {"target", to_json(*E.target)}, {"ob_map", std::move(ob)},
              {"mor_map", std::move(mor)}};
}

/// Loads a bimodule; shapes are checked here, the axioms by verify_bimodule.
inline Bimodule bimodule_from_json(const Json& j, const Tolerance& tol = {}, bool strict = true)
{
  Bimodule E;
  E.source = category_from_json(detail::field(j, "source"), tol);
  E.target = category_from_json(detail::field(j, "target"), tol);
  const std::size_t n = E.source->object_count();
  const Json& ob = detail::field(j, "ob_map");
  if (!ob.is_array() || ob.size() != n)
    throw FormatError("bimodule: ob_map needs one module per source object");
  for (const Json& m : ob)
    E.ob_map.push_back(module_from_body(E.target, m, tol, strict));
  E.mor_map.assign(n, std::vector<std::vector<CMatrix>>(n));
  std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
  for (const Json& h : detail::field(j, "mor_map")) {
    const auto x = detail::get_as<std::size_t>(detail::field(h, "src"), "src");
    const auto y = detail::get_as<std::size_t>(detail::field(h, "dst"), "dst");
    if (x >= n || y >= n || seen[x][y])
      throw FormatError("bimodule: bad or repeated mor_map entry");
    seen[x][y] = true;
    for (const Json& b : detail::field(h, "blocks")) {
      CMatrix m = matrix_from_json(b);
      if (m.rows() != E.ob_map[y].dim() || m.cols() != E.ob_map[x].dim())
        throw FormatError("bimodule: operator block has the wrong shape");
      E.mor_map[x][y].push_back(std::move(m));
    }
    if (E.mor_map[x][y].size() != E.source->hom(x, y).size())
      throw FormatError("bimodule: mor_map must give one block per hom basis element");
  }
  for (ObjectId x = 0; x < n; ++x)
    for (ObjectId y = 0; y < n; ++y)
      if (!seen[x][y] && !E.source->hom(x, y).empty())
        throw FormatError("bimodule: mor_map entry missing");
  return E;
}

// Groupoids ------------------------------------------------------------------------------

inline Json to_json(const FiniteGroupoid& G)
{
  Json mors = Json::array();
  for (std::size_t g = 0; g < G.size(); ++g)
    mors.push_back(Json{{"src", G.src[g]}, {"dst", G.dst[g]}});
  return Json{{"objects", G.objects},   {"morphisms", std::move(mors)}, {"compose", G.compose},
              {"inverse", G.inverse},   {"identity", G.identity}};
}

inline FiniteGroupoid groupoid_from_json(const Json& j)
{
  FiniteGroupoid G;
  G.objects = detail::get_as<std::vector<std::string>>(detail::field(j, "objects"), "objects");
  for (const Json& m : detail::field(j, "morphisms")) {
    G.src.push_back(detail::get_as<ObjectId>(detail::field(m, "src"), "src"));
    G.dst.push_back(detail::get_as<ObjectId>(detail::field(m, "dst"), "dst"));
  }
  G.compose = detail::get_as<std::vector<std::vector<long>>>(detail::field(j, "compose"), "compose");
  G.inverse = detail::get_as<std::vector<std::size_t>>(detail::field(j, "inverse"), "inverse");
  G.identity = detail::get_as<std::vector<std::size_t>>(detail::field(j, "identity"), "identity");
  try {
    validate_groupoid(G);
  } catch (const InvalidInput& e) {
    throw FormatError(e.what());
  }
  return G;
}

// Spec files ---------------------------------------------------------------------------------

struct SpecFile
{
  std::string kind;
  Json payload;
};

inline std::string dump_spec(const std::string& kind, const Json& payload)
{
  Json j{{"kind", kind}, {"version", format_version}, {"payload", payload}};
  return j.dump(1) + "\n";
}

inline SpecFile parse_spec(const std::string& text)
{
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("parse error: ") + e.what());
  }
  SpecFile f;
  f.kind = detail::get_as<std::string>(detail::field(j, "kind"), "kind");
  const auto version = detail::get_as<std::string>(detail::field(j, "version"), "version");
  if (version != format_version)
    throw FormatError("unsupported format version '" + version + "'");
  if (f.kind != "category" && f.kind != "module" && f.kind != "bimodule" && f.kind != "groupoid")
    throw FormatError("unknown kind '" + f.kind + "'");
  f.payload = detail::field(j, "payload");
  return f;
}

inline std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw FormatError("cannot write " + path);
  out << text;
}

/// FNV-1a, enough to tell inputs apart in reports.
inline std::string digest(const std::string& bytes)
{
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Re-serializes a spec file through the in-memory types.
inline std::string canonicalize(const std::string& text, const Tolerance& tol = {})
{
  SpecFile f = parse_spec(text);
  if (f.kind == "category")
    return dump_spec(f.kind, to_json(*category_from_json(f.payload, tol)));
  if (f.kind == "module")
    return dump_spec(f.kind, to_json(module_from_json(f.payload, tol)));
  if (f.kind == "bimodule")
    return dump_spec(f.kind, to_json(bimodule_from_json(f.payload, tol)));
  return dump_spec(f.kind, to_json(groupoid_from_json(f.payload)));
}

inline Json to_json(const Report& r)
{
  Json checks = Json::array();
  for (const Check& c : r.checks)
    checks.push_back(Json{{"name", c.name}, {"residual", c.residual}, {"threshold", c.threshold}, {"pass", c.pass}});
  return checks;
}

} // namespace cstarcat

#endif
