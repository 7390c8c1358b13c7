#ifndef CSTARCAT_REPORT_HPP
#define CSTARCAT_REPORT_HPP

#include <algorithm>
#include <string>
#include <vector>

namespace cstarcat
{

struct Check
{
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

/// Named residual checks; the verdict is the conjunction of all of them.
struct Report
{
  std::vector<Check> checks;

  /// Records max(residual) under name, passing iff residual <= threshold.
  void add(const std::string& name, double residual, double threshold)
  {
    checks.push_back({name, residual, threshold, residual <= threshold});
  }

  /// Boolean verdict encoded as residual 0 (holds) or 1 (fails).
  void add_flag(const std::string& name, bool holds)
  {
    checks.push_back({name, holds ? 0.0 : 1.0, 0.0, holds});
  }

  void merge(const Report& other, const std::string& prefix = {})
  {
    for (Check c : other.checks) {
      c.name = prefix + c.name;
      checks.push_back(std::move(c));
    }
  }

  bool passed() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  const Check* find(const std::string& name) const
  {
    for (const Check& c : checks)
      if (c.name == name)
        return &c;
    return nullptr;
  }

  bool passed(const std::string& name) const
  {
    const Check* c = find(name);
    return c != nullptr && c->pass;
  }
};

/// Running maximum of a residual together with the largest scale seen.
struct Worst
{
  double residual = 0.0;
  double scale = 0.0;

  void update(double r, double s)
  {
    residual = std::max(residual, r);
    scale = std::max(scale, s);
  }
};

} // namespace cstarcat

#endif
