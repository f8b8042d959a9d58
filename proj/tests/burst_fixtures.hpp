#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bubble/burst.hpp"

namespace bubble::test {

// A detect_burst input where switching one qualification rule changes the outcome.
struct RuleFixture {
  std::string rule;
  YearValues z;
  YearSeries series;
  int last_year;
  QualificationRules rules_off;  // the named rule disabled, the others as default
};

inline CutoffSet fixed_cutoffs(double threshold = -2.0) {
  CutoffSet c;
  for (auto t : kAllTiers) c.thresholds[t] = threshold;
  return c;
}

inline std::vector<RuleFixture> rule_fixtures() {
  std::vector<RuleFixture> out;
  {
    // A deep drop followed by recovery: the later mean is positive.
    RuleFixture f{"negative mean after the drop", {}, {}, 2010, {}};
    f.z = {{2003, 0.5}, {2004, -3.0}, {2005, 1.0}, {2006, 2.0}};
    f.series = {{2000, 1}, {2001, 4}, {2002, 9}, {2003, 9}, {2004, 3}, {2005, 6}, {2006, 12}, {2007, 2}};
    f.rules_off.require_negative_mean_after = false;
    out.push_back(f);
  }
  {
    // Citations peak in the final observed year.
    RuleFixture f{"peak not in the last year", {}, {}, 2008, {}};
    f.z = {{2003, 0.5}, {2004, -3.0}, {2005, -0.5}, {2006, -0.2}};
    f.series = {{2000, 2}, {2001, 5}, {2002, 8}, {2003, 9}, {2004, 3}, {2005, 4}, {2006, 5}, {2007, 7}, {2008, 20}};
    f.rules_off.reject_peak_in_last_year = false;
    out.push_back(f);
  }
  {
    // Two qualifying drops; the later one is deeper.
    RuleFixture f{"most substantial drop", {}, {}, 2015, {}};
    f.z = {{2004, 0.5}, {2005, -2.5}, {2006, -0.5}, {2007, 0.2}, {2008, 0.1}, {2009, -3.5}, {2010, -0.5}, {2011, -0.4}};
    f.series = {{2000, 2}, {2001, 10}, {2002, 30}, {2003, 20}, {2004, 12}, {2005, 8}, {2010, 4}, {2015, 1}};
    f.rules_off.pick_most_substantial = false;
    out.push_back(f);
  }
  return out;
}

inline std::optional<BurstEvent> run_fixture(const RuleFixture& f, const QualificationRules& rules) {
  return detect_burst(1, f.z, f.series, fixed_cutoffs(), Tier::p0_5, f.last_year, rules);
}

}  // namespace bubble::test
