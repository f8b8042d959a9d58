#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bubble/burst.hpp"
#include "bubble/io.hpp"
#include "bubble/synth.hpp"
#include "burst_fixtures.hpp"

using namespace bubble;

TEST_SUITE("burst") {

TEST_CASE("two-year differences") {
  CHECK(two_year_delta({{2000, 0}, {2001, 10}, {2002, 40}, {2003, 90}}) == YearValues{{2002, 40.0}, {2003, 80.0}});
  for (const auto& [_, d] : two_year_delta({{2000, 4}, {2001, 4}, {2002, 4}, {2003, 4}})) CHECK(d == 0.0);
  CHECK(two_year_delta({{2000, 1}, {2001, 2}}).empty());
}

TEST_CASE("series restricted to birth") {
  CitationSeries s{1, {{1998, 3}, {1999, 1}, {2000, 2}, {2001, 5}}};
  CHECK(series_from_birth(s, 2000) == YearSeries{{2000, 2}, {2001, 5}});
}

TEST_CASE("within-subfield standardization") {
  const auto z = standardize_deltas({{2002, -1.0}, {2003, 0.0}, {2004, 1.0}});
  CHECK(z.at(2002) == doctest::Approx(-1.0));
  CHECK(z.at(2003) == doctest::Approx(0.0));
  CHECK(z.at(2004) == doctest::Approx(1.0));
  for (const auto& [_, v] : standardize_deltas({{2002, 3.0}, {2003, 3.0}})) CHECK(v == 0.0);
  CHECK(standardize_deltas({{2002, 3.0}}).empty());
}

TEST_CASE("type-7 quantile") {
  CHECK(quantile_type7({3.0, 1.0, 2.0}, 0.0) == 1.0);
  CHECK(quantile_type7({3.0, 1.0, 2.0}, 1.0) == 3.0);
  CHECK(quantile_type7({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile_type7({10.0, 0.0}, 0.25) == 2.5);
  CHECK_THROWS_AS(quantile_type7({}, 0.5), InputError);
}

TEST_CASE("cutoffs match the sorting oracle exactly") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> len(1, 3000);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = nd(rng);
    const auto c = global_cutoffs(v);
    for (auto t : kAllTiers) CHECK(c.at(t) == brute_force_quantile(v, tier_probability(t)));
  }
}

TEST_CASE("cutoffs of a standard normal sample") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::vector<double> v(1'000'000);
  for (auto& x : v) x = nd(rng);
  CHECK(global_cutoffs(v).at(Tier::p0_5) == doctest::Approx(-2.576).epsilon(0.02 / 2.576));
}

TEST_CASE("constant pool gives equal tiers") {
  const std::vector<double> v(50, -1.5);
  const auto c = global_cutoffs(v);
  for (auto t : kAllTiers) CHECK(c.at(t) == -1.5);
}

TEST_CASE("tier names") {
  CHECK(tier_from_string("0.25") == Tier::p0_25);
  CHECK(tier_from_string("p0.1") == Tier::p0_1);
  CHECK(to_string(Tier::p0_5) == "p0.5");
  CHECK_THROWS_AS(tier_from_string("0.3"), InputError);
}

TEST_CASE("burst detection cases") {
  const auto cut = test::fixed_cutoffs();
  const YearSeries series = {{2000, 1}, {2003, 10}, {2010, 2}};
  SUBCASE("nothing below the threshold") {
    CHECK_FALSE(detect_burst(1, {{2002, -1.0}, {2003, 0.5}}, series, cut, Tier::p0_5, 2010).has_value());
  }
  SUBCASE("the deeper of two qualifying drops") {
    const YearValues z = {{2005, -2.5}, {2006, -0.5}, {2009, -3.0}, {2010, -0.2}};
    const auto e = detect_burst(1, z, series, cut, Tier::p0_5, 2012);
    REQUIRE(e.has_value());
    CHECK(e->burst_year == 2009);
  }
  SUBCASE("a final-year candidate has no later mean") {
    CHECK_FALSE(detect_burst(1, {{2008, 0.1}, {2009, -3.0}}, series, cut, Tier::p0_5, 2012).has_value());
  }
}

TEST_CASE("each qualification rule flips its fixture") {
  for (const auto& f : test::rule_fixtures()) {
    CAPTURE(f.rule);
    const auto on = test::run_fixture(f, {});
    const auto off = test::run_fixture(f, f.rules_off);
    REQUIRE(off.has_value());
    if (f.rule == "most substantial drop") {
      REQUIRE(on.has_value());
      CHECK(on->burst_year == 2009);
      CHECK(off->burst_year == 2005);
    } else {
      CHECK_FALSE(on.has_value());
    }
  }
}

TEST_CASE("detect_all nests tiers and round-trips") {
  std::mt19937_64 rng(3);
  std::poisson_distribution<int> pois(20.0);
  std::vector<CitationSeries> series;
  for (SubfieldId id = 1; id <= 80; ++id) {
    CitationSeries s{id, {}};
    for (int y = 1990; y <= 2019; ++y) s.by_year[y] = pois(rng);
    if (id % 10 == 0)
      for (int y = 2005; y <= 2019; ++y) s.by_year[y] = y < 2008 ? 200 : 2;
    series.push_back(s);
  }
  std::vector<SubfieldSeriesInput> in;
  for (const auto& s : series) in.push_back({s.subfield_id, 1990, &s});
  const auto r = detect_all(in, 2019);
  auto ids = [&](Tier t) {
    std::vector<SubfieldId> v;
    for (const auto& e : r.events.at(t)) v.push_back(e.subfield_id);
    return v;
  };
  const auto a = ids(Tier::p0_5), b = ids(Tier::p0_25), c = ids(Tier::p0_1);
  CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  CHECK(std::includes(b.begin(), b.end(), c.begin(), c.end()));
  CHECK(r.cutoffs.at(Tier::p0_1) <= r.cutoffs.at(Tier::p0_25));
  CHECK(r.cutoffs.at(Tier::p0_25) <= r.cutoffs.at(Tier::p0_5));
  const auto back = parse_bursts(serialize_bursts(r), "b.csv");
  for (auto t : kAllTiers) CHECK(back.at(t) == r.events.at(t));
}

TEST_CASE("too-short series cannot be pooled") {
  CitationSeries s{1, {{2018, 1}, {2019, 2}}};
  std::vector<SubfieldSeriesInput> in = {{1, 2018, &s}};
  CHECK_THROWS_AS(detect_all(in, 2019), InputError);
}

}  // TEST_SUITE
