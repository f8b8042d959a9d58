#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "bubble/io.hpp"
#include "bubble/pipeline.hpp"
#include "fixtures.hpp"

using namespace bubble;
namespace fs = std::filesystem;

namespace {

RunConfig smoke_config(const fs::path& dir) {
  RunConfig c;
  c.workdir = dir;
  c.deterministic = true;
  c.rng_seed = 5;
  c.synth.n_subfields = 60;
  c.synth.n_planted_bubbles = 15;
  c.synth.mixed_concentration = false;
  c.retrieval_sample = 50;
  return c;
}

void run_all(const RunConfig& c) {
  run_stage(Stage::synth, c);
  for (auto s : analysis_stages()) run_stage(s, c);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("stage names") {
  for (auto s : analysis_stages()) CHECK(stage_from_string(to_string(s)) == s);
  CHECK(analysis_stages().front() == Stage::ingest);
  CHECK(analysis_stages().back() == Stage::report);
  CHECK_THROWS_AS(stage_from_string("plot"), InputError);
}

TEST_CASE("run configuration parsing") {
  const auto c = parse_run_config(
      "# comment\nworkdir = \"out\"\ntier = 0.25\nseed = 9\n"
      "[scientific]\ndim = 32\nepochs = 7\n[social]\nmin_count = 3\n"
      "[synth]\nn_subfields = 50\n[model]\ncovariates = z_sci, z_soc\nfixed_effects = age\n");
  CHECK(c.workdir == fs::path("out"));
  CHECK(c.tier == Tier::p0_25);
  CHECK(c.rng_seed == 9);
  CHECK(c.scientific.dim == 32);
  CHECK(c.scientific.epochs == 7);
  CHECK(c.social.min_token_count == 3);
  CHECK(c.synth.n_subfields == 50);
  CHECK(c.covariates == std::vector<std::string>{"z_sci", "z_soc"});
  CHECK(c.fixed_effects == std::vector<std::string>{"age"});
  try {
    parse_run_config("tier = 0.5\nbogus = 1\n");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("scientific.dim = many\n"), InputError);
}

TEST_CASE("fit before panel names the missing stage") {
  test::TempDir dir("order");
  RunConfig c;
  c.workdir = dir.path();
  try {
    run_stage(Stage::fit, c);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("panel") != std::string::npos);
  }
  CHECK_THROWS_AS(run_stage(Stage::ingest, c), InputError);
}

TEST_CASE("grant trend fixture") {
  // One subfield collapsing in 2000; grants first acknowledged in 1999, 2002 and 2002.
  std::vector<PaperRecord> ps = {test::paper(1, 1990), test::paper(2, 1999), test::paper(3, 2002), test::paper(4, 2002),
                                 test::paper(5, 2003)};
  ps[1].grant_ids = {"A"};
  ps[2].grant_ids = {"B"};
  ps[3].grant_ids = {"C", "A"};
  ps[4].grant_ids = {"B"};
  PaperTable papers(ps, {});
  const std::vector<SubfieldDefinition> subs = {test::subfield(1, {1, 2, 3, 4, 5})};
  const std::vector<BurstEvent> bursts = {{1, 2000, -4.0, Tier::p0_5}};
  const auto g = grants_trend(subs, bursts, papers, 2010);
  CHECK(g.n_collapsed == 1);
  CHECK(g.mean_new_grants.at(-1) == 1.0);
  CHECK(g.mean_new_grants.at(2) == 2.0);
  for (const auto& [r, m] : g.mean_new_grants)
    if (r != -1 && r != 2) CHECK(m == 0.0);
  CHECK(g.share_with_post_collapse_grant == 1.0);
  CHECK(g.median == 2.0);
  CHECK(g.fit.has_value());

  SUBCASE("no grants anywhere") {
    PaperTable bare({test::paper(1, 1990), test::paper(2, 1999)}, {});
    const std::vector<SubfieldDefinition> s2 = {test::subfield(1, {1, 2})};
    const auto z = grants_trend(s2, bursts, bare, 2010);
    for (const auto& [_, m] : z.mean_new_grants) CHECK(m == 0.0);
    CHECK(z.share_with_post_collapse_grant == 0.0);
  }
  SUBCASE("follow-up filter") {
    GrantsOptions o;
    o.followup_years = 15;
    CHECK_THROWS_AS(grants_trend(subs, bursts, papers, 2010, o), InputError);
  }
}

TEST_CASE("newcomer and incumbent productivity") {
  // Subfields collapse in 2000. Incumbent author 1 joined in 1990, newcomer 2 in 1999.
  std::vector<PaperRecord> ps;
  PaperId id = 1;
  auto add = [&](int year, std::vector<std::uint64_t> authors) {
    ps.push_back(test::paper(id++, year, {}, std::move(authors)));
    return ps.back().paper_id;
  };
  std::vector<SubfieldDefinition> subs;
  for (int s = 0; s < 3; ++s) {
    const std::uint64_t inc = 10 + 2 * static_cast<std::uint64_t>(s), nc = inc + 1;
    const auto seed = add(1990, {inc});
    const auto m2 = add(1999, {nc});
    for (int k = 0; k < 2 + s; ++k) add(2001 + k, {inc});  // incumbent output after collapse
    for (int k = 0; k < 1; ++k) add(2002, {nc});
    subs.push_back(test::subfield(seed, {seed, m2}));
  }
  PaperTable papers(ps, {});
  std::vector<BurstEvent> bursts;
  for (const auto& s : subs) bursts.push_back({s.subfield_id, 2000, -3.0, Tier::p0_5});
  const auto r = productivity_comparison(subs, bursts, papers, 2010, 5);
  REQUIRE(r.test.has_value());
  CHECK(r.newcomer == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(r.incumbent == std::vector<double>{2.0, 3.0, 4.0});
  CHECK(r.test->mean_difference == doctest::Approx(-2.0));
  const auto late = productivity_comparison(subs, bursts, papers, 2004, 5);
  CHECK(late.subfield_ids.empty());
  CHECK_FALSE(late.test.has_value());
}

TEST_CASE("end-to-end on a small planted corpus") {
  test::TempDir dir("e2e");
  const auto c = smoke_config(dir.path());
  run_all(c);
  for (const char* f : {"corpus/papers.jsonl", "retrieval.json", "subfields.csv", "diffusion.csv", "bursts.csv",
                        "panel_p0.5.csv", "fit_p0.5.json", "survival_p0.5.csv", "posthoc_p0.5.json",
                        "report/table1.csv", "report/summary.json"})
    CHECK_MESSAGE(fs::exists(dir.path() / f), f);
  CHECK(PaperTable(parse_papers(read_file(dir.path() / "papers.jsonl"), {})).size() <= 5000);

  SUBCASE("rerunning a stage is idempotent") {
    const auto before = read_file(dir.path() / "panel_p0.5.csv");
    run_stage(Stage::panel, c);
    CHECK(read_file(dir.path() / "panel_p0.5.csv") == before);
  }

  SUBCASE("bubbles show lower social diffusion than controls") {
    const auto truth = parse_truth(read_file(dir.path() / "truth.json"), "truth.json");
    std::map<SubfieldId, bool> is_bubble;
    std::map<SubfieldId, int> peak;
    for (const auto& [id, e] : truth) {
      is_bubble[id] = e.is_bubble;
      if (e.peak_year) peak[id] = *e.peak_year;
    }
    const auto t = parse_csv(read_file(dir.path() / "diffusion.csv"));
    const auto c_id = t.column("subfield_id"), c_year = t.column("year"), c_age = t.column("age"), c_soc = t.column("soc_diffusion");
    std::map<std::pair<int, int>, std::vector<double>> control_cells;
    std::map<SubfieldId, std::pair<double, int>> mean_soc;
    std::vector<std::tuple<SubfieldId, int, int, double>> bubble_peaks;
    for (const auto& r : t.rows) {
      if (r[c_soc].empty()) continue;
      const auto id = static_cast<SubfieldId>(parse_int(r[c_id], "id"));
      const int year = static_cast<int>(parse_int(r[c_year], "year")), age = static_cast<int>(parse_int(r[c_age], "age"));
      const double soc = parse_double(r[c_soc], "soc");
      auto& m = mean_soc[id];
      m.first += soc;
      ++m.second;
      if (!is_bubble.at(id)) control_cells[{year, age}].push_back(soc);
      else if (peak.at(id) == year) bubble_peaks.emplace_back(id, year, age, soc);
    }
    std::size_t compared = 0;
    for (const auto& [id, year, age, soc] : bubble_peaks) {
      auto it = control_cells.find({year, age});
      if (it == control_cells.end()) continue;
      for (double v : it->second) {
        CHECK(soc < v);
        ++compared;
      }
    }
    CHECK(compared > 0);

    // one-sided Welch test on per-subfield means
    std::vector<double> b, k;
    for (const auto& [id, m] : mean_soc) (is_bubble.at(id) ? b : k).push_back(m.first / m.second);
    auto moments = [](const std::vector<double>& v) {
      double mean = 0.0, ss = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) ss += (x - mean) * (x - mean);
      return std::pair{mean, ss / static_cast<double>(v.size() - 1)};
    };
    const auto [mb, vb] = moments(b);
    const auto [mk, vk] = moments(k);
    const double z = (mk - mb) / std::sqrt(vb / static_cast<double>(b.size()) + vk / static_cast<double>(k.size()));
    CHECK(z > 3.09);  // alpha = 0.001, normal reference
  }
}

}  // TEST_SUITE
