#include <doctest.h>

#include <algorithm>
#include <set>

#include "bubble/burst.hpp"
#include "bubble/io.hpp"
#include "bubble/subfield.hpp"
#include "bubble/synth.hpp"
#include "fixtures.hpp"

using namespace bubble;

namespace {

SynthConfig small_synth() {
  SynthConfig c;
  c.n_subfields = 60;
  c.n_planted_bubbles = 12;
  return c;
}

DetectionResult detect_planted(const SynthCorpus& corpus, int last_year) {
  std::vector<CitationSeries> series;
  for (const auto& [id, s] : corpus.planted_series) series.push_back({id, s});
  std::vector<SubfieldSeriesInput> in;
  for (const auto& s : series) in.push_back({s.subfield_id, corpus.truth.at(s.subfield_id).seed_year, &s});
  return detect_all(in, last_year);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("configuration validation") {
  SynthConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_planted_bubbles = c.n_subfields + 1;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SynthConfig{};
  c.kappa_bubble = 1.5;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SynthConfig{};
  c.bubble.crash_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = SynthConfig{};
  c.n_topics = 8;  // one topic per community cannot fill a paper
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("generation is a pure function of the configuration") {
  test::TempDir a("synth_a"), b("synth_b");
  const auto cfg = small_synth();
  write_corpus(generate_corpus(cfg), cfg, a.path());
  write_corpus(generate_corpus(cfg), cfg, b.path());
  for (const char* f : {"papers.jsonl", "citations.tsv", "seeds.csv", "truth.json"})
    CHECK(read_file(a.path() / f) == read_file(b.path() / f));
  auto other = cfg;
  other.rng_seed += 1;
  test::TempDir c("synth_c");
  write_corpus(generate_corpus(other), other, c.path());
  CHECK(read_file(a.path() / "citations.tsv") != read_file(c.path() / "citations.tsv"));
}

TEST_CASE("corpus is consistent with its ground truth") {
  const auto cfg = small_synth();
  const auto corpus = generate_corpus(cfg);
  PaperTable papers(corpus.papers, {cfg.first_year, cfg.last_year});
  std::string tsv;
  for (const auto& e : corpus.citations) tsv += std::to_string(e.citing) + "\t" + std::to_string(e.cited) + "\n";
  const auto g = parse_citations(tsv, papers, {.strict = true});
  CHECK(g.report().skipped() == 0);
  CHECK(corpus.truth.size() == static_cast<std::size_t>(cfg.n_subfields));
  const auto n_bubbles = std::count_if(corpus.truth.begin(), corpus.truth.end(), [](const auto& kv) { return kv.second.is_bubble; });
  CHECK(n_bubbles == cfg.n_planted_bubbles);

  // The seeds file lists every subfield and the truth round-trips.
  CHECK(corpus.seeds.size() == corpus.truth.size());
  const auto back = parse_truth(serialize_truth(corpus.truth), "truth.json");
  CHECK(back.size() == corpus.truth.size());

  // Member citation counts reproduce the planted series; a subfield's members are the
  // papers carrying its private tokens.
  std::map<std::string, std::vector<PaperId>> members;
  for (const auto& p : corpus.papers)
    for (const auto& t : p.topic_entries)
      if (t.descriptor.rfind('S', 0) == 0 && t.descriptor.size() > 1 && t.descriptor.find('_') != std::string::npos &&
          t.descriptor.substr(t.descriptor.find('_')) == "_0")
        members[t.descriptor].push_back(p.paper_id);
  for (const auto& [token, ids] : members) {
    const auto sub = test::subfield(ids.front(), ids);
    const auto series = subfield_citation_series(sub, g, papers);
    const auto& planted = corpus.planted_series.at(ids.front());
    for (const auto& [y, c] : planted) CHECK(series.by_year.at(y) == c);
  }
}

TEST_CASE("planted bubbles peak once, before the last year") {
  const auto cfg = small_synth();
  const auto corpus = generate_corpus(cfg);
  for (const auto& [id, t] : corpus.truth) {
    const auto& s = corpus.planted_series.at(id);
    for (const auto& [y, c] : s) CHECK(c >= 0);
    if (!t.is_bubble) continue;
    REQUIRE(t.peak_year.has_value());
    CHECK(*t.peak_year < cfg.last_year);
    const auto peak = s.at(*t.peak_year);
    for (const auto& [y, c] : s)
      if (y != *t.peak_year) CHECK(c < peak);
  }
}

TEST_CASE("bubble expectation rises then decays") {
  BubbleProfile p;
  const auto e = bubble_expectation(p, 1980, 10, 2019);
  CHECK(e.at(1980) == doctest::Approx(p.base_citations));
  CHECK(e.at(1990) == doctest::Approx(p.peak_citations));
  CHECK(e.at(1991) == doctest::Approx(p.peak_citations * (1.0 - p.crash_fraction)));
  for (int y = 1981; y <= 1990; ++y) CHECK(e.at(y) > e.at(y - 1));
}

TEST_CASE("detection on the planted series") {
  SUBCASE("without bubbles the false-positive ceiling holds") {
    auto cfg = small_synth();
    cfg.n_subfields = 200;
    cfg.n_planted_bubbles = 0;
    const auto corpus = generate_corpus(cfg);
    const auto r = detect_planted(corpus, cfg.last_year);
    CHECK(static_cast<double>(r.events.at(Tier::p0_5).size()) <= 0.02 * cfg.n_subfields);
  }
  SUBCASE("planted bubbles are found near their planted year") {
    SynthConfig cfg;
    const auto corpus = generate_corpus(cfg);
    const auto r = detect_planted(corpus, cfg.last_year);
    std::size_t tp = 0, close = 0;
    for (const auto& e : r.events.at(Tier::p0_5)) {
      const auto& t = corpus.truth.at(e.subfield_id);
      if (!t.is_bubble) continue;
      ++tp;
      close += std::abs(e.burst_year - *t.burst_year) <= 1;
    }
    CHECK(static_cast<double>(tp) >= 0.9 * cfg.n_planted_bubbles);
    CHECK(static_cast<double>(tp) >= 0.9 * static_cast<double>(r.events.at(Tier::p0_5).size()));
    CHECK(static_cast<double>(close) >= 0.8 * static_cast<double>(tp));
  }
}

TEST_CASE("oracles") {
  VectorStore s(2);
  s.add(1, std::vector<float>{1.0f, 0.0f});
  s.add(2, std::vector<float>{0.0f, 1.0f});
  s.add(3, std::vector<float>{1.0f, 0.0f});
  CHECK(brute_force_diffusion(std::vector<CitingPair>{{1, 2}}, s) == doctest::Approx(1.0));
  CHECK(brute_force_diffusion(std::vector<CitingPair>{{1, 3}}, s) == doctest::Approx(0.0));
  CHECK_THROWS(brute_force_diffusion(std::vector<CitingPair>{}, s));
  CHECK(brute_force_quantile({4.0, 1.0, 3.0}, 0.0) == 1.0);
  CHECK(brute_force_quantile({4.0, 1.0, 3.0}, 1.0) == 4.0);
  CHECK(brute_force_gini(std::vector<double>{1.0, 0.0, 0.0, 0.0}) == doctest::Approx(0.75));
}

TEST_CASE("retrieval corpus shape") {
  RetrievalCorpusConfig c;
  c.n_docs = 100;
  const auto t = generate_retrieval_corpus(c);
  CHECK(t.size() == 100);
  for (const auto& p : t.papers()) {
    CHECK(p.topic_entries.size() >= static_cast<std::size_t>(c.tokens_per_doc_min));
    CHECK(p.topic_entries.size() <= static_cast<std::size_t>(c.tokens_per_doc_max));
  }
}

}  // TEST_SUITE
