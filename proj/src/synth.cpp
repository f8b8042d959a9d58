#include "bubble/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "bubble/io.hpp"

namespace bubble {

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw InputError("infeasible synthetic config: " + m); };
  if (last_year <= first_year) fail("last_year must exceed first_year");
  if (n_communities < 1) fail("n_communities must be >= 1");
  if (n_topics / n_communities < 5) fail("each community needs at least 5 topic tokens");
  if (n_authors / n_communities < 3) fail("each community needs at least 3 authors");
  if (pool_overlap < 0.0 || pool_overlap >= 1.0) fail("pool_overlap must lie in [0,1)");
  if (n_subfields < 1) fail("n_subfields must be >= 1");
  if (n_planted_bubbles < 0 || n_planted_bubbles > n_subfields) fail("n_planted_bubbles must lie in [0, n_subfields]");
  if (subfield_size_min < 1 || subfield_size_max < subfield_size_min) fail("bad subfield size range");
  if (subfield_tokens < 1 || subfield_authors < 3) fail("subfields need >= 1 own token and >= 3 own authors");
  if (member_span_years < 1) fail("member_span_years must be >= 1");
  if (seed_year_min < first_year || seed_year_max < seed_year_min) fail("bad seed year range");
  if (bubble.rise_years_min < 2 || bubble.rise_years_max < bubble.rise_years_min) fail("bad bubble rise range");
  if (seed_year_max + bubble.rise_years_max + 4 > last_year)
    fail("bubbles must be able to peak and collapse before the last year");
  if (!(bubble.crash_fraction > 0.0 && bubble.crash_fraction < 1.0)) fail("crash_fraction must lie in (0,1)");
  if (bubble.peak_citations <= bubble.base_citations || bubble.base_citations < 0.0) fail("bad bubble citation levels");
  if (kappa_bubble < 0.0 || kappa_bubble > 1.0 || kappa_control < 0.0 || kappa_control > 1.0)
    fail("kappa must lie in [0,1]");
  if (control_slope < 1.0 || control_base < 0.0) fail("control_slope must be >= 1 and control_base >= 0");
  if (references_per_paper < 1) fail("references_per_paper must be >= 1");
  if (strata_size < 1) fail("strata_size must be >= 1");
  if (new_grant_rate < 0.0 || new_grant_rate > 1.0 || retraction_rate < 0.0 || retraction_rate > 1.0)
    fail("rates must lie in [0,1]");
}

std::map<int, double> bubble_expectation(const BubbleProfile& profile, int birth_year, int rise_years, int last_year) {
  std::map<int, double> out;
  for (int y = birth_year; y <= last_year; ++y) {
    const int age = y - birth_year;
    if (age <= rise_years) {
      const double f = static_cast<double>(age) / rise_years;
      out[y] = profile.base_citations + (profile.peak_citations - profile.base_citations) * f * f;
    } else {
      out[y] = profile.peak_citations * std::pow(1.0 - profile.crash_fraction, age - rise_years);
    }
  }
  return out;
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Community pools: own block plus a share borrowed from the other blocks.
std::vector<std::vector<int>> community_pools(int n_items, int n_communities, double overlap, Rng& rng) {
  const int per = n_items / n_communities;
  const int borrow = static_cast<int>(std::lround(overlap * per));
  std::vector<std::vector<int>> pools(static_cast<std::size_t>(n_communities));
  for (int c = 0; c < n_communities; ++c) {
    auto& pool = pools[static_cast<std::size_t>(c)];
    for (int k = 0; k < per; ++k) pool.push_back(c * per + k);
    if (n_communities == 1) continue;
    std::set<int> extra;
    while (static_cast<int>(extra.size()) < borrow) {
      const int k = uniform_int(rng, 0, per * n_communities - 1);
      if (k / per != c) extra.insert(k);
    }
    pool.insert(pool.end(), extra.begin(), extra.end());
  }
  return pools;
}

template <class T>
std::vector<T> sample_distinct(const std::vector<T>& pool, std::size_t n, Rng& rng) {
  std::vector<T> copy = pool;
  n = std::min(n, copy.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(i), static_cast<int>(copy.size()) - 1));
    std::swap(copy[i], copy[j]);
  }
  copy.resize(n);
  return copy;
}

std::string topic_token(int k) { return "T" + std::to_string(k); }

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  SynthCorpus out;

  const auto topic_pools = community_pools(cfg.n_topics, cfg.n_communities, cfg.pool_overlap, rng);
  const auto author_pools = community_pools(cfg.n_authors, cfg.n_communities, cfg.pool_overlap, rng);
  const std::uint64_t team_author_base = 1'000'000;

  PaperId next_id = 1;
  std::map<PaperId, std::size_t> paper_index;
  auto add_paper = [&](PaperRecord p) {
    p.paper_id = next_id++;
    paper_index[p.paper_id] = out.papers.size();
    out.papers.push_back(std::move(p));
    return out.papers.back().paper_id;
  };

  // Bubble assignment and concentration type.
  std::vector<int> order(static_cast<std::size_t>(cfg.n_subfields));
  for (int i = 0; i < cfg.n_subfields; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> bubble_rank(static_cast<std::size_t>(cfg.n_subfields), -1);
  for (int k = 0; k < cfg.n_planted_bubbles; ++k) bubble_rank[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k;

  struct SubInfo {
    int community;
    int seed_year;
    bool bubble;
    int concentration;
    int rise;
    std::vector<PaperId> members;
    std::vector<std::string> grants;
  };
  std::vector<SubInfo> subs;

  for (int i = 0; i < cfg.n_subfields; ++i) {
    SubInfo s;
    s.community = i % cfg.n_communities;
    s.seed_year = uniform_int(rng, cfg.seed_year_min, cfg.seed_year_max);
    s.bubble = bubble_rank[static_cast<std::size_t>(i)] >= 0;
    s.concentration = s.bubble && cfg.mixed_concentration ? bubble_rank[static_cast<std::size_t>(i)] % 3 : 0;
    s.rise = uniform_int(rng, cfg.bubble.rise_years_min, cfg.bubble.rise_years_max);
    const int size = uniform_int(rng, cfg.subfield_size_min, cfg.subfield_size_max);
    std::vector<std::uint64_t> team;
    for (int a = 0; a < cfg.subfield_authors; ++a)
      team.push_back(team_author_base + static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(cfg.subfield_authors) +
                     static_cast<std::uint64_t>(a));
    const auto& tpool = topic_pools[static_cast<std::size_t>(s.community)];
    const auto& apool = author_pools[static_cast<std::size_t>(s.community)];
    for (int m = 0; m < size; ++m) {
      PaperRecord p;
      p.year = m == 0 ? s.seed_year : std::min(cfg.last_year, s.seed_year + uniform_int(rng, 0, cfg.member_span_years - 1));
      for (int k = 0; k < cfg.subfield_tokens; ++k)
        p.topic_entries.push_back({"S" + std::to_string(i) + "_" + std::to_string(k), std::nullopt, k == 0});
      for (int k : sample_distinct(tpool, 3, rng)) p.topic_entries.push_back({topic_token(k), std::nullopt, false});
      const int n_team = uniform_int(rng, 2, 3);
      p.author_ids = sample_distinct(team, static_cast<std::size_t>(n_team), rng);
      p.author_ids.push_back(static_cast<std::uint64_t>(apool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(apool.size()) - 1))]));
      if (uniform01(rng) < cfg.new_grant_rate) {
        s.grants.push_back("G" + std::to_string(i) + "_" + std::to_string(s.grants.size()));
        p.grant_ids.push_back(s.grants.back());
      }
      if (!s.grants.empty() && uniform01(rng) < 0.5) {
        const auto& g = s.grants[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(s.grants.size()) - 1))];
        if (std::find(p.grant_ids.begin(), p.grant_ids.end(), g) == p.grant_ids.end()) p.grant_ids.push_back(g);
      }
      p.is_retraction_notice = uniform01(rng) < cfg.retraction_rate;
      p.ext_columns["apt"] = uniform01(rng);
      s.members.push_back(add_paper(std::move(p)));
    }
    subs.push_back(std::move(s));
  }

  // Background citing papers, created on demand per (topic community, author community, year).
  struct CitingPaper {
    PaperId id;
    std::unordered_set<PaperId> refs;
  };
  std::map<std::tuple<int, int, int>, std::vector<CitingPaper>> cells;
  auto make_background = [&](int ct, int ca, int year) {
    PaperRecord p;
    p.year = year;
    for (int k : sample_distinct(topic_pools[static_cast<std::size_t>(ct)], 5, rng))
      p.topic_entries.push_back({topic_token(k), std::nullopt, false});
    for (int k : sample_distinct(author_pools[static_cast<std::size_t>(ca)], 3, rng))
      p.author_ids.push_back(static_cast<std::uint64_t>(k));
    return add_paper(std::move(p));
  };
  auto pick_citing = [&](int ct, int ca, int year, PaperId cited) -> PaperId {
    auto& cell = cells[{ct, ca, year}];
    if (!cell.empty()) {
      for (int attempt = 0; attempt < 8; ++attempt) {
        auto& c = cell[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cell.size()) - 1))];
        if (static_cast<int>(c.refs.size()) < cfg.references_per_paper && !c.refs.contains(cited)) {
          c.refs.insert(cited);
          return c.id;
        }
      }
    }
    cell.push_back({make_background(ct, ca, year), {cited}});
    return cell.back().id;
  };
  auto draw_community = [&](int own, double kappa) {
    return uniform01(rng) < kappa ? own : uniform_int(rng, 0, cfg.n_communities - 1);
  };

  for (int i = 0; i < cfg.n_subfields; ++i) {
    const auto& s = subs[static_cast<std::size_t>(i)];
    const SubfieldId sid = s.members.front();
    std::map<int, std::int64_t> counts;
    SubfieldTruth truth;
    truth.is_bubble = s.bubble;
    truth.community = s.community;
    truth.seed_year = s.seed_year;
    truth.concentration = s.concentration;
    if (s.bubble) {
      const auto expected = bubble_expectation(cfg.bubble, s.seed_year, s.rise, cfg.last_year);
      for (const auto& [y, mu] : expected) counts[y] = mu > 0.0 ? std::poisson_distribution<std::int64_t>(mu)(rng) : 0;
      const int peak = s.seed_year + s.rise;
      std::int64_t other_max = 0;
      for (const auto& [y, c] : counts)
        if (y != peak) other_max = std::max(other_max, c);
      counts[peak] = std::max(counts[peak], other_max + 1);
      truth.peak_year = peak;
      std::optional<double> best;
      for (int y = s.seed_year + 2; y <= cfg.last_year; ++y) {
        const double d = expected.at(y) - expected.at(y - 2);
        if (!best || d < *best) {
          best = d;
          truth.burst_year = y;
        }
      }
    } else {
      for (int y = s.seed_year; y <= cfg.last_year; ++y)
        counts[y] = static_cast<std::int64_t>(cfg.control_base + std::floor(cfg.control_slope * (y - s.seed_year))) +
                    (uniform01(rng) < 0.5 ? 1 : 0);
    }
    const double kt = s.bubble ? (s.concentration == 2 ? cfg.kappa_control : cfg.kappa_bubble) : cfg.kappa_control;
    const double ka = s.bubble ? (s.concentration == 1 ? cfg.kappa_control : cfg.kappa_bubble) : cfg.kappa_control;
    for (auto& [y, c] : counts) {
      std::vector<PaperId> eligible;
      for (auto m : s.members)
        if (out.papers[paper_index.at(m)].year <= y) eligible.push_back(m);
      for (std::int64_t k = 0; k < c; ++k) {
        const PaperId cited = eligible[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(eligible.size()) - 1))];
        const int ct = draw_community(s.community, kt);
        const int ca = draw_community(s.community, ka);
        out.citations.push_back({pick_citing(ct, ca, y, cited), cited});
      }
    }
    out.planted_series[sid] = counts;
    out.truth[sid] = truth;
  }

  // Seeds: strata are consecutive blocks of a random ordering.
  std::vector<int> strata_order(static_cast<std::size_t>(cfg.n_subfields));
  for (int i = 0; i < cfg.n_subfields; ++i) strata_order[static_cast<std::size_t>(i)] = i;
  std::shuffle(strata_order.begin(), strata_order.end(), rng);
  std::vector<std::int64_t> stratum(static_cast<std::size_t>(cfg.n_subfields));
  for (std::size_t k = 0; k < strata_order.size(); ++k)
    stratum[static_cast<std::size_t>(strata_order[k])] = static_cast<std::int64_t>(k) / cfg.strata_size + 1;
  for (int i = 0; i < cfg.n_subfields; ++i) {
    const auto& s = subs[static_cast<std::size_t>(i)];
    SeedSpec seed;
    seed.seed_id = s.members.front();
    seed.strata_id = stratum[static_cast<std::size_t>(i)];
    seed.target_size = static_cast<int>(s.members.size());
    seed.is_premature_death_subfield = uniform01(rng) < 0.5;
    seed.star_dead_year = s.seed_year + uniform_int(rng, 5, 25);
    seed.star_importance = s.bubble ? 0.3 + 0.7 * uniform01(rng) : 0.7 * uniform01(rng);
    seed.frac_collab_funding = uniform01(rng);
    out.seeds.push_back(seed);
  }
  std::sort(out.citations.begin(), out.citations.end());
  return out;
}

std::string serialize_truth(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  for (const auto& [id, t] : truth) {
    nlohmann::ordered_json e;
    e["is_bubble"] = t.is_bubble;
    e["burst_year"] = t.burst_year ? nlohmann::ordered_json(*t.burst_year) : nlohmann::ordered_json(nullptr);
    e["community"] = t.community;
    e["peak_year"] = t.peak_year ? nlohmann::ordered_json(*t.peak_year) : nlohmann::ordered_json(nullptr);
    e["seed_year"] = t.seed_year;
    e["concentration"] = t.concentration;
    j[std::to_string(id)] = e;
  }
  return j.dump(2) + "\n";
}

GroundTruth parse_truth(std::string_view json_text, const std::string& source_name) {
  GroundTruth out;
  try {
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& [key, e] : j.items()) {
      if (key == "schema_version") {
        if (e.get<std::string>() != kSchemaVersion) throw InputError(source_name + ": schema version mismatch");
        continue;
      }
      SubfieldTruth t;
      t.is_bubble = e.at("is_bubble").get<bool>();
      if (!e.at("burst_year").is_null()) t.burst_year = e.at("burst_year").get<int>();
      if (e.contains("peak_year") && !e.at("peak_year").is_null()) t.peak_year = e.at("peak_year").get<int>();
      t.community = e.at("community").get<int>();
      t.seed_year = e.value("seed_year", 0);
      t.concentration = e.value("concentration", 0);
      out[static_cast<SubfieldId>(std::stoull(key))] = t;
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(source_name + ": " + ex.what());
  }
  return out;
}

void write_corpus(const SynthCorpus& corpus, const SynthConfig& config, const std::filesystem::path& dir) {
  const PaperTable table(corpus.papers, YearRange{config.first_year, config.last_year});
  write_file_atomic(dir / "papers.jsonl", serialize_papers(table));
  std::string tsv;
  for (const auto& e : corpus.citations) tsv += std::to_string(e.citing) + '\t' + std::to_string(e.cited) + '\n';
  write_file_atomic(dir / "citations.tsv", tsv);
  write_file_atomic(dir / "seeds.csv", serialize_seeds(corpus.seeds));
  write_file_atomic(dir / "truth.json", serialize_truth(corpus.truth));
}

PaperTable generate_retrieval_corpus(const RetrievalCorpusConfig& cfg) {
  if (cfg.n_docs < 1 || cfg.n_communities < 1 || cfg.n_tokens / cfg.n_communities < cfg.tokens_per_doc_max ||
      cfg.tokens_per_doc_min < 1 || cfg.tokens_per_doc_max < cfg.tokens_per_doc_min)
    throw InputError("infeasible retrieval corpus config");
  Rng rng(cfg.rng_seed);
  const auto pools = community_pools(cfg.n_tokens, cfg.n_communities, cfg.pool_overlap, rng);
  std::vector<PaperRecord> docs;
  for (int i = 0; i < cfg.n_docs; ++i) {
    PaperRecord p;
    p.paper_id = static_cast<PaperId>(i + 1);
    p.year = 2000;
    const int n = uniform_int(rng, cfg.tokens_per_doc_min, cfg.tokens_per_doc_max);
    for (int k : sample_distinct(pools[static_cast<std::size_t>(i % cfg.n_communities)], static_cast<std::size_t>(n), rng))
      p.topic_entries.push_back({"R" + std::to_string(k), std::nullopt, false});
    docs.push_back(std::move(p));
  }
  return PaperTable(std::move(docs), YearRange{});
}

double brute_force_diffusion(std::span<const CitingPair> pairs, const VectorStore& vectors) {
  if (pairs.empty()) throw InputError("brute_force_diffusion: empty pair list");
  double total = 0.0;
  for (const auto& p : pairs) {
    const auto a = vectors.get(p.cited);
    const auto b = vectors.get(p.citing);
    if (a.empty() || b.empty()) throw InputError("brute_force_diffusion: missing vector");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
      na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
      nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    const double d = (na == 0.0 || nb == 0.0) ? 1.0 : 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    total += std::min(2.0, std::max(0.0, d));
  }
  return total / static_cast<double>(pairs.size());
}

double brute_force_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("brute_force_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (h - lo) * (values[i + 1] - values[i]);
}

double brute_force_gini(std::span<const double> values) {
  if (values.empty()) throw InputError("brute_force_gini: empty list");
  double sum = 0.0, abs_diff = 0.0;
  for (double x : values) sum += x;
  if (sum == 0.0) return 0.0;
  for (double x : values)
    for (double y : values) abs_diff += std::abs(x - y);
  const auto n = static_cast<double>(values.size());
  return abs_diff / (2.0 * n * n * (sum / n));
}

std::vector<ScoredId> brute_force_top_k(std::span<const float> query, const VectorStore& store, std::size_t k) {
  std::vector<ScoredId> all;
  for (std::size_t r = 0; r < store.size(); ++r) {
    const auto v = store.row(r);
    double dot = 0.0, nq = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dot += static_cast<double>(query[i]) * v[i];
      nq += static_cast<double>(query[i]) * query[i];
      nv += static_cast<double>(v[i]) * v[i];
    }
    const double d = (nq == 0.0 || nv == 0.0) ? 1.0 : std::clamp(1.0 - dot / (std::sqrt(nq) * std::sqrt(nv)), 0.0, 2.0);
    all.push_back({store.ids()[r], 1.0 - d});
  }
  std::sort(all.begin(), all.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace bubble
