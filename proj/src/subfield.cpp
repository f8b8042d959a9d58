#include "bubble/subfield.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

#include "bubble/io.hpp"

namespace bubble {

std::vector<SeedSpec> parse_seeds(std::string_view csv_text, const std::string& source_name) {
  const auto table = parse_csv(csv_text, source_name);
  check_schema(table, source_name);
  const auto c_seed = table.column("seed_id");
  const auto c_strata = table.column("strata_id");
  const auto c_size = table.column("target_size");
  const auto c_dead = table.column("star_dead_year");
  const auto c_prem = table.column("premature_death");
  const auto c_imp = table.column("star_importance");
  const auto c_frac = table.column("frac_collab_funding");

  std::vector<SeedSpec> seeds;
  std::unordered_set<PaperId> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source_name + ": row " + std::to_string(r + 1);
    SeedSpec s;
    const auto id = parse_int(row[c_seed], where);
    if (id < 0) throw InputError(where + ": negative seed_id");
    s.seed_id = static_cast<PaperId>(id);
    if (!seen.insert(s.seed_id).second) throw InputError(where + ": duplicate seed_id " + row[c_seed]);
    s.strata_id = parse_int(row[c_strata], where);
    s.target_size = static_cast<int>(parse_int(row[c_size], where));
    if (s.target_size < 1) throw InputError(where + ": target_size must be >= 1");
    if (!row[c_dead].empty()) s.star_dead_year = static_cast<int>(parse_int(row[c_dead], where));
    const auto prem = parse_int(row[c_prem], where);
    if (prem != 0 && prem != 1) throw InputError(where + ": premature_death must be 0 or 1");
    s.is_premature_death_subfield = prem == 1;
    auto unit = [&](const std::string& text, const char* name) -> std::optional<double> {
      if (text.empty()) return std::nullopt;
      const double v = parse_double(text, where);
      if (v < 0.0 || v > 1.0) throw InputError(where + ": " + name + " outside [0,1]");
      return v;
    };
    s.star_importance = unit(row[c_imp], "star_importance");
    s.frac_collab_funding = unit(row[c_frac], "frac_collab_funding");
    seeds.push_back(s);
  }
  return seeds;
}

std::vector<SeedSpec> load_seeds(const std::filesystem::path& path) { return parse_seeds(read_file(path), path.string()); }

std::string serialize_seeds(std::span<const SeedSpec> seeds) {
  CsvWriter w({"seed_id", "strata_id", "target_size", "star_dead_year", "premature_death", "star_importance",
               "frac_collab_funding"},
              false);
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& s : seeds)
    w.add_row({std::to_string(s.seed_id), std::to_string(s.strata_id), std::to_string(s.target_size),
               s.star_dead_year ? std::to_string(*s.star_dead_year) : std::string(),
               s.is_premature_death_subfield ? "1" : "0", opt(s.star_importance), opt(s.frac_collab_funding)});
  return w.str();
}

SubfieldDefinition build_subfield(const SeedSpec& seed, const EmbeddingSpace& space) {
  const auto query = space.doc(seed.seed_id);
  if (query.empty()) throw InputError("seed " + std::to_string(seed.seed_id) + " has no vector in the space");
  if (space.docs.size() < static_cast<std::size_t>(seed.target_size))
    throw InputError("space has " + std::to_string(space.docs.size()) + " documents, fewer than target size " +
                     std::to_string(seed.target_size));
  SubfieldDefinition def;
  def.subfield_id = seed.seed_id;
  def.seed_id = seed.seed_id;
  def.spec = seed;
  def.member_ids.push_back(seed.seed_id);
  // One extra slot in case an identical document outranks the seed on the id tie-break.
  const auto ranked = top_k_similar(query, space, static_cast<std::size_t>(seed.target_size) + 1);
  for (const auto& s : ranked) {
    if (def.member_ids.size() == static_cast<std::size_t>(seed.target_size)) break;
    if (s.id != seed.seed_id) def.member_ids.push_back(s.id);
  }
  return def;
}

SeedSpec substitute_seed(const SeedSpec& seed, const EmbeddingSpace& space, std::span<const PaperId> candidate_pool,
                         const PaperTable& papers) {
  const int seed_year = papers.at(seed.seed_id).year;
  std::optional<PaperId> best;
  int best_gap = 0;
  std::size_t considered = 0;
  for (auto id : candidate_pool) {
    if (considered == 10) break;
    if (id == seed.seed_id || !space.docs.contains(id) || !papers.contains(id)) continue;
    ++considered;
    const int gap = std::abs(papers.at(id).year - seed_year);
    if (!best || gap < best_gap || (gap == best_gap && id < *best)) {
      best = id;
      best_gap = gap;
    }
  }
  if (!best) throw InputError("no substitute candidate for seed " + std::to_string(seed.seed_id));
  SeedSpec out = seed;
  out.seed_id = *best;
  return out;
}

std::vector<PaperId> citation_neighbourhood_pool(PaperId seed, const CitationGraph& graph) {
  auto neighbours = [&](PaperId id) {
    std::unordered_set<PaperId> n;
    for (const auto& in : graph.cited_by(id)) n.insert(in.citing);
    for (auto out : graph.references(id)) n.insert(out);
    return n;
  };
  const auto direct = neighbours(seed);
  std::vector<std::pair<std::size_t, PaperId>> scored;
  for (auto cand : direct) {
    std::size_t shared = 0;
    for (auto x : neighbours(cand)) shared += direct.contains(x);
    scored.emplace_back(shared, cand);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<PaperId> pool;
  for (const auto& [_, id] : scored) pool.push_back(id);
  return pool;
}

CitationSeries subfield_citation_series(const SubfieldDefinition& subfield, const CitationGraph& graph,
                                        const PaperTable& papers, SeriesOptions opts) {
  CitationSeries series;
  series.subfield_id = subfield.subfield_id;
  const auto span = papers.observed_years();
  for (int y = span.min_year; y <= span.max_year && !papers.empty(); ++y) series.by_year[y] = 0;
  const std::unordered_set<PaperId> members(subfield.member_ids.begin(), subfield.member_ids.end());
  for (auto m : members)
    for (const auto& in : graph.cited_by(m)) {
      if (opts.exclude_member_citations && members.contains(in.citing)) continue;
      ++series.by_year[in.citing_year];
    }
  return series;
}

std::string serialize_subfields(std::span<const SubfieldDefinition> subfields) {
  CsvWriter w({"seed_id", "member_id"});
  for (const auto& s : subfields)
    for (auto m : s.member_ids) w.add_row({std::to_string(s.subfield_id), std::to_string(m)});
  return w.str();
}

std::string serialize_series(std::span<const CitationSeries> series) {
  CsvWriter w({"subfield_id", "year", "citations"});
  for (const auto& s : series)
    for (const auto& [y, c] : s.by_year) w.add_row({std::to_string(s.subfield_id), std::to_string(y), std::to_string(c)});
  return w.str();
}

std::vector<SubfieldDefinition> parse_subfields(std::string_view csv_text, std::span<const SeedSpec> seeds,
                                                const std::string& source_name) {
  const auto t = parse_csv(csv_text, source_name);
  check_schema(t, source_name);
  const auto c_seed = t.column("seed_id"), c_member = t.column("member_id");
  std::map<PaperId, const SeedSpec*> spec_of;
  for (const auto& s : seeds) spec_of[s.seed_id] = &s;
  std::vector<SubfieldDefinition> out;
  std::map<SubfieldId, std::size_t> index;
  for (const auto& r : t.rows) {
    const auto sid = static_cast<SubfieldId>(parse_int(r[c_seed], source_name));
    const auto member = static_cast<PaperId>(parse_int(r[c_member], source_name));
    auto [it, fresh] = index.emplace(sid, out.size());
    if (fresh) {
      auto spec = spec_of.find(sid);
      if (spec == spec_of.end())
        throw InputError(source_name + ": subfield " + std::to_string(sid) + " is not listed in the seeds");
      SubfieldDefinition def;
      def.subfield_id = sid;
      def.seed_id = member;
      def.spec = *spec->second;
      out.push_back(std::move(def));
    }
    out[it->second].member_ids.push_back(member);
  }
  return out;
}

std::vector<CitationSeries> parse_series(std::string_view csv_text, const std::string& source_name) {
  const auto t = parse_csv(csv_text, source_name);
  check_schema(t, source_name);
  const auto c_id = t.column("subfield_id"), c_year = t.column("year"), c_cit = t.column("citations");
  std::vector<CitationSeries> out;
  std::map<SubfieldId, std::size_t> index;
  for (const auto& r : t.rows) {
    const auto sid = static_cast<SubfieldId>(parse_int(r[c_id], source_name));
    auto [it, fresh] = index.emplace(sid, out.size());
    if (fresh) out.push_back({sid, {}});
    out[it->second].by_year[static_cast<int>(parse_int(r[c_year], source_name))] = parse_int(r[c_cit], source_name);
  }
  return out;
}

}  // namespace bubble
