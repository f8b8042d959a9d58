#include "bubble/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "bubble/io.hpp"

namespace bubble {

std::vector<CitingPair> rolling_citing_pairs(const SubfieldDefinition& subfield, const CitationGraph& graph, int year,
                                             PairOptions opts) {
  std::unordered_set<PaperId> members;
  if (opts.exclude_member_citations) members.insert(subfield.member_ids.begin(), subfield.member_ids.end());
  std::vector<CitingPair> pairs;
  std::unordered_set<PaperId> seen_members;
  for (auto m : subfield.member_ids) {
    if (!seen_members.insert(m).second) continue;
    const auto inbound = graph.cited_by(m);
    auto it = std::lower_bound(inbound.begin(), inbound.end(), year - 1,
                               [](const CitationGraph::Inbound& in, int y) { return in.citing_year < y; });
    for (; it != inbound.end() && it->citing_year <= year; ++it) {
      if (opts.exclude_member_citations && members.contains(it->citing)) continue;
      pairs.push_back({m, it->citing});
    }
  }
  return pairs;
}

DiffusionValue diffusion_index(std::span<const CitingPair> pairs, const VectorStore& vectors, Averaging averaging) {
  DiffusionValue out;
  double sum = 0.0;
  // citing paper -> (sum, count), only used for per-citing-paper averaging
  std::map<PaperId, std::pair<double, std::size_t>> per_citing;
  for (const auto& p : pairs) {
    const auto a = vectors.get(p.cited);
    const auto b = vectors.get(p.citing);
    if (a.empty() || b.empty()) {
      ++out.n_dropped;
      continue;
    }
    const double d = cosine_distance(a, b);
    ++out.n_pairs;
    if (averaging == Averaging::pairs) {
      sum += d;
    } else {
      auto& acc = per_citing[p.citing];
      acc.first += d;
      ++acc.second;
    }
  }
  if (out.n_pairs == 0) return out;
  if (averaging == Averaging::pairs) {
    out.value = sum / static_cast<double>(out.n_pairs);
  } else {
    double s = 0.0;
    for (const auto& [_, acc] : per_citing) s += acc.first / static_cast<double>(acc.second);
    out.value = s / static_cast<double>(per_citing.size());
  }
  return out;
}

namespace {

std::map<CellKey, std::vector<std::size_t>> group_cells(std::span<const CellKey> cells,
                                                        std::span<const std::optional<double>> values) {
  if (cells.size() != values.size()) throw std::invalid_argument("cells and values differ in length");
  std::map<CellKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (values[i]) groups[cells[i]].push_back(i);
  return groups;
}

}  // namespace

std::vector<std::optional<double>> standardize_within_cells(std::span<const CellKey> cells,
                                                            std::span<const std::optional<double>> values) {
  std::vector<std::optional<double>> z(values.size());
  for (const auto& [key, idx] : group_cells(cells, values)) {
    const auto n = static_cast<double>(idx.size());
    double mean = 0.0;
    for (auto i : idx) mean += *values[i];
    mean /= n;
    double ss = 0.0;
    for (auto i : idx) ss += (*values[i] - mean) * (*values[i] - mean);
    const double sd = idx.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    for (auto i : idx) z[i] = sd > 0.0 ? (*values[i] - mean) / sd : 0.0;
  }
  return z;
}

std::string to_string(DiffusionGroup g) {
  switch (g) {
    case DiffusionGroup::bottom: return "bottom";
    case DiffusionGroup::middle: return "middle";
    case DiffusionGroup::top: return "top";
  }
  return "middle";
}

std::vector<std::optional<DiffusionGroup>> diffusion_percentile_groups(std::span<const CellKey> cells,
                                                                       std::span<const std::optional<double>> values,
                                                                       PercentileCuts cuts) {
  std::vector<std::optional<DiffusionGroup>> out(values.size());
  for (auto& [key, idx] : group_cells(cells, values)) {
    const std::size_t n = idx.size();
    if (n == 1) {
      out[idx[0]] = DiffusionGroup::middle;
      continue;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return *values[a] < *values[b]; });
    for (std::size_t lo = 0; lo < n;) {
      std::size_t hi = lo;
      while (hi + 1 < n && *values[idx[hi + 1]] == *values[idx[lo]]) ++hi;
      // ranks lo+1 .. hi+1 share their mean
      const double midrank = 0.5 * static_cast<double>(lo + hi) + 1.0;
      const double p = (midrank - 1.0) / static_cast<double>(n - 1);
      const auto g = p <= cuts.lower ? DiffusionGroup::bottom : p >= cuts.upper ? DiffusionGroup::top : DiffusionGroup::middle;
      for (std::size_t k = lo; k <= hi; ++k) out[idx[k]] = g;
      lo = hi + 1;
    }
  }
  return out;
}

std::vector<DiffusionObservation> subfield_diffusion(const SubfieldDefinition& subfield, const CitationGraph& graph,
                                                     const PaperTable& papers, const VectorStore& scientific,
                                                     const VectorStore& social, int last_year,
                                                     const DiffusionOptions& opts) {
  const int birth = papers.at(subfield.seed_id).year;
  std::vector<DiffusionObservation> out;
  for (int y = birth; y <= last_year; ++y) {
    const auto pairs = rolling_citing_pairs(subfield, graph, y, opts.pairs);
    const auto sci = diffusion_index(pairs, scientific, opts.averaging);
    const auto soc = diffusion_index(pairs, social, opts.averaging);
    DiffusionObservation o;
    o.subfield_id = subfield.subfield_id;
    o.year = y;
    o.age = y - birth;
    o.sci = sci.value;
    o.soc = soc.value;
    o.n_pairs_sci = sci.n_pairs;
    o.n_pairs_soc = soc.n_pairs;
    out.push_back(o);
  }
  return out;
}

void standardize_observations(std::vector<DiffusionObservation>& obs, PercentileCuts cuts) {
  std::vector<CellKey> cells;
  std::vector<std::optional<double>> sci, soc;
  for (const auto& o : obs) {
    cells.push_back({o.year, o.age});
    sci.push_back(o.sci);
    soc.push_back(o.soc);
  }
  const auto z_sci = standardize_within_cells(cells, sci);
  const auto z_soc = standardize_within_cells(cells, soc);
  const auto g_sci = diffusion_percentile_groups(cells, sci, cuts);
  const auto g_soc = diffusion_percentile_groups(cells, soc, cuts);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs[i].z_sci = z_sci[i];
    obs[i].z_soc = z_soc[i];
    obs[i].group_sci = g_sci[i];
    obs[i].group_soc = g_soc[i];
  }
}

std::string serialize_diffusion(std::span<const DiffusionObservation> obs) {
  CsvWriter w({"subfield_id", "year", "age", "sci_diffusion", "soc_diffusion", "n_pairs_sci", "n_pairs_soc", "z_sci",
               "z_soc", "group_sci", "group_soc"});
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  auto grp = [](const std::optional<DiffusionGroup>& g) { return g ? to_string(*g) : std::string(); };
  for (const auto& o : obs)
    w.add_row({std::to_string(o.subfield_id), std::to_string(o.year), std::to_string(o.age), opt(o.sci), opt(o.soc),
               std::to_string(o.n_pairs_sci), std::to_string(o.n_pairs_soc), opt(o.z_sci), opt(o.z_soc),
               grp(o.group_sci), grp(o.group_soc)});
  return w.str();
}

std::vector<DiffusionObservation> parse_diffusion(std::string_view csv_text, const std::string& source_name) {
  const auto t = parse_csv(csv_text, source_name);
  check_schema(t, source_name);
  const std::size_t c[] = {t.column("subfield_id"), t.column("year"),        t.column("age"),
                           t.column("sci_diffusion"), t.column("soc_diffusion"), t.column("n_pairs_sci"),
                           t.column("n_pairs_soc"), t.column("z_sci"),       t.column("z_soc"),
                           t.column("group_sci"),   t.column("group_soc")};
  auto opt = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_double(s, source_name);
  };
  auto grp = [&](const std::string& s) -> std::optional<DiffusionGroup> {
    if (s.empty()) return std::nullopt;
    if (s == "bottom") return DiffusionGroup::bottom;
    if (s == "middle") return DiffusionGroup::middle;
    if (s == "top") return DiffusionGroup::top;
    throw InputError(source_name + ": unknown group '" + s + "'");
  };
  std::vector<DiffusionObservation> out;
  for (const auto& r : t.rows) {
    DiffusionObservation o;
    o.subfield_id = static_cast<SubfieldId>(parse_int(r[c[0]], source_name));
    o.year = static_cast<int>(parse_int(r[c[1]], source_name));
    o.age = static_cast<int>(parse_int(r[c[2]], source_name));
    o.sci = opt(r[c[3]]);
    o.soc = opt(r[c[4]]);
    o.n_pairs_sci = static_cast<std::size_t>(parse_int(r[c[5]], source_name));
    o.n_pairs_soc = static_cast<std::size_t>(parse_int(r[c[6]], source_name));
    o.z_sci = opt(r[c[7]]);
    o.z_soc = opt(r[c[8]]);
    o.group_sci = grp(r[c[9]]);
    o.group_soc = grp(r[c[10]]);
    out.push_back(o);
  }
  return out;
}

}  // namespace bubble
