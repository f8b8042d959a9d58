#include "bubble/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "bubble/io.hpp"

namespace bubble {

double gini(std::span<const double> values) {
  if (values.empty()) throw InputError("gini of an empty list");
  std::vector<double> x(values.begin(), values.end());
  double total = 0.0;
  for (double v : x) {
    if (v < 0.0 || !std::isfinite(v)) throw InputError("gini requires finite non-negative values");
    total += v;
  }
  if (total == 0.0) return 0.0;
  std::sort(x.begin(), x.end());
  // sum_ij |x_i - x_j| = 2 sum_i (2i - n - 1) x_(i) over ascending order, i from 1
  const auto n = static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  return s / (n * total);
}

double marginal_growth(std::int64_t n_t, std::int64_t n_prev, std::int64_t cum_size_t) {
  if (cum_size_t == 0) return 0.0;
  return static_cast<double>(n_t + n_prev) / static_cast<double>(cum_size_t);
}

std::vector<SubfieldDynamics> subfield_dynamics(const SubfieldDefinition& subfield, const CitationGraph& graph,
                                                const PaperTable& papers, int first_year, int last_year,
                                                DynamicsOptions opts) {
  std::vector<PaperId> members;
  {
    std::unordered_set<PaperId> seen;
    for (auto m : subfield.member_ids)
      if (seen.insert(m).second) members.push_back(m);
  }
  const std::unordered_set<PaperId> member_set(members.begin(), members.end());
  const int span = last_year - first_year + 1;
  if (span <= 0) return {};

  struct MemberInfo {
    const PaperRecord* rec;
    std::int64_t before = 0;               // citations in years < first_year
    std::vector<std::int64_t> by_offset;   // citations per year in [first_year, last_year]
  };
  std::vector<MemberInfo> info;
  for (auto m : members) {
    MemberInfo mi{&papers.at(m), 0, std::vector<std::int64_t>(static_cast<std::size_t>(span), 0)};
    for (const auto& in : graph.cited_by(m)) {
      if (opts.exclude_member_citations && member_set.contains(in.citing)) continue;
      if (in.citing_year < first_year) ++mi.before;
      else if (in.citing_year <= last_year) ++mi.by_offset[static_cast<std::size_t>(in.citing_year - first_year)];
    }
    info.push_back(std::move(mi));
  }

  std::vector<std::int64_t> cum(info.size());
  for (std::size_t k = 0; k < info.size(); ++k) cum[k] = info[k].before;
  auto count_in = [&](std::size_t k, int year) -> std::int64_t {
    if (year < first_year || year > last_year) return 0;
    return info[k].by_offset[static_cast<std::size_t>(year - first_year)];
  };

  std::vector<SubfieldDynamics> out;
  for (int y = first_year; y <= last_year; ++y) {
    SubfieldDynamics d;
    d.year = y;
    std::int64_t prev_members = 0;
    std::vector<double> cum_pub, two_pub;
    std::map<std::string, std::pair<double, std::size_t>> ext_acc;
    for (std::size_t k = 0; k < info.size(); ++k) {
      const auto& rec = *info[k].rec;
      cum[k] += count_in(k, y);
      const std::int64_t two = count_in(k, y) + (y - 1 >= first_year ? count_in(k, y - 1) : 0);
      d.cum_citations += cum[k];
      d.citations_2y += two;
      if (rec.year == y) ++d.new_members;
      if (rec.year == y - 1) ++prev_members;
      if (rec.year <= y) {
        ++d.cum_size;
        cum_pub.push_back(static_cast<double>(cum[k]));
        two_pub.push_back(static_cast<double>(two));
        if (rec.is_retraction_notice) d.retraction_seen = true;
        for (const auto& [name, v] : rec.ext_columns) {
          auto& acc = ext_acc[name];
          acc.first += v;
          ++acc.second;
        }
      }
    }
    d.marginal_growth = marginal_growth(d.new_members, prev_members, d.cum_size);
    d.gini_cum = cum_pub.empty() ? 0.0 : gini(cum_pub);
    d.gini_2y = two_pub.empty() ? 0.0 : gini(two_pub);
    d.after_death = subfield.spec.star_dead_year && y >= *subfield.spec.star_dead_year;
    for (const auto& [name, acc] : ext_acc) d.ext[name] = acc.first / static_cast<double>(acc.second);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<std::string> panel_covariate_names() {
  return {"z_sci",      "z_soc",   "log_cum_size",    "marginal_growth", "log_cum_citations",
          "log_2y_citations", "gini_cum", "gini_2y", "retraction_seen", "after_death",
          "after_death_x_premature"};
}

namespace {

std::vector<std::optional<double>*> covariate_slots(PanelRow& r) {
  return {&r.z_sci,       &r.z_soc,   &r.log_cum_size,    &r.marginal_growth, &r.log_cum_citations,
          &r.log_2y_citations, &r.gini_cum, &r.gini_2y, &r.retraction_seen, &r.after_death,
          &r.after_death_x_premature};
}

std::vector<const std::optional<double>*> covariate_slots(const PanelRow& r) {
  return {&r.z_sci,       &r.z_soc,   &r.log_cum_size,    &r.marginal_growth, &r.log_cum_citations,
          &r.log_2y_citations, &r.gini_cum, &r.gini_2y, &r.retraction_seen, &r.after_death,
          &r.after_death_x_premature};
}

std::set<std::string> ext_names(std::span<const PanelRow> rows) {
  std::set<std::string> names;
  for (const auto& r : rows)
    for (const auto& [k, _] : r.ext) names.insert(k);
  return names;
}

}  // namespace

std::vector<PanelRow> build_panel(std::span<const SubfieldDefinition> subfields,
                                  std::span<const DiffusionObservation> diffusion, std::span<const BurstEvent> bursts,
                                  const CitationGraph& graph, const PaperTable& papers, const PanelOptions& opts) {
  std::map<std::pair<SubfieldId, int>, const DiffusionObservation*> diff_at;
  for (const auto& o : diffusion) diff_at[{o.subfield_id, o.year}] = &o;
  std::map<SubfieldId, int> burst_year;
  for (const auto& b : bursts) {
    if (!burst_year.emplace(b.subfield_id, b.burst_year).second)
      throw InputError("subfield " + std::to_string(b.subfield_id) + " has more than one burst in the tier");
  }

  std::vector<PanelRow> rows;
  for (const auto& sub : subfields) {
    const int birth = papers.at(sub.seed_id).year;
    auto b = burst_year.find(sub.subfield_id);
    const int end = b != burst_year.end() ? b->second : opts.last_year;
    if (end < birth) continue;
    const auto dyn = subfield_dynamics(sub, graph, papers, birth, end, opts.dynamics);
    const bool premature = sub.spec.is_premature_death_subfield;
    for (int y = birth; y <= end; ++y) {
      PanelRow r;
      r.subfield_id = sub.subfield_id;
      r.year = y;
      r.age = y - birth;
      r.event = (b != burst_year.end() && y == b->second) ? 1 : 0;
      r.strata_id = sub.spec.strata_id;
      if (y > birth) {
        const auto& d = dyn[static_cast<std::size_t>(y - 1 - birth)];
        if (auto it = diff_at.find({sub.subfield_id, y - 1}); it != diff_at.end()) {
          r.z_sci = it->second->z_sci;
          r.z_soc = it->second->z_soc;
          r.group_sci = it->second->group_sci;
          r.group_soc = it->second->group_soc;
        }
        r.log_cum_size = std::log1p(static_cast<double>(d.cum_size));
        r.marginal_growth = d.marginal_growth;
        r.log_cum_citations = std::log1p(static_cast<double>(d.cum_citations));
        r.log_2y_citations = std::log1p(static_cast<double>(d.citations_2y));
        r.gini_cum = d.gini_cum;
        r.gini_2y = d.gini_2y;
        r.retraction_seen = d.retraction_seen ? 1.0 : 0.0;
        r.after_death = d.after_death ? 1.0 : 0.0;
        r.after_death_x_premature = (d.after_death && premature) ? 1.0 : 0.0;
        for (const auto& [name, v] : d.ext) r.ext[name] = v;
      }
      rows.push_back(std::move(r));
    }
  }
  // Every row carries the full set of ext names so the CSV and frame are rectangular.
  const auto names = ext_names(rows);
  for (auto& r : rows)
    for (const auto& n : names) r.ext.try_emplace(n, std::nullopt);
  return rows;
}

DataFrame panel_frame(std::span<const PanelRow> rows) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto cov = panel_covariate_names();
  const auto ext = ext_names(rows);
  std::vector<double> id, year, age, event, strata;
  std::vector<std::vector<double>> covs(cov.size()), exts(ext.size());
  for (const auto& r : rows) {
    id.push_back(static_cast<double>(r.subfield_id));
    year.push_back(r.year);
    age.push_back(r.age);
    event.push_back(r.event);
    strata.push_back(static_cast<double>(r.strata_id));
    const auto slots = covariate_slots(r);
    for (std::size_t k = 0; k < cov.size(); ++k) covs[k].push_back(slots[k]->value_or(nan));
    std::size_t k = 0;
    for (const auto& n : ext) {
      auto it = r.ext.find(n);
      exts[k++].push_back(it != r.ext.end() && it->second ? *it->second : nan);
    }
  }
  DataFrame df;
  df.add_column("subfield_id", std::move(id));
  df.add_column("year", std::move(year));
  df.add_column("age", std::move(age));
  df.add_column("event", std::move(event));
  df.add_column("strata_id", std::move(strata));
  for (std::size_t k = 0; k < cov.size(); ++k) df.add_column(cov[k], std::move(covs[k]));
  std::size_t k = 0;
  for (const auto& n : ext) df.add_column("ext_" + n, std::move(exts[k++]));
  return df;
}

std::string serialize_panel(std::span<const PanelRow> rows) {
  std::vector<std::string> header{"subfield_id", "year", "age", "event", "strata_id"};
  for (const auto& c : panel_covariate_names()) header.push_back(c);
  header.push_back("group_sci");
  header.push_back("group_soc");
  const auto ext = ext_names(rows);
  for (const auto& n : ext) header.push_back("ext_" + n);
  CsvWriter w(header);
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  auto grp = [](const std::optional<DiffusionGroup>& g) { return g ? to_string(*g) : std::string(); };
  for (const auto& r : rows) {
    std::vector<std::string> f{std::to_string(r.subfield_id), std::to_string(r.year), std::to_string(r.age),
                               std::to_string(r.event), std::to_string(r.strata_id)};
    for (const auto* s : covariate_slots(r)) f.push_back(opt(*s));
    f.push_back(grp(r.group_sci));
    f.push_back(grp(r.group_soc));
    for (const auto& n : ext) {
      auto it = r.ext.find(n);
      f.push_back(it != r.ext.end() ? opt(it->second) : std::string());
    }
    w.add_row(f);
  }
  return w.str();
}

std::vector<PanelRow> parse_panel(std::string_view csv_text, const std::string& source_name) {
  const auto t = parse_csv(csv_text, source_name);
  check_schema(t, source_name);
  const auto c_id = t.column("subfield_id"), c_year = t.column("year"), c_age = t.column("age"),
             c_event = t.column("event"), c_strata = t.column("strata_id"), c_gs = t.column("group_sci"),
             c_gc = t.column("group_soc");
  const auto cov = panel_covariate_names();
  std::vector<std::size_t> c_cov;
  for (const auto& c : cov) c_cov.push_back(t.column(c));
  std::vector<std::pair<std::string, std::size_t>> c_ext;
  for (std::size_t k = 0; k < t.header.size(); ++k)
    if (t.header[k].starts_with("ext_")) c_ext.emplace_back(t.header[k].substr(4), k);

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
  std::vector<PanelRow> rows;
  for (const auto& f : t.rows) {
    PanelRow r;
    r.subfield_id = static_cast<SubfieldId>(parse_int(f[c_id], source_name));
    r.year = static_cast<int>(parse_int(f[c_year], source_name));
    r.age = static_cast<int>(parse_int(f[c_age], source_name));
    r.event = static_cast<int>(parse_int(f[c_event], source_name));
    r.strata_id = parse_int(f[c_strata], source_name);
    const auto slots = covariate_slots(r);
    for (std::size_t k = 0; k < cov.size(); ++k) *slots[k] = opt(f[c_cov[k]]);
    r.group_sci = grp(f[c_gs]);
    r.group_soc = grp(f[c_gc]);
    for (const auto& [name, k] : c_ext) r.ext[name] = opt(f[k]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace bubble
