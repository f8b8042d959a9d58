#include "bubble/burst.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "bubble/io.hpp"

namespace bubble {

std::string to_string(Tier t) {
  switch (t) {
    case Tier::p0_5: return "p0.5";
    case Tier::p0_25: return "p0.25";
    case Tier::p0_1: return "p0.1";
  }
  return "p0.5";
}

Tier tier_from_string(const std::string& s) {
  if (s == "p0.5" || s == "0.5" || s == "0.5%") return Tier::p0_5;
  if (s == "p0.25" || s == "0.25" || s == "0.25%") return Tier::p0_25;
  if (s == "p0.1" || s == "0.1" || s == "0.1%") return Tier::p0_1;
  throw InputError("unknown tier '" + s + "' (expected 0.5, 0.25 or 0.1)");
}

double tier_probability(Tier t) {
  switch (t) {
    case Tier::p0_5: return 0.005;
    case Tier::p0_25: return 0.0025;
    case Tier::p0_1: return 0.001;
  }
  return 0.005;
}

YearSeries series_from_birth(const CitationSeries& series, int birth_year) {
  return YearSeries(series.by_year.lower_bound(birth_year), series.by_year.end());
}

YearValues two_year_delta(const YearSeries& series) {
  YearValues out;
  for (const auto& [t, c] : series)
    if (auto prev = series.find(t - 2); prev != series.end()) out[t] = static_cast<double>(c - prev->second);
  return out;
}

YearValues standardize_deltas(const YearValues& deltas) {
  YearValues z;
  if (deltas.size() < 2) return z;
  const auto n = static_cast<double>(deltas.size());
  double mean = 0.0;
  for (const auto& [_, d] : deltas) mean += d;
  mean /= n;
  double ss = 0.0;
  for (const auto& [_, d] : deltas) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  for (const auto& [t, d] : deltas) z[t] = sd > 0.0 ? (d - mean) / sd : 0.0;
  return z;
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile probability outside [0,1]");
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(values.begin(), nth, values.end());
  const double x_lo = *nth;
  if (lo + 1 >= values.size()) return x_lo;
  const double x_hi = *std::min_element(nth + 1, values.end());
  return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

CutoffSet global_cutoffs(std::span<const double> pooled_z) {
  CutoffSet c;
  const std::vector<double> v(pooled_z.begin(), pooled_z.end());
  for (auto t : kAllTiers) c.thresholds[t] = quantile_type7(v, tier_probability(t));
  return c;
}

std::optional<BurstEvent> detect_burst(SubfieldId subfield_id, const YearValues& z, const YearSeries& series,
                                       const CutoffSet& cutoffs, Tier tier, int last_year,
                                       const QualificationRules& rules) {
  if (rules.reject_peak_in_last_year && !series.empty()) {
    auto peak = series.begin();
    for (auto it = series.begin(); it != series.end(); ++it)
      if (it->second >= peak->second) peak = it;
    if (peak->first == last_year) return std::nullopt;
  }
  const double threshold = cutoffs.at(tier);
  std::optional<BurstEvent> best;
  for (auto it = z.begin(); it != z.end(); ++it) {
    if (!(it->second < threshold)) continue;
    if (rules.require_negative_mean_after) {
      double sum = 0.0;
      std::size_t n = 0;
      for (auto later = std::next(it); later != z.end(); ++later) {
        sum += later->second;
        ++n;
      }
      if (n == 0 || sum / static_cast<double>(n) >= 0.0) continue;
    }
    if (!best || (rules.pick_most_substantial && it->second < best->z_value))
      best = BurstEvent{subfield_id, it->first, it->second, tier};
    if (!rules.pick_most_substantial) break;
  }
  return best;
}

DetectionResult detect_all(std::span<const SubfieldSeriesInput> inputs, int last_year,
                           const QualificationRules& rules) {
  DetectionResult r;
  std::vector<double> pooled;
  std::map<SubfieldId, YearSeries> trimmed;
  for (const auto& in : inputs) {
    auto s = series_from_birth(*in.series, in.birth_year);
    auto z = standardize_deltas(two_year_delta(s));
    for (const auto& [_, v] : z) pooled.push_back(v);
    trimmed[in.subfield_id] = std::move(s);
    r.z[in.subfield_id] = std::move(z);
  }
  r.pooled_count = pooled.size();
  if (pooled.empty()) throw InputError("no standardized citation differences to pool (series too short)");
  r.cutoffs = global_cutoffs(pooled);
  for (auto tier : kAllTiers) {
    auto& events = r.events[tier];
    for (const auto& [id, z] : r.z)
      if (auto e = detect_burst(id, z, trimmed.at(id), r.cutoffs, tier, last_year, rules)) events.push_back(*e);
  }
  return r;
}

std::string serialize_bursts(const DetectionResult& result) {
  CsvWriter w({"subfield_id", "tier", "burst_year", "z_value"});
  for (auto tier : kAllTiers)
    for (const auto& e : result.events.at(tier))
      w.add_row({std::to_string(e.subfield_id), to_string(tier), std::to_string(e.burst_year), format_double(e.z_value)});
  return w.str();
}

std::string serialize_cutoffs(const CutoffSet& cutoffs) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  for (auto t : kAllTiers) j[to_string(t)] = cutoffs.at(t);
  j["method"] = "type7";
  return j.dump(2) + "\n";
}

std::map<Tier, std::vector<BurstEvent>> parse_bursts(std::string_view csv_text, const std::string& source_name) {
  const auto t = parse_csv(csv_text, source_name);
  check_schema(t, source_name);
  const auto c_id = t.column("subfield_id"), c_tier = t.column("tier"), c_year = t.column("burst_year"),
             c_z = t.column("z_value");
  std::map<Tier, std::vector<BurstEvent>> out;
  for (auto tier : kAllTiers) out[tier];
  for (const auto& r : t.rows) {
    BurstEvent e;
    e.subfield_id = static_cast<SubfieldId>(parse_int(r[c_id], source_name));
    e.tier = tier_from_string(r[c_tier]);
    e.burst_year = static_cast<int>(parse_int(r[c_year], source_name));
    e.z_value = parse_double(r[c_z], source_name);
    out[e.tier].push_back(e);
  }
  return out;
}

}  // namespace bubble
