#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubble/subfield.hpp"

namespace bubble {

enum class Tier { p0_5, p0_25, p0_1 };

inline constexpr std::array<Tier, 3> kAllTiers = {Tier::p0_5, Tier::p0_25, Tier::p0_1};

std::string to_string(Tier t);               // "p0.5", "p0.25", "p0.1"
Tier tier_from_string(const std::string& s);  // accepts "p0.5" or "0.5" forms
double tier_probability(Tier t);             // 0.005, 0.0025, 0.001

struct BurstEvent {
  SubfieldId subfield_id = 0;
  int burst_year = 0;
  double z_value = 0.0;
  Tier tier = Tier::p0_5;
  bool operator==(const BurstEvent&) const = default;
};

struct CutoffSet {
  std::map<Tier, double> thresholds;
  double at(Tier t) const { return thresholds.at(t); }
};

using YearSeries = std::map<int, std::int64_t>;
using YearValues = std::map<int, double>;

// c(t) restricted to years >= birth_year.
YearSeries series_from_birth(const CitationSeries& series, int birth_year);

// Delta(t) = c(t) - c(t-2) for every t whose t-2 is present; empty for < 3 years.
YearValues two_year_delta(const YearSeries& series);

// Within-subfield z-scores with the sample sd; all zeros if sd = 0; empty for < 2 values.
YearValues standardize_deltas(const YearValues& deltas);

// Type-7 (linear interpolation between order statistics) lower quantile via selection.
double quantile_type7(std::vector<double> values, double q);

CutoffSet global_cutoffs(std::span<const double> pooled_z);

struct QualificationRules {
  bool require_negative_mean_after = true;  // mean z over strictly later years must be < 0
  bool reject_peak_in_last_year = true;     // peak citation year (latest on ties) != last year
  bool pick_most_substantial = true;        // lowest z wins; otherwise the earliest qualifying year
};

std::optional<BurstEvent> detect_burst(SubfieldId subfield_id, const YearValues& z, const YearSeries& series,
                                       const CutoffSet& cutoffs, Tier tier, int last_year,
                                       const QualificationRules& rules = {});

struct SubfieldSeriesInput {
  SubfieldId subfield_id;
  int birth_year;
  const CitationSeries* series;
};

struct DetectionResult {
  CutoffSet cutoffs;
  std::map<SubfieldId, YearValues> z;
  std::map<Tier, std::vector<BurstEvent>> events;  // ascending subfield id
  std::size_t pooled_count = 0;
};

DetectionResult detect_all(std::span<const SubfieldSeriesInput> inputs, int last_year,
                           const QualificationRules& rules = {});

std::string serialize_bursts(const DetectionResult& result);
std::string serialize_cutoffs(const CutoffSet& cutoffs);
std::map<Tier, std::vector<BurstEvent>> parse_bursts(std::string_view csv_text, const std::string& source_name);

}  // namespace bubble
