#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubble/burst.hpp"
#include "bubble/corpus.hpp"
#include "bubble/diffusion.hpp"
#include "bubble/stats.hpp"
#include "bubble/subfield.hpp"

namespace bubble {

// Mean absolute pairwise difference over twice the mean: sum_ij |x_i - x_j| / (2 n^2 mean).
// An all-zero input gives 0. Throws InputError on an empty list or a negative value.
double gini(std::span<const double> values);

// (n_t + n_{t-1}) / cum_size_t, or 0 when cum_size_t is 0.
double marginal_growth(std::int64_t n_t, std::int64_t n_prev, std::int64_t cum_size_t);

// Unlagged subfield characteristics for one calendar year.
struct SubfieldDynamics {
  int year = 0;
  std::int64_t cum_size = 0;        // members published up to year
  std::int64_t new_members = 0;     // members published in year
  double marginal_growth = 0.0;
  std::int64_t cum_citations = 0;   // citations received up to year
  std::int64_t citations_2y = 0;    // citations received in year-1 and year
  double gini_cum = 0.0;            // over members published so far, cumulative citations
  double gini_2y = 0.0;             // same members, citations in year-1 and year
  bool retraction_seen = false;     // a member retraction notice published up to year
  bool after_death = false;         // year >= star death year
  std::map<std::string, double> ext;  // member means over members published so far
};

struct DynamicsOptions {
  bool exclude_member_citations = false;
};

// Characteristics for every year in [first_year, last_year].
std::vector<SubfieldDynamics> subfield_dynamics(const SubfieldDefinition& subfield, const CitationGraph& graph,
                                                const PaperTable& papers, int first_year, int last_year,
                                                DynamicsOptions opts = {});

// One subfield-year at risk. Covariates hold the previous year's value and are missing at
// age 0 or wherever the source is missing.
struct PanelRow {
  SubfieldId subfield_id = 0;
  int year = 0;
  int age = 0;
  int event = 0;
  std::int64_t strata_id = 0;
  std::optional<double> z_sci, z_soc;
  std::optional<double> log_cum_size, marginal_growth;
  std::optional<double> log_cum_citations, log_2y_citations, gini_cum, gini_2y;
  std::optional<double> retraction_seen, after_death, after_death_x_premature;
  std::optional<DiffusionGroup> group_sci, group_soc;  // lagged percentile groups
  std::map<std::string, std::optional<double>> ext;
};

// Names of the lagged numeric covariates in panel column order.
std::vector<std::string> panel_covariate_names();

struct PanelOptions {
  DynamicsOptions dynamics;
  int last_year = 0;
};

// Rows from age 0 through the burst year (event = 1) or last_year. Diffusion observations
// must already be standardized.
std::vector<PanelRow> build_panel(std::span<const SubfieldDefinition> subfields,
                                  std::span<const DiffusionObservation> diffusion, std::span<const BurstEvent> bursts,
                                  const CitationGraph& graph, const PaperTable& papers, const PanelOptions& opts);

// Numeric view: subfield_id, year, age, event, strata_id, covariates and ext_<name>; missing = NaN.
DataFrame panel_frame(std::span<const PanelRow> rows);

std::string serialize_panel(std::span<const PanelRow> rows);
std::vector<PanelRow> parse_panel(std::string_view csv_text, const std::string& source_name);

}  // namespace bubble
