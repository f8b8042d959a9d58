#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubble/burst.hpp"
#include "bubble/corpus.hpp"
#include "bubble/diffusion.hpp"
#include "bubble/embedding.hpp"
#include "bubble/stats.hpp"
#include "bubble/subfield.hpp"
#include "bubble/synth.hpp"

namespace bubble {

enum class Stage { synth, ingest, train, subfields, diffusion, detect, panel, fit, survival, posthoc, report };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);  // throws InputError
// Every stage after synth, in execution order.
std::vector<Stage> analysis_stages();

struct RunConfig {
  std::filesystem::path workdir = "work";
  std::filesystem::path papers;     // empty: <workdir>/papers.jsonl (where synth writes)
  std::filesystem::path citations;  // empty: <workdir>/citations.tsv
  std::filesystem::path seeds;      // empty: <workdir>/seeds.csv
  int min_year = 1900;
  int max_year = 2100;
  EmbeddingConfig scientific = EmbeddingConfig::scientific();
  EmbeddingConfig social = EmbeddingConfig::social();
  Tier tier = Tier::p0_5;
  std::string quantile_method = "type7";
  bool exclude_member_citations = false;
  Averaging averaging = Averaging::pairs;
  bool strict_ingest = false;
  std::uint64_t rng_seed = 1;
  bool deterministic = false;
  int workers = 0;                  // 0: hardware concurrency (ignored when deterministic)
  std::size_t retrieval_sample = 200;
  std::vector<std::string> covariates;      // empty: every lagged panel covariate, plus age unless it is a fixed effect
  std::vector<std::string> fixed_effects = {"age", "year", "strata_id"};
  std::optional<int> grants_followup_years;  // only subfields observed this long after collapse
  SynthConfig synth;

  void validate() const;  // throws InputError
};

// Flat "key = value" lines; '#' starts a comment; "[section]" prefixes later keys with
// "section.". Unknown keys are errors.
RunConfig parse_run_config(std::string_view text, const std::string& source_name = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Runs one stage; throws InputError for missing or malformed inputs (a missing upstream
// artifact names the stage that produces it) and NumericalError for estimation failures.
void run_stage(Stage stage, const RunConfig& config);

// Grant activity around collapse, by year relative to the burst year.
struct GrantsOptions {
  int window_lo = -15;
  int window_hi = 10;
  std::optional<int> followup_years;  // drop subfields collapsing later than last_year - followup_years
};
struct GrantsTrend {
  std::map<int, double> mean_new_grants;   // relative year -> mean new grants across subfields observed then
  std::map<int, std::size_t> n_subfields;  // subfields observed at that relative year
  std::size_t n_collapsed = 0;
  std::vector<double> post_collapse_counts;  // per collapsed subfield, new grants after the burst year
  double share_with_post_collapse_grant = 0.0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  std::optional<QuadraticFit> fit;         // over [window_lo, 0]
};
// A grant is new in the first year any member paper acknowledges it. Throws InputError
// when no subfield collapsed.
GrantsTrend grants_trend(std::span<const SubfieldDefinition> subfields, std::span<const BurstEvent> bursts,
                         const PaperTable& papers, int last_year, const GrantsOptions& opts = {});

// Mean output of newcomer authors (first member paper in [B-2, B]) against incumbents
// (first member paper by B-3), counting corpus papers in [B+1, B+window].
struct ProductivityComparison {
  int window = 5;
  std::vector<SubfieldId> subfield_ids;
  std::vector<double> newcomer;
  std::vector<double> incumbent;
  std::optional<PairedTTest> test;  // newcomer - incumbent
  std::string note;
};
ProductivityComparison productivity_comparison(std::span<const SubfieldDefinition> subfields,
                                               std::span<const BurstEvent> bursts, const PaperTable& papers,
                                               int last_year, int window);

// Subfield-level logits of ever-bursting on a seed attribute or a member-mean ext column,
// with strata-clustered errors.
struct SimpleLogitReport {
  std::string covariate;
  std::size_t n = 0;
  std::vector<CoefficientRow> rows;
  std::vector<DroppedColumn> dropped;
  std::optional<std::string> error;
};
std::vector<SimpleLogitReport> subfield_logits(std::span<const SubfieldDefinition> subfields,
                                               std::span<const BurstEvent> bursts, const PaperTable& papers);

}  // namespace bubble
