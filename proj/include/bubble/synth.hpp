#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubble/corpus.hpp"
#include "bubble/diffusion.hpp"
#include "bubble/embedding.hpp"
#include "bubble/subfield.hpp"

namespace bubble {

struct BubbleProfile {
  int rise_years_min = 8;
  int rise_years_max = 14;
  double base_citations = 3.0;    // expected citations in the birth year
  double peak_citations = 60.0;   // expected citations in the peak year
  double crash_fraction = 0.5;    // share of citations lost per year after the peak
};

struct SynthConfig {
  int first_year = 1970;
  int last_year = 2019;
  int n_communities = 8;
  int n_topics = 240;              // community topic tokens, split evenly across communities
  int n_authors = 480;             // community author ids, split evenly across communities
  double pool_overlap = 0.10;      // share of a community pool borrowed from other communities
  int n_subfields = 200;
  int n_planted_bubbles = 30;
  int subfield_size_min = 10;
  int subfield_size_max = 20;
  int subfield_tokens = 4;         // topic tokens specific to one subfield
  int subfield_authors = 6;        // author team specific to one subfield
  int member_span_years = 20;      // members appear in [seed year, seed year + span)
  int seed_year_min = 1972;
  int seed_year_max = 1995;
  BubbleProfile bubble;
  double control_base = 1.0;       // citations in the birth year
  double control_slope = 1.0;      // added citations per year of age (>= 1 keeps the peak in the last year)
  double kappa_bubble = 1.0;       // probability a citing paper comes from the cited subfield's community
  double kappa_control = 0.0;
  bool mixed_concentration = true; // bubbles cycle through topic+author, topic-only and author-only concentration
  int references_per_paper = 50;   // capacity of a background citing paper
  int strata_size = 5;
  double new_grant_rate = 0.3;
  double retraction_rate = 0.01;
  std::uint64_t rng_seed = 7;

  void validate() const;  // throws InputError for an infeasible configuration
};

struct SubfieldTruth {
  bool is_bubble = false;
  std::optional<int> burst_year;  // argmin of the expected two-year difference
  std::optional<int> peak_year;
  int community = 0;
  int seed_year = 0;
  int concentration = 0;          // 0 topic+author, 1 topic only, 2 author only (bubbles)
};

using GroundTruth = std::map<SubfieldId, SubfieldTruth>;

struct SynthCorpus {
  std::vector<PaperRecord> papers;
  std::vector<CitationEdge> citations;
  std::vector<SeedSpec> seeds;
  GroundTruth truth;
  // Planted citation counts per subfield and year (what the subfield series must reproduce).
  std::map<SubfieldId, std::map<int, std::int64_t>> planted_series;
};

SynthCorpus generate_corpus(const SynthConfig& config);

// Writes papers.jsonl, citations.tsv, seeds.csv and truth.json into dir.
void write_corpus(const SynthCorpus& corpus, const SynthConfig& config, const std::filesystem::path& dir);
std::string serialize_truth(const GroundTruth& truth);
GroundTruth parse_truth(std::string_view json_text, const std::string& source_name);

// Expected (noise-free) bubble trajectory from the birth year through last_year.
std::map<int, double> bubble_expectation(const BubbleProfile& profile, int birth_year, int rise_years, int last_year);

// Documents with topic tokens only, drawn from community pools, for retrieval checks.
struct RetrievalCorpusConfig {
  int n_docs = 2000;
  int n_tokens = 300;
  int n_communities = 10;
  int tokens_per_doc_min = 8;
  int tokens_per_doc_max = 14;
  double pool_overlap = 0.10;
  std::uint64_t rng_seed = 11;
};
PaperTable generate_retrieval_corpus(const RetrievalCorpusConfig& config);

// Oracles: deliberately naive twins of the production routines.
double brute_force_diffusion(std::span<const CitingPair> pairs, const VectorStore& vectors);
double brute_force_quantile(std::vector<double> values, double q);
double brute_force_gini(std::span<const double> values);
std::vector<ScoredId> brute_force_top_k(std::span<const float> query, const VectorStore& store, std::size_t k);

}  // namespace bubble
