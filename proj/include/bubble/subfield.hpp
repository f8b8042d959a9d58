#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubble/corpus.hpp"
#include "bubble/embedding.hpp"

namespace bubble {

struct SeedSpec {
  PaperId seed_id = 0;
  std::int64_t strata_id = 0;
  int target_size = 1;
  std::optional<int> star_dead_year;  // actual or counterfactual
  bool is_premature_death_subfield = false;
  std::optional<double> star_importance;
  std::optional<double> frac_collab_funding;

  bool operator==(const SeedSpec&) const = default;
};

using SubfieldId = std::uint64_t;

struct SubfieldDefinition {
  SubfieldId subfield_id = 0;  // the seed id named in seeds.csv, kept even if the seed was substituted
  PaperId seed_id = 0;
  std::vector<PaperId> member_ids;  // seed first, then by descending similarity
  SeedSpec spec;
};

struct CitationSeries {
  SubfieldId subfield_id = 0;
  std::map<int, std::int64_t> by_year;
};

std::vector<SeedSpec> parse_seeds(std::string_view csv_text, const std::string& source_name = "<seeds>");
std::vector<SeedSpec> load_seeds(const std::filesystem::path& path);
std::string serialize_seeds(std::span<const SeedSpec> seeds);

// Seed plus its target_size-1 nearest documents by cosine similarity in the given space.
SubfieldDefinition build_subfield(const SeedSpec& seed, const EmbeddingSpace& space);

// Replacement seed for one that has no vector: among the first ten pool entries (the pool
// is in relatedness order) that have a vector, the one closest in publication year; ties
// by ascending id.
SeedSpec substitute_seed(const SeedSpec& seed, const EmbeddingSpace& space, std::span<const PaperId> candidate_pool,
                         const PaperTable& papers);

// Citation-neighbourhood relatedness ranking used as the substitution pool when no
// external ranking is supplied: papers citing or cited by the seed, ordered by the number
// of citation neighbours they share with it (descending), then ascending id.
std::vector<PaperId> citation_neighbourhood_pool(PaperId seed, const CitationGraph& graph);

struct SeriesOptions {
  bool exclude_member_citations = false;  // sensitivity flag: drop citing papers inside the subfield
};

// Per-year inbound citation counts c_i(t) over the corpus year span (zeros included).
CitationSeries subfield_citation_series(const SubfieldDefinition& subfield, const CitationGraph& graph,
                                        const PaperTable& papers, SeriesOptions opts = {});

std::string serialize_subfields(std::span<const SubfieldDefinition> subfields);
std::string serialize_series(std::span<const CitationSeries> series);

// Rebuilds definitions from subfields.csv; the first member listed for a subfield is its
// (possibly substituted) seed. Specs are looked up by subfield id.
std::vector<SubfieldDefinition> parse_subfields(std::string_view csv_text, std::span<const SeedSpec> seeds,
                                                const std::string& source_name = "<subfields>");
std::vector<CitationSeries> parse_series(std::string_view csv_text, const std::string& source_name = "<series>");

}  // namespace bubble
