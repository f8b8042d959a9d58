#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubble/corpus.hpp"
#include "bubble/embedding.hpp"
#include "bubble/subfield.hpp"

namespace bubble {

struct CitingPair {
  PaperId cited = 0;
  PaperId citing = 0;
  bool operator==(const CitingPair&) const = default;
};

struct PairOptions {
  bool exclude_member_citations = false;
};

// All (cited, citing) links into the subfield whose citing paper appeared in year-1 or year.
std::vector<CitingPair> rolling_citing_pairs(const SubfieldDefinition& subfield, const CitationGraph& graph, int year,
                                             PairOptions opts = {});

enum class Averaging { pairs, citing_papers };

struct DiffusionValue {
  std::optional<double> value;  // missing when no pair has vectors on both ends
  std::size_t n_pairs = 0;      // pairs retained
  std::size_t n_dropped = 0;    // pairs lacking a vector on either end
};

// Mean cosine distance between cited and citing vectors. With Averaging::citing_papers,
// distances are first averaged per citing paper.
DiffusionValue diffusion_index(std::span<const CitingPair> pairs, const VectorStore& vectors,
                               Averaging averaging = Averaging::pairs);

struct CellKey {
  int year = 0;
  int age = 0;
  auto operator<=>(const CellKey&) const = default;
};

// z-scores within (year, age) cells using the sample sd; singleton and constant cells map
// to 0, missing inputs stay missing.
std::vector<std::optional<double>> standardize_within_cells(std::span<const CellKey> cells,
                                                            std::span<const std::optional<double>> values);

enum class DiffusionGroup { bottom, middle, top };
std::string to_string(DiffusionGroup g);

struct PercentileCuts {
  double lower = 0.10;
  double upper = 0.90;
};

// Percentile rank p = (midrank - 1) / (n - 1) within each cell; p <= lower is bottom,
// p >= upper is top. Ties share their average rank, so an all-equal cell is all middle.
std::vector<std::optional<DiffusionGroup>> diffusion_percentile_groups(std::span<const CellKey> cells,
                                                                       std::span<const std::optional<double>> values,
                                                                       PercentileCuts cuts = {});

struct DiffusionObservation {
  SubfieldId subfield_id = 0;
  int year = 0;
  int age = 0;
  std::optional<double> sci;
  std::optional<double> soc;
  std::size_t n_pairs_sci = 0;
  std::size_t n_pairs_soc = 0;
  std::optional<double> z_sci;
  std::optional<double> z_soc;
  std::optional<DiffusionGroup> group_sci;
  std::optional<DiffusionGroup> group_soc;
};

struct DiffusionOptions {
  PairOptions pairs;
  Averaging averaging = Averaging::pairs;
  PercentileCuts cuts;
};

// Unstandardized indices for every year from the subfield's birth (seed year) to last_year.
std::vector<DiffusionObservation> subfield_diffusion(const SubfieldDefinition& subfield, const CitationGraph& graph,
                                                     const PaperTable& papers, const VectorStore& scientific,
                                                     const VectorStore& social, int last_year,
                                                     const DiffusionOptions& opts = {});

// Fills z_* and group_* over the pooled observations.
void standardize_observations(std::vector<DiffusionObservation>& obs, PercentileCuts cuts = {});

std::string serialize_diffusion(std::span<const DiffusionObservation> obs);
std::vector<DiffusionObservation> parse_diffusion(std::string_view csv_text, const std::string& source_name);

}  // namespace bubble
