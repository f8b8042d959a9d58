#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bubble {

using PaperId = std::uint64_t;

struct TopicEntry {
  std::string descriptor;
  std::optional<std::string> qualifier;
  bool is_major = false;

  bool operator==(const TopicEntry&) const = default;
};

struct PaperRecord {
  PaperId paper_id = 0;
  int year = 0;
  std::vector<TopicEntry> topic_entries;
  std::vector<std::uint64_t> author_ids;
  bool is_retraction_notice = false;
  std::vector<std::string> grant_ids;
  std::map<std::string, double> ext_columns;

  bool operator==(const PaperRecord&) const = default;
};

struct YearRange {
  int min_year = 1900;
  int max_year = 2100;
};

// Immutable after construction; papers are kept in ascending paper_id order.
class PaperTable {
 public:
  PaperTable() = default;
  // Throws InputError on duplicate ids, out-of-range years or duplicate authors.
  PaperTable(std::vector<PaperRecord> papers, YearRange range);

  std::size_t size() const { return papers_.size(); }
  bool empty() const { return papers_.empty(); }
  std::span<const PaperRecord> papers() const { return papers_; }
  const PaperRecord* find(PaperId id) const;
  const PaperRecord& at(PaperId id) const;
  bool contains(PaperId id) const { return index_.contains(id); }
  YearRange range() const { return range_; }
  // Observed span of publication years; {0,0} when empty.
  YearRange observed_years() const;

 private:
  std::vector<PaperRecord> papers_;
  std::unordered_map<PaperId, std::size_t> index_;
  YearRange range_;
};

struct CitationEdge {
  PaperId citing = 0;
  PaperId cited = 0;

  bool operator==(const CitationEdge&) const = default;
  auto operator<=>(const CitationEdge&) const = default;
};

struct CitationLoadReport {
  std::size_t rows = 0;
  std::size_t dangling = 0;
  std::size_t self_citations = 0;
  std::size_t duplicates = 0;

  std::size_t skipped() const { return dangling + self_citations + duplicates; }
};

// Deduplicated citation edges with a per-citing-year partition and an inbound index.
class CitationGraph {
 public:
  struct Inbound {
    PaperId citing;
    int citing_year;
  };

  CitationGraph() = default;
  CitationGraph(std::vector<CitationEdge> edges, const PaperTable& papers);

  std::span<const CitationEdge> edges() const { return edges_; }
  const std::map<int, std::vector<CitationEdge>>& by_year() const { return by_year_; }
  // Inbound citations of a paper sorted by (citing_year, citing id).
  std::span<const Inbound> cited_by(PaperId cited) const;
  // Outbound references of a paper, ascending cited id.
  std::span<const PaperId> references(PaperId citing) const;
  const CitationLoadReport& report() const { return report_; }
  void set_report(CitationLoadReport r) { report_ = r; }

 private:
  std::vector<CitationEdge> edges_;
  std::map<int, std::vector<CitationEdge>> by_year_;
  std::unordered_map<PaperId, std::vector<Inbound>> inbound_;
  std::unordered_map<PaperId, std::vector<PaperId>> outbound_;
  CitationLoadReport report_;
};

PaperTable parse_papers(std::string_view jsonl, YearRange range, const std::string& source_name = "<papers>");
PaperTable load_papers(const std::filesystem::path& path, YearRange range = {});
std::string serialize_papers(const PaperTable& papers);

struct CitationOptions {
  bool strict = false;  // dangling endpoints become errors
};

CitationGraph parse_citations(std::string_view tsv, const PaperTable& papers, CitationOptions opts = {},
                              const std::string& source_name = "<citations>");
CitationGraph load_citations(const std::filesystem::path& path, const PaperTable& papers,
                             CitationOptions opts = {});
std::string serialize_citations(const CitationGraph& graph);

// MeSH-style expansion: a qualified entry yields both the bare descriptor and
// "descriptor / qualifier". Major-topic flags are ignored. First-seen order, no duplicates.
std::vector<std::string> expand_topic_tokens(std::span<const TopicEntry> entries);

// Token lists used as training documents for the two embedding spaces.
std::vector<std::string> author_tokens(const PaperRecord& paper);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace bubble
