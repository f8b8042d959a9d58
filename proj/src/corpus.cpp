#include "bubble/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "bubble/io.hpp"

namespace bubble {

using json = nlohmann::json;

PaperTable::PaperTable(std::vector<PaperRecord> papers, YearRange range) : range_(range) {
  std::sort(papers.begin(), papers.end(),
            [](const PaperRecord& a, const PaperRecord& b) { return a.paper_id < b.paper_id; });
  for (std::size_t i = 0; i < papers.size(); ++i) {
    const auto& p = papers[i];
    if (i > 0 && papers[i - 1].paper_id == p.paper_id)
      throw InputError("duplicate paper_id " + std::to_string(p.paper_id));
    if (p.year < range.min_year || p.year > range.max_year)
      throw InputError("paper " + std::to_string(p.paper_id) + ": year " + std::to_string(p.year) +
                       " outside [" + std::to_string(range.min_year) + ", " + std::to_string(range.max_year) + "]");
    std::unordered_set<std::uint64_t> seen;
    for (auto a : p.author_ids)
      if (!seen.insert(a).second)
        throw InputError("paper " + std::to_string(p.paper_id) + ": duplicate author id " + std::to_string(a));
    for (const auto& t : p.topic_entries)
      if (t.descriptor.empty()) throw InputError("paper " + std::to_string(p.paper_id) + ": empty descriptor");
    index_.emplace(p.paper_id, i);
  }
  papers_ = std::move(papers);
}

const PaperRecord* PaperTable::find(PaperId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &papers_[it->second];
}

const PaperRecord& PaperTable::at(PaperId id) const {
  const auto* p = find(id);
  if (!p) throw InputError("unknown paper id " + std::to_string(id));
  return *p;
}

YearRange PaperTable::observed_years() const {
  if (papers_.empty()) return {0, 0};
  auto [lo, hi] = std::minmax_element(papers_.begin(), papers_.end(),
                                      [](const auto& a, const auto& b) { return a.year < b.year; });
  return {lo->year, hi->year};
}

namespace {

PaperRecord paper_from_json(const json& j) {
  PaperRecord p;
  p.paper_id = j.at("paper_id").get<std::uint64_t>();
  p.year = j.at("year").get<int>();
  if (auto it = j.find("mesh"); it != j.end() && !it->is_null()) {
    for (const auto& m : *it) {
      TopicEntry e;
      e.descriptor = m.at("d").get<std::string>();
      if (auto q = m.find("q"); q != m.end() && !q->is_null()) e.qualifier = q->get<std::string>();
      if (auto mj = m.find("major"); mj != m.end()) e.is_major = mj->get<bool>();
      p.topic_entries.push_back(std::move(e));
    }
  }
  if (auto it = j.find("authors"); it != j.end() && !it->is_null())
    p.author_ids = it->get<std::vector<std::uint64_t>>();
  if (auto it = j.find("retraction_notice"); it != j.end() && !it->is_null())
    p.is_retraction_notice = it->get<bool>();
  if (auto it = j.find("grants"); it != j.end() && !it->is_null())
    p.grant_ids = it->get<std::vector<std::string>>();
  if (auto it = j.find("ext"); it != j.end() && !it->is_null())
    p.ext_columns = it->get<std::map<std::string, double>>();
  return p;
}

json paper_to_json(const PaperRecord& p) {
  json mesh = json::array();
  for (const auto& e : p.topic_entries) {
    json m = {{"d", e.descriptor}, {"major", e.is_major}};
    m["q"] = e.qualifier ? json(*e.qualifier) : json(nullptr);
    mesh.push_back(std::move(m));
  }
  json j;
  j["paper_id"] = p.paper_id;
  j["year"] = p.year;
  j["mesh"] = std::move(mesh);
  j["authors"] = p.author_ids;
  j["retraction_notice"] = p.is_retraction_notice;
  j["grants"] = p.grant_ids;
  j["ext"] = json::object();
  for (const auto& [k, v] : p.ext_columns) j["ext"][k] = v;
  return j;
}

}  // namespace

PaperTable parse_papers(std::string_view jsonl, YearRange range, const std::string& source_name) {
  std::vector<PaperRecord> papers;
  std::unordered_map<PaperId, std::size_t> first_line;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    auto line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    PaperRecord rec;
    try {
      rec = paper_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(source_name + ": line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    if (auto [it, fresh] = first_line.emplace(rec.paper_id, line_no); !fresh)
      throw InputError(source_name + ": line " + std::to_string(line_no) + ": duplicate paper_id " +
                       std::to_string(rec.paper_id) + " (first seen on line " + std::to_string(it->second) + ")");
    papers.push_back(std::move(rec));
  }
  return PaperTable(std::move(papers), range);
}

PaperTable load_papers(const std::filesystem::path& path, YearRange range) {
  return parse_papers(read_file(path), range, path.string());
}

std::string serialize_papers(const PaperTable& papers) {
  std::string out;
  for (const auto& p : papers.papers()) {
    out += paper_to_json(p).dump();
    out += '\n';
  }
  return out;
}

CitationGraph::CitationGraph(std::vector<CitationEdge> edges, const PaperTable& papers) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& e : edges) {
    if (e.citing == e.cited) throw InputError("self-citation edge " + std::to_string(e.citing));
    const int year = papers.at(e.citing).year;
    papers.at(e.cited);
    by_year_[year].push_back(e);
    inbound_[e.cited].push_back({e.citing, year});
    outbound_[e.citing].push_back(e.cited);
  }
  for (auto& [id, v] : inbound_)
    std::sort(v.begin(), v.end(), [](const Inbound& a, const Inbound& b) {
      return a.citing_year != b.citing_year ? a.citing_year < b.citing_year : a.citing < b.citing;
    });
  edges_ = std::move(edges);
}

std::span<const CitationGraph::Inbound> CitationGraph::cited_by(PaperId cited) const {
  auto it = inbound_.find(cited);
  if (it == inbound_.end()) return {};
  return it->second;
}

std::span<const PaperId> CitationGraph::references(PaperId citing) const {
  auto it = outbound_.find(citing);
  if (it == outbound_.end()) return {};
  return it->second;
}

CitationGraph parse_citations(std::string_view tsv, const PaperTable& papers, CitationOptions opts,
                              const std::string& source_name) {
  CitationLoadReport report;
  std::vector<CitationEdge> edges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < tsv.size()) {
    auto eol = tsv.find('\n', pos);
    if (eol == std::string_view::npos) eol = tsv.size();
    auto line = tsv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::string where = source_name + ": line " + std::to_string(line_no);
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
      throw InputError(where + ": expected two tab-separated ids");
    auto citing = parse_int(line.substr(0, tab), where);
    auto cited = parse_int(line.substr(tab + 1), where);
    if (citing < 0 || cited < 0) throw InputError(where + ": negative id");
    ++report.rows;
    CitationEdge e{static_cast<PaperId>(citing), static_cast<PaperId>(cited)};
    if (e.citing == e.cited) {
      ++report.self_citations;
      continue;
    }
    if (!papers.contains(e.citing) || !papers.contains(e.cited)) {
      if (opts.strict) throw InputError(where + ": dangling edge " + std::to_string(e.citing) + " -> " +
                                        std::to_string(e.cited));
      ++report.dangling;
      continue;
    }
    edges.push_back(e);
  }
  const auto before = edges.size();
  CitationGraph graph(std::move(edges), papers);
  report.duplicates = before - graph.edges().size();
  graph.set_report(report);
  return graph;
}

CitationGraph load_citations(const std::filesystem::path& path, const PaperTable& papers, CitationOptions opts) {
  return parse_citations(read_file(path), papers, opts, path.string());
}

std::string serialize_citations(const CitationGraph& graph) {
  std::string out;
  for (const auto& e : graph.edges()) {
    out += std::to_string(e.citing);
    out += '\t';
    out += std::to_string(e.cited);
    out += '\n';
  }
  return out;
}

std::vector<std::string> expand_topic_tokens(std::span<const TopicEntry> entries) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto emit = [&](std::string token) {
    if (seen.insert(token).second) out.push_back(std::move(token));
  };
  for (const auto& e : entries) {
    emit(e.descriptor);
    if (e.qualifier) emit(e.descriptor + " / " + *e.qualifier);
  }
  return out;
}

std::vector<std::string> author_tokens(const PaperRecord& paper) {
  std::vector<std::string> out;
  out.reserve(paper.author_ids.size());
  for (auto a : paper.author_ids) out.push_back(std::to_string(a));
  return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::unordered_set<std::string_view> sa(a.begin(), a.end());
  std::unordered_set<std::string_view> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (auto t : sa) inter += sb.contains(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

}  // namespace bubble
