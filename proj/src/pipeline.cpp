#include "bubble/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "bubble/io.hpp"
#include "bubble/panel.hpp"

namespace bubble {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<Stage, std::string>>& stage_names() {
  static const std::vector<std::pair<Stage, std::string>> names = {
      {Stage::synth, "synth"},       {Stage::ingest, "ingest"},   {Stage::train, "train"},
      {Stage::subfields, "subfields"}, {Stage::diffusion, "diffusion"}, {Stage::detect, "detect"},
      {Stage::panel, "panel"},       {Stage::fit, "fit"},         {Stage::survival, "survival"},
      {Stage::posthoc, "posthoc"},   {Stage::report, "report"}};
  return names;
}

}  // namespace

std::string to_string(Stage s) {
  for (const auto& [st, name] : stage_names())
    if (st == s) return name;
  return "?";
}

Stage stage_from_string(const std::string& s) {
  for (const auto& [st, name] : stage_names())
    if (name == s) return st;
  throw InputError("unknown stage '" + s + "'");
}

std::vector<Stage> analysis_stages() {
  return {Stage::ingest, Stage::train,  Stage::subfields, Stage::diffusion, Stage::detect,
          Stage::panel,  Stage::fit,    Stage::survival,  Stage::posthoc,   Stage::report};
}

// ---------------------------------------------------------------- configuration

void RunConfig::validate() const {
  if (workdir.empty()) throw InputError("workdir must be set");
  if (min_year > max_year) throw InputError("min_year exceeds max_year");
  if (quantile_method != "type7") throw InputError("unsupported quantile_method '" + quantile_method + "' (only type7)");
  if (workers < 0) throw InputError("workers must be >= 0");
  scientific.validate();
  social.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(parse_int(v, "config key '" + key + "'")); }
double to_real(const std::string& key, const std::string& v) { return parse_double(v, "config key '" + key + "'"); }

std::vector<std::string> parse_list(const std::string& v) {
  std::string s = v;
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = unquote(trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

bool set_embedding_value(EmbeddingConfig& e, const std::string& key, const std::string& name, const std::string& v) {
  if (name == "dim") e.dim = to_int(key, v);
  else if (name == "epochs") e.epochs = to_int(key, v);
  else if (name == "min_count") e.min_token_count = to_int(key, v);
  else if (name == "window") e.window = to_int(key, v);
  else if (name == "negative") e.negative_samples = to_int(key, v);
  else if (name == "lr_initial") e.learning_rate_initial = to_real(key, v);
  else if (name == "lr_final") e.learning_rate_final = to_real(key, v);
  else if (name == "infer_epochs") e.infer_epochs = to_int(key, v);
  else return false;
  return true;
}

bool set_synth_value(SynthConfig& s, const std::string& key, const std::string& name, const std::string& v) {
  auto& b = s.bubble;
  if (name == "first_year") s.first_year = to_int(key, v);
  else if (name == "last_year") s.last_year = to_int(key, v);
  else if (name == "n_communities") s.n_communities = to_int(key, v);
  else if (name == "n_topics") s.n_topics = to_int(key, v);
  else if (name == "n_authors") s.n_authors = to_int(key, v);
  else if (name == "pool_overlap") s.pool_overlap = to_real(key, v);
  else if (name == "n_subfields") s.n_subfields = to_int(key, v);
  else if (name == "n_planted_bubbles") s.n_planted_bubbles = to_int(key, v);
  else if (name == "subfield_size_min") s.subfield_size_min = to_int(key, v);
  else if (name == "subfield_size_max") s.subfield_size_max = to_int(key, v);
  else if (name == "subfield_tokens") s.subfield_tokens = to_int(key, v);
  else if (name == "subfield_authors") s.subfield_authors = to_int(key, v);
  else if (name == "member_span_years") s.member_span_years = to_int(key, v);
  else if (name == "seed_year_min") s.seed_year_min = to_int(key, v);
  else if (name == "seed_year_max") s.seed_year_max = to_int(key, v);
  else if (name == "rise_years_min") b.rise_years_min = to_int(key, v);
  else if (name == "rise_years_max") b.rise_years_max = to_int(key, v);
  else if (name == "base_citations") b.base_citations = to_real(key, v);
  else if (name == "peak_citations") b.peak_citations = to_real(key, v);
  else if (name == "crash_fraction") b.crash_fraction = to_real(key, v);
  else if (name == "control_base") s.control_base = to_real(key, v);
  else if (name == "control_slope") s.control_slope = to_real(key, v);
  else if (name == "kappa_bubble") s.kappa_bubble = to_real(key, v);
  else if (name == "kappa_control") s.kappa_control = to_real(key, v);
  else if (name == "mixed_concentration") s.mixed_concentration = parse_bool(key, v);
  else if (name == "references_per_paper") s.references_per_paper = to_int(key, v);
  else if (name == "strata_size") s.strata_size = to_int(key, v);
  else if (name == "new_grant_rate") s.new_grant_rate = to_real(key, v);
  else if (name == "retraction_rate") s.retraction_rate = to_real(key, v);
  else return false;
  return true;
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = unquote(trim(raw));
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    const auto section = key.substr(0, dot);
    const auto name = key.substr(dot + 1);
    // [run] and [model] only group top-level keys
    if ((section == "run" || section == "model") && name.find('.') == std::string::npos)
      return set_config_value(c, name, raw);
    bool ok = false;
    if (section == "scientific") ok = set_embedding_value(c.scientific, key, name, v);
    else if (section == "social") ok = set_embedding_value(c.social, key, name, v);
    else if (section == "synth") ok = set_synth_value(c.synth, key, name, v);
    if (!ok) throw InputError("unknown config key '" + key + "'");
    return;
  }
  if (key == "workdir") c.workdir = v;
  else if (key == "papers") c.papers = v;
  else if (key == "citations") c.citations = v;
  else if (key == "seeds") c.seeds = v;
  else if (key == "min_year") c.min_year = to_int(key, v);
  else if (key == "max_year") c.max_year = to_int(key, v);
  else if (key == "tier") c.tier = tier_from_string(v);
  else if (key == "quantile_method") c.quantile_method = v;
  else if (key == "exclude_member_citations") c.exclude_member_citations = parse_bool(key, v);
  else if (key == "averaging") {
    if (v == "pairs") c.averaging = Averaging::pairs;
    else if (v == "citing_papers") c.averaging = Averaging::citing_papers;
    else throw InputError("config key 'averaging': expected pairs or citing_papers");
  } else if (key == "strict_ingest") c.strict_ingest = parse_bool(key, v);
  else if (key == "seed" || key == "rng_seed") c.rng_seed = static_cast<std::uint64_t>(parse_int(v, "config key '" + key + "'"));
  else if (key == "deterministic") c.deterministic = parse_bool(key, v);
  else if (key == "workers") c.workers = to_int(key, v);
  else if (key == "retrieval_sample") c.retrieval_sample = static_cast<std::size_t>(to_int(key, v));
  else if (key == "covariates") c.covariates = parse_list(v);
  else if (key == "fixed_effects") c.fixed_effects = parse_list(v);
  else if (key == "grants_followup_years") {
    if (v.empty()) c.grants_followup_years.reset();
    else c.grants_followup_years = to_int(key, v);
  } else throw InputError("unknown config key '" + key + "'");
}

RunConfig parse_run_config(std::string_view text, const std::string& source_name) {
  RunConfig c;
  std::string section;
  std::size_t line_no = 0;
  std::stringstream ss{std::string(text)};
  std::string line;
  while (std::getline(ss, line)) {
    ++line_no;
    // Strip comments outside quotes.
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quote = !in_quote;
      if (line[i] == '#' && !in_quote) {
        line.resize(i);
        break;
      }
    }
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError(source_name + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(t.substr(0, eq));
    try {
      set_config_value(c, section.empty() ? key : section + "." + key, t.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("config file " + path.string() + " does not exist");
  return parse_run_config(read_file(path), path.string());
}

// ---------------------------------------------------------------- post-hoc analyses

namespace {

std::map<SubfieldId, int> burst_years(std::span<const BurstEvent> bursts) {
  std::map<SubfieldId, int> out;
  for (const auto& b : bursts) out[b.subfield_id] = b.burst_year;
  return out;
}

std::vector<PaperId> unique_members(const SubfieldDefinition& s) {
  std::vector<PaperId> out;
  std::unordered_set<PaperId> seen;
  for (auto m : s.member_ids)
    if (seen.insert(m).second) out.push_back(m);
  return out;
}

}  // namespace

GrantsTrend grants_trend(std::span<const SubfieldDefinition> subfields, std::span<const BurstEvent> bursts,
                         const PaperTable& papers, int last_year, const GrantsOptions& opts) {
  const auto burst = burst_years(bursts);
  GrantsTrend out;
  std::map<int, double> sums;
  for (const auto& sub : subfields) {
    auto b = burst.find(sub.subfield_id);
    if (b == burst.end()) continue;
    const int B = b->second;
    if (opts.followup_years && B + *opts.followup_years > last_year) continue;
    std::map<std::string, int> first_seen;
    for (auto m : unique_members(sub)) {
      const auto& p = papers.at(m);
      for (const auto& g : p.grant_ids) {
        auto [it, fresh] = first_seen.emplace(g, p.year);
        if (!fresh) it->second = std::min(it->second, p.year);
      }
    }
    std::map<int, int> new_by_year;
    for (const auto& [_, y] : first_seen) ++new_by_year[y];
    ++out.n_collapsed;
    for (int r = opts.window_lo; r <= opts.window_hi; ++r) {
      if (B + r > last_year) continue;
      auto it = new_by_year.find(B + r);
      sums[r] += it != new_by_year.end() ? it->second : 0;
      ++out.n_subfields[r];
    }
    double post = 0.0;
    for (const auto& [y, n] : new_by_year)
      if (y > B && y <= last_year) post += n;
    out.post_collapse_counts.push_back(post);
  }
  if (out.n_collapsed == 0) throw InputError("grants_trend: no collapsed subfields");
  for (const auto& [r, n] : out.n_subfields) out.mean_new_grants[r] = sums[r] / static_cast<double>(n);
  std::size_t with_post = 0;
  for (double c : out.post_collapse_counts) with_post += c >= 1.0;
  out.share_with_post_collapse_grant = static_cast<double>(with_post) / static_cast<double>(out.n_collapsed);
  out.q1 = quantile_type7(out.post_collapse_counts, 0.25);
  out.median = quantile_type7(out.post_collapse_counts, 0.5);
  out.q3 = quantile_type7(out.post_collapse_counts, 0.75);
  std::vector<double> x, y;
  for (const auto& [r, m] : out.mean_new_grants)
    if (r <= 0) {
      x.push_back(r);
      y.push_back(m);
    }
  if (x.size() >= 3) out.fit = quadratic_fit(x, y);
  return out;
}

ProductivityComparison productivity_comparison(std::span<const SubfieldDefinition> subfields,
                                               std::span<const BurstEvent> bursts, const PaperTable& papers,
                                               int last_year, int window) {
  ProductivityComparison out;
  out.window = window;
  std::unordered_map<std::uint64_t, std::vector<int>> author_years;
  for (const auto& p : papers.papers())
    for (auto a : p.author_ids) author_years[a].push_back(p.year);
  for (auto& [_, ys] : author_years) std::sort(ys.begin(), ys.end());
  auto output = [&](std::uint64_t a, int from, int to) {
    const auto& ys = author_years.at(a);
    return static_cast<double>(std::upper_bound(ys.begin(), ys.end(), to) - std::lower_bound(ys.begin(), ys.end(), from));
  };

  const auto burst = burst_years(bursts);
  for (const auto& sub : subfields) {
    auto b = burst.find(sub.subfield_id);
    if (b == burst.end()) continue;
    const int B = b->second;
    if (B + window > last_year) continue;
    std::map<std::uint64_t, int> first;
    for (auto m : unique_members(sub)) {
      const auto& p = papers.at(m);
      if (p.year > B) continue;
      for (auto a : p.author_ids) {
        auto [it, fresh] = first.emplace(a, p.year);
        if (!fresh) it->second = std::min(it->second, p.year);
      }
    }
    double new_sum = 0.0, inc_sum = 0.0;
    std::size_t new_n = 0, inc_n = 0;
    for (const auto& [a, y] : first) {
      const double o = output(a, B + 1, B + window);
      if (y >= B - 2) {
        new_sum += o;
        ++new_n;
      } else {
        inc_sum += o;
        ++inc_n;
      }
    }
    if (new_n == 0 || inc_n == 0) continue;
    out.subfield_ids.push_back(sub.subfield_id);
    out.newcomer.push_back(new_sum / static_cast<double>(new_n));
    out.incumbent.push_back(inc_sum / static_cast<double>(inc_n));
  }
  if (out.newcomer.size() < 2) {
    out.note = "fewer than 2 collapsed subfields with both newcomer and incumbent authors";
    return out;
  }
  try {
    out.test = paired_t_test(out.newcomer, out.incumbent);
  } catch (const std::runtime_error& e) {
    out.note = e.what();
  }
  return out;
}

std::vector<SimpleLogitReport> subfield_logits(std::span<const SubfieldDefinition> subfields,
                                               std::span<const BurstEvent> bursts, const PaperTable& papers) {
  const auto burst = burst_years(bursts);
  std::set<std::string> ext_names;
  for (const auto& sub : subfields)
    for (auto m : sub.member_ids)
      for (const auto& [k, _] : papers.at(m).ext_columns) ext_names.insert(k);

  auto run = [&](const std::string& name, const std::function<std::optional<double>(const SubfieldDefinition&)>& value) {
    SimpleLogitReport rep;
    rep.covariate = name;
    std::vector<double> y, x;
    std::vector<std::int64_t> cl;
    for (const auto& sub : subfields) {
      const auto v = value(sub);
      if (!v) continue;
      y.push_back(burst.contains(sub.subfield_id) ? 1.0 : 0.0);
      x.push_back(*v);
      cl.push_back(sub.spec.strata_id);
    }
    rep.n = y.size();
    try {
      const auto fit = clustered_logit_simple(y, x, cl);
      rep.rows = coefficient_table(fit, fit.covariance);
      rep.dropped = fit.dropped_columns;
    } catch (const std::runtime_error& e) {
      rep.error = e.what();
    }
    return rep;
  };

  std::vector<SimpleLogitReport> out;
  out.push_back(run("star_importance", [](const SubfieldDefinition& s) { return s.spec.star_importance; }));
  out.push_back(run("frac_collab_funding", [](const SubfieldDefinition& s) { return s.spec.frac_collab_funding; }));
  for (const auto& name : ext_names) {
    out.push_back(run("ext_" + name, [&](const SubfieldDefinition& s) -> std::optional<double> {
      double sum = 0.0;
      std::size_t n = 0;
      for (auto m : unique_members(s)) {
        const auto& ext = papers.at(m).ext_columns;
        if (auto it = ext.find(name); it != ext.end()) {
          sum += it->second;
          ++n;
        }
      }
      if (n == 0) return std::nullopt;
      return sum / static_cast<double>(n);
    }));
  }
  return out;
}

// ---------------------------------------------------------------- stages

namespace {

struct Paths {
  fs::path wd;
  fs::path corpus_papers() const { return wd / "corpus" / "papers.jsonl"; }
  fs::path corpus_citations() const { return wd / "corpus" / "citations.tsv"; }
  fs::path corpus_seeds() const { return wd / "corpus" / "seeds.csv"; }
  fs::path ingest_report() const { return wd / "ingest.json"; }
  fs::path embeddings() const { return wd / "embeddings"; }
  fs::path retrieval() const { return wd / "retrieval.json"; }
  fs::path subfields() const { return wd / "subfields.csv"; }
  fs::path series() const { return wd / "series.csv"; }
  fs::path subfield_report() const { return wd / "subfields.json"; }
  fs::path diffusion() const { return wd / "diffusion.csv"; }
  fs::path trajectories() const { return wd / "trajectories.csv"; }
  fs::path bursts() const { return wd / "bursts.csv"; }
  fs::path cutoffs() const { return wd / "cutoffs.json"; }
  fs::path zscores() const { return wd / "zscores.csv"; }
  fs::path panel(Tier t) const { return wd / ("panel_" + to_string(t) + ".csv"); }
  fs::path fit(Tier t) const { return wd / ("fit_" + to_string(t) + ".json"); }
  fs::path survival(Tier t) const { return wd / ("survival_" + to_string(t) + ".csv"); }
  fs::path posthoc(Tier t) const { return wd / ("posthoc_" + to_string(t) + ".json"); }
  fs::path grants(Tier t) const { return wd / ("grants_trend_" + to_string(t) + ".csv"); }
  fs::path grants_summary(Tier t) const { return wd / ("grants_summary_" + to_string(t) + ".json"); }
  fs::path report() const { return wd / "report"; }
};

void require(const fs::path& p, Stage producer) {
  if (!fs::exists(p))
    throw InputError("missing " + p.string() + "; run the '" + to_string(producer) + "' stage first");
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson read_json(const fs::path& p) {
  ojson j;
  try {
    j = ojson::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<std::string>() != kSchemaVersion)
    throw InputError(p.string() + ": schema version mismatch (expected " + std::string(kSchemaVersion) + ")");
  return j;
}

ojson json_number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

struct Corpus {
  PaperTable papers;
  CitationGraph graph;
  std::vector<SeedSpec> seeds;
  int last_year = 0;
};

Corpus load_corpus(const RunConfig& cfg, const Paths& paths) {
  require(paths.corpus_papers(), Stage::ingest);
  require(paths.corpus_citations(), Stage::ingest);
  require(paths.corpus_seeds(), Stage::ingest);
  Corpus c;
  c.papers = load_papers(paths.corpus_papers(), YearRange{cfg.min_year, cfg.max_year});
  c.graph = load_citations(paths.corpus_citations(), c.papers, CitationOptions{true});
  c.seeds = load_seeds(paths.corpus_seeds());
  c.last_year = c.papers.observed_years().max_year;
  return c;
}

std::vector<SubfieldDefinition> load_subfields(const Paths& paths, const Corpus& c) {
  require(paths.subfields(), Stage::subfields);
  return parse_subfields(read_file(paths.subfields()), c.seeds, paths.subfields().string());
}

std::vector<BurstEvent> load_tier_bursts(const Paths& paths, Tier tier) {
  require(paths.bursts(), Stage::detect);
  require(paths.cutoffs(), Stage::detect);
  read_json(paths.cutoffs());
  return parse_bursts(read_file(paths.bursts()), paths.bursts().string()).at(tier);
}

int worker_count(const RunConfig& cfg) {
  if (cfg.deterministic) return 1;
  if (cfg.workers > 0) return cfg.workers;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

void stage_synth(const RunConfig& cfg, const Paths& paths) {
  SynthConfig sc = cfg.synth;
  sc.rng_seed = cfg.rng_seed;
  write_corpus(generate_corpus(sc), sc, paths.wd);
}

void stage_ingest(const RunConfig& cfg, const Paths& paths) {
  const auto src = [&](const fs::path& p, const char* name) {
    const fs::path path = p.empty() ? paths.wd / name : p;
    if (!fs::exists(path))
      throw InputError("missing " + path.string() + "; run the 'synth' stage or set its path in the config");
    return path;
  };
  const auto papers_path = src(cfg.papers, "papers.jsonl");
  const auto citations_path = src(cfg.citations, "citations.tsv");
  const auto seeds_path = src(cfg.seeds, "seeds.csv");
  const auto papers = load_papers(papers_path, YearRange{cfg.min_year, cfg.max_year});
  const auto graph = load_citations(citations_path, papers, CitationOptions{cfg.strict_ingest});
  const auto seeds = load_seeds(seeds_path);
  for (const auto& s : seeds)
    if (!papers.contains(s.seed_id)) throw InputError("seed " + std::to_string(s.seed_id) + " is not in the paper table");

  write_file_atomic(paths.corpus_papers(), serialize_papers(papers));
  write_file_atomic(paths.corpus_citations(), serialize_citations(graph));
  write_file_atomic(paths.corpus_seeds(), serialize_seeds(seeds));
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["papers"] = papers.size();
  j["citations"] = graph.edges().size();
  j["citation_rows"] = graph.report().rows;
  j["dangling_skipped"] = graph.report().dangling;
  j["self_citations_skipped"] = graph.report().self_citations;
  j["duplicates_collapsed"] = graph.report().duplicates;
  j["seeds"] = seeds.size();
  const auto span = papers.observed_years();
  j["first_year"] = span.min_year;
  j["last_year"] = span.max_year;
  write_file_atomic(paths.ingest_report(), dump(j));
}

void stage_train(const RunConfig& cfg, const Paths& paths) {
  const auto c = load_corpus(cfg, paths);
  ojson j;
  j["schema_version"] = kSchemaVersion;
  const std::pair<const char*, EmbeddingConfig> spaces[] = {{"sci", cfg.scientific}, {"soc", cfg.social}};
  std::uint64_t offset = 0;
  for (auto [prefix, ec] : spaces) {
    ec.rng_seed = cfg.rng_seed + offset++;
    ec.workers = worker_count(cfg);
    const auto space = train_dbow(c.papers, ec);
    save_space(space, paths.embeddings(), prefix);
    const auto rates = self_retrieval_test(space, c.papers, cfg.retrieval_sample, {1, 5, 10}, cfg.rng_seed + 17);
    ojson r;
    r["documents"] = space.docs.size();
    r["vocabulary"] = space.tokens.size();
    for (const auto& [k, v] : rates) r["hit_rate_top" + std::to_string(k)] = v;
    j[to_string(ec.kind)] = r;
  }
  write_file_atomic(paths.retrieval(), dump(j));
}

void stage_subfields(const RunConfig& cfg, const Paths& paths) {
  const auto c = load_corpus(cfg, paths);
  require(paths.embeddings() / "sci_space.json", Stage::train);
  const auto space = load_space(paths.embeddings(), "sci");
  std::vector<SubfieldDefinition> subs;
  std::vector<CitationSeries> series;
  ojson subst = ojson::array(), skipped = ojson::array();
  for (const auto& seed : c.seeds) {
    SeedSpec s = seed;
    if (!space.docs.contains(seed.seed_id)) {
      const auto pool = citation_neighbourhood_pool(seed.seed_id, c.graph);
      try {
        s = substitute_seed(seed, space, pool, c.papers);
      } catch (const InputError& e) {
        skipped.push_back({{"seed_id", seed.seed_id}, {"reason", e.what()}});
        continue;
      }
      subst.push_back({{"seed_id", seed.seed_id}, {"substitute_id", s.seed_id}});
    }
    auto def = build_subfield(s, space);
    def.subfield_id = seed.seed_id;
    def.spec = seed;
    series.push_back(subfield_citation_series(def, c.graph, c.papers, SeriesOptions{cfg.exclude_member_citations}));
    subs.push_back(std::move(def));
  }
  if (subs.empty()) throw InputError("no subfield could be built from the seeds");
  write_file_atomic(paths.subfields(), serialize_subfields(subs));
  write_file_atomic(paths.series(), serialize_series(series));
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["subfields"] = subs.size();
  j["substitutions"] = subst;
  j["skipped"] = skipped;
  write_file_atomic(paths.subfield_report(), dump(j));
}

void stage_diffusion(const RunConfig& cfg, const Paths& paths) {
  const auto c = load_corpus(cfg, paths);
  const auto subs = load_subfields(paths, c);
  require(paths.embeddings() / "sci_docs.emb", Stage::train);
  require(paths.embeddings() / "soc_docs.emb", Stage::train);
  const auto sci = read_vectors(paths.embeddings() / "sci_docs.emb");
  const auto soc = read_vectors(paths.embeddings() / "soc_docs.emb");
  DiffusionOptions opts;
  opts.pairs.exclude_member_citations = cfg.exclude_member_citations;
  opts.averaging = cfg.averaging;
  std::vector<DiffusionObservation> obs;
  for (const auto& s : subs) {
    auto o = subfield_diffusion(s, c.graph, c.papers, sci, soc, c.last_year, opts);
    obs.insert(obs.end(), o.begin(), o.end());
  }
  standardize_observations(obs, opts.cuts);
  write_file_atomic(paths.diffusion(), serialize_diffusion(obs));

  // Single-paper trajectories of each seed: diffusion in both spaces and yearly citations.
  CsvWriter traj({"paper_id", "year", "sci_diffusion", "soc_diffusion", "citations"});
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& s : subs) {
    SubfieldDefinition single;
    single.subfield_id = s.seed_id;
    single.seed_id = s.seed_id;
    single.member_ids = {s.seed_id};
    const auto inbound = c.graph.cited_by(s.seed_id);
    for (int y = c.papers.at(s.seed_id).year; y <= c.last_year; ++y) {
      const auto pairs = rolling_citing_pairs(single, c.graph, y);
      const auto ds = diffusion_index(pairs, sci, cfg.averaging);
      const auto dc = diffusion_index(pairs, soc, cfg.averaging);
      const auto n = std::count_if(inbound.begin(), inbound.end(), [&](const auto& in) { return in.citing_year == y; });
      traj.add_row({std::to_string(s.seed_id), std::to_string(y), opt(ds.value), opt(dc.value), std::to_string(n)});
    }
  }
  write_file_atomic(paths.trajectories(), traj.str());
}

void stage_detect(const RunConfig& cfg, const Paths& paths) {
  const auto c = load_corpus(cfg, paths);
  const auto subs = load_subfields(paths, c);
  require(paths.series(), Stage::subfields);
  const auto series = parse_series(read_file(paths.series()), paths.series().string());
  std::map<SubfieldId, const CitationSeries*> by_id;
  for (const auto& s : series) by_id[s.subfield_id] = &s;
  std::vector<SubfieldSeriesInput> inputs;
  for (const auto& s : subs) {
    auto it = by_id.find(s.subfield_id);
    if (it == by_id.end()) throw InputError("series.csv lacks subfield " + std::to_string(s.subfield_id));
    inputs.push_back({s.subfield_id, c.papers.at(s.seed_id).year, it->second});
  }
  const auto result = detect_all(inputs, c.last_year);
  write_file_atomic(paths.bursts(), serialize_bursts(result));
  write_file_atomic(paths.cutoffs(), serialize_cutoffs(result.cutoffs));
  CsvWriter z({"subfield_id", "year", "z"});
  for (const auto& [id, zs] : result.z)
    for (const auto& [y, v] : zs) z.add_row({std::to_string(id), std::to_string(y), format_double(v)});
  write_file_atomic(paths.zscores(), z.str());
}

void stage_panel(const RunConfig& cfg, const Paths& paths) {
  const auto c = load_corpus(cfg, paths);
  const auto subs = load_subfields(paths, c);
  require(paths.diffusion(), Stage::diffusion);
  const auto obs = parse_diffusion(read_file(paths.diffusion()), paths.diffusion().string());
  const auto bursts = load_tier_bursts(paths, cfg.tier);
  PanelOptions po;
  po.dynamics.exclude_member_citations = cfg.exclude_member_citations;
  po.last_year = c.last_year;
  const auto rows = build_panel(subs, obs, bursts, c.graph, c.papers, po);
  write_file_atomic(paths.panel(cfg.tier), serialize_panel(rows));
}

std::vector<PanelRow> load_panel(const Paths& paths, Tier tier) {
  require(paths.panel(tier), Stage::panel);
  return parse_panel(read_file(paths.panel(tier)), paths.panel(tier).string());
}

ModelSpec model_spec(const RunConfig& cfg) {
  ModelSpec spec;
  spec.response = "event";
  spec.covariates = cfg.covariates;
  if (spec.covariates.empty()) {
    if (std::find(cfg.fixed_effects.begin(), cfg.fixed_effects.end(), "age") == cfg.fixed_effects.end())
      spec.covariates.push_back("age");
    for (const auto& n : panel_covariate_names()) spec.covariates.push_back(n);
  }
  spec.fixed_effects = cfg.fixed_effects;
  return spec;
}

void stage_fit(const RunConfig& cfg, const Paths& paths) {
  const auto rows = load_panel(paths, cfg.tier);
  const auto df = panel_frame(rows);
  const auto spec = model_spec(cfg);
  for (const auto& name : spec.covariates)
    if (!df.has(name)) throw InputError("covariate '" + name + "' is not a panel column");
  const auto fit = fit_logit(df, spec);
  const auto a = estimation_clusters(fit, df.column("strata_id"));
  const auto b = estimation_clusters(fit, df.column("year"));
  const auto cov = two_way_clustered_cov(fit, a, b);
  const auto table = coefficient_table(fit, cov.covariance);

  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["tier"] = to_string(cfg.tier);
  j["response"] = spec.response;
  j["fixed_effects"] = spec.fixed_effects;
  j["clusters"] = {"strata_id", "year"};
  ojson coefs = ojson::array();
  std::size_t fe_columns = 0;
  for (const auto& r : table) {
    if (r.name.find('[') != std::string::npos) {
      ++fe_columns;
      continue;
    }
    coefs.push_back({{"name", r.name}, {"estimate", json_number(r.estimate)}, {"std_error", json_number(r.std_error)},
                     {"z", json_number(r.z)}, {"p_value", json_number(r.p_value)},
                     {"ci_lower", json_number(r.ci_lower)}, {"ci_upper", json_number(r.ci_upper)}});
  }
  j["coefficients"] = coefs;
  j["fixed_effect_columns"] = fe_columns;
  j["log_likelihood"] = fit.log_likelihood;
  j["n_obs"] = fit.n_obs;
  j["n_events"] = [&] {
    std::size_t e = 0;
    for (auto i : fit.rows) e += df.column("event")[i] == 1.0;
    return e;
  }();
  j["rows_missing"] = fit.rows_missing;
  j["rows_perfect_prediction"] = fit.rows_perfect_prediction;
  ojson dropped = ojson::array();
  for (const auto& d : fit.dropped_columns) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
  j["dropped_columns"] = dropped;
  j["convergence"] = {{"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"gradient_max_norm", fit.gradient_max_norm},
                      {"tolerance", spec.tol}};
  j["covariance"] = {{"eigenvalues_floored", cov.eigenvalues_floored}, {"warnings", cov.warnings}};
  write_file_atomic(paths.fit(cfg.tier), dump(j));
}

void stage_survival(const RunConfig& cfg, const Paths& paths) {
  const auto rows = load_panel(paths, cfg.tier);
  CsvWriter w({"group", "time", "S", "lower", "upper", "at_risk", "events"});
  for (const char* space : {"scientific", "social"}) {
    const bool sci = std::string(space) == "scientific";
    std::vector<double> t;
    std::vector<int> e;
    std::vector<std::string> g;
    for (const auto& r : rows) {
      const auto& grp = sci ? r.group_sci : r.group_soc;
      if (!grp) continue;
      t.push_back(r.age);
      e.push_back(r.event);
      g.push_back(std::string(space) + ":" + to_string(*grp));
    }
    std::map<std::string, std::pair<double, std::size_t>> last_seen;  // group -> (last age, rows at that age)
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto [it, fresh] = last_seen.try_emplace(g[i], t[i], 0);
      if (t[i] > it->second.first) it->second = {t[i], 0};
      if (t[i] == it->second.first) ++it->second.second;
    }
    for (const auto& curve : kaplan_meier(t, e, g, t)) {
      for (const auto& s : curve.steps)
        w.add_row({curve.group, format_double(s.time), format_double(s.survival), format_double(s.lower),
                   format_double(s.upper), std::to_string(s.at_risk), std::to_string(s.events)});
      // an event-free group still gets a row so it shows up flat at 1
      if (curve.steps.empty()) {
        const auto& [time, at_risk] = last_seen.at(curve.group);
        w.add_row({curve.group, format_double(time), "1", "1", "1", std::to_string(at_risk), "0"});
      }
    }
  }
  write_file_atomic(paths.survival(cfg.tier), w.str());
}

ojson coefficient_json(const std::vector<CoefficientRow>& rows) {
  ojson a = ojson::array();
  for (const auto& r : rows)
    a.push_back({{"name", r.name}, {"estimate", json_number(r.estimate)}, {"std_error", json_number(r.std_error)},
                 {"p_value", json_number(r.p_value)}, {"ci_lower", json_number(r.ci_lower)},
                 {"ci_upper", json_number(r.ci_upper)}});
  return a;
}

void stage_posthoc(const RunConfig& cfg, const Paths& paths) {
  const auto c = load_corpus(cfg, paths);
  const auto subs = load_subfields(paths, c);
  const auto bursts = load_tier_bursts(paths, cfg.tier);

  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["tier"] = to_string(cfg.tier);
  ojson logits = ojson::array();
  for (const auto& r : subfield_logits(subs, bursts, c.papers)) {
    ojson e{{"covariate", r.covariate}, {"n", r.n}, {"coefficients", coefficient_json(r.rows)}};
    ojson dropped = ojson::array();
    for (const auto& d : r.dropped) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
    e["dropped_columns"] = dropped;
    e["error"] = r.error ? ojson(*r.error) : ojson(nullptr);
    logits.push_back(e);
  }
  j["subfield_logits"] = logits;
  ojson prod = ojson::array();
  for (int w : {5, 10}) {
    const auto p = productivity_comparison(subs, bursts, c.papers, c.last_year, w);
    ojson e{{"window_years", w}, {"pairs", p.newcomer.size()}, {"difference", "newcomer - incumbent"}};
    if (p.test) {
      e["mean_difference"] = p.test->mean_difference;
      e["t"] = json_number(p.test->t);
      e["df"] = p.test->df;
      e["p_value"] = json_number(p.test->p_value);
      e["ci_lower"] = json_number(p.test->ci_lower);
      e["ci_upper"] = json_number(p.test->ci_upper);
    }
    e["note"] = p.note;
    prod.push_back(e);
  }
  j["productivity"] = prod;
  write_file_atomic(paths.posthoc(cfg.tier), dump(j));

  GrantsOptions go;
  go.followup_years = cfg.grants_followup_years;
  const auto g = grants_trend(subs, bursts, c.papers, c.last_year, go);
  CsvWriter w({"relative_year", "mean_new_grants", "n_subfields", "quadratic", "segment"});
  for (int r = go.window_lo; r <= go.window_hi; ++r) {
    auto m = g.mean_new_grants.find(r);
    auto n = g.n_subfields.find(r);
    w.add_row({std::to_string(r), m != g.mean_new_grants.end() ? format_double(m->second) : std::string(),
               std::to_string(n != g.n_subfields.end() ? n->second : 0), g.fit ? format_double((*g.fit)(r)) : std::string(),
               r <= 0 ? "fit" : "extrapolation"});
  }
  write_file_atomic(paths.grants(cfg.tier), w.str());
  ojson s;
  s["schema_version"] = kSchemaVersion;
  s["tier"] = to_string(cfg.tier);
  s["collapsed_subfields"] = g.n_collapsed;
  s["share_with_post_collapse_new_grant"] = g.share_with_post_collapse_grant;
  s["post_collapse_new_grants"] = {{"q1", g.q1}, {"median", g.median}, {"q3", g.q3}};
  s["followup_years_filter"] = go.followup_years ? ojson(*go.followup_years) : ojson(nullptr);
  if (g.fit) s["quadratic"] = {{"a", g.fit->a}, {"b", g.fit->b}, {"c", g.fit->c}};
  else s["quadratic"] = nullptr;
  write_file_atomic(paths.grants_summary(cfg.tier), dump(s));
}

void stage_report(const RunConfig& cfg, const Paths& paths) {
  const Tier t = cfg.tier;
  require(paths.retrieval(), Stage::train);
  require(paths.trajectories(), Stage::diffusion);
  require(paths.cutoffs(), Stage::detect);
  require(paths.fit(t), Stage::fit);
  require(paths.survival(t), Stage::survival);
  require(paths.posthoc(t), Stage::posthoc);
  require(paths.grants(t), Stage::posthoc);
  require(paths.grants_summary(t), Stage::posthoc);
  const auto dir = paths.report();

  const auto fit = read_json(paths.fit(t));
  CsvWriter table({"variable", "estimate", "std_error", "p_value", "ci_lower", "ci_upper", "odds_change_2sd_decrease",
                   "odds_change_ci_lower", "odds_change_ci_upper"});
  auto num = [](const ojson& v) { return v.is_null() ? std::string() : format_double(v.get<double>()); };
  for (const auto& r : fit["coefficients"]) {
    const auto name = r["name"].get<std::string>();
    std::vector<std::string> row{name, num(r["estimate"]), num(r["std_error"]), num(r["p_value"]),
                                 num(r["ci_lower"]), num(r["ci_upper"])};
    if ((name == "z_sci" || name == "z_soc") && !r["ci_lower"].is_null()) {
      const auto ci = odds_change_ci(r["ci_lower"].get<double>(), r["ci_upper"].get<double>(), -2.0);
      row.push_back(format_double(odds_change(r["estimate"].get<double>(), -2.0)));
      row.push_back(format_double(ci.first));
      row.push_back(format_double(ci.second));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    table.add_row(row);
  }
  write_file_atomic(dir / "table1.csv", table.str());
  write_file_atomic(dir / "fig1_trajectories.csv", read_file(paths.trajectories()));
  write_file_atomic(dir / "fig2_survival.csv", read_file(paths.survival(t)));
  write_file_atomic(dir / "fig4_grants.csv", read_file(paths.grants(t)));
  write_file_atomic(dir / "ext_table2.json", dump(read_json(paths.grants_summary(t))));

  const auto post = read_json(paths.posthoc(t));
  ojson fig3;
  fig3["schema_version"] = kSchemaVersion;
  fig3["tier"] = to_string(t);
  fig3["productivity"] = post["productivity"];
  write_file_atomic(dir / "fig3_ttests.json", dump(fig3));
  CsvWriter s4({"covariate", "term", "estimate", "std_error", "p_value", "ci_lower", "ci_upper", "n"});
  for (const auto& l : post["subfield_logits"])
    for (const auto& r : l["coefficients"])
      s4.add_row({l["covariate"].get<std::string>(), r["name"].get<std::string>(), num(r["estimate"]),
                  num(r["std_error"]), num(r["p_value"]), num(r["ci_lower"]), num(r["ci_upper"]),
                  std::to_string(l["n"].get<std::size_t>())});
  write_file_atomic(dir / "s4_logits.csv", s4.str());

  // Terminal survival per group, read back from the survival table.
  const auto surv = read_csv(paths.survival(t));
  check_schema(surv, paths.survival(t).string());
  std::map<std::string, double> terminal;
  const auto cg = surv.column("group"), cs = surv.column("S");
  for (const auto& r : surv.rows) terminal[r[cg]] = parse_double(r[cs], "survival S");
  ojson summary;
  summary["schema_version"] = kSchemaVersion;
  summary["tier"] = to_string(t);
  summary["cutoffs"] = read_json(paths.cutoffs());
  summary["retrieval"] = read_json(paths.retrieval());
  summary["n_obs"] = fit["n_obs"];
  summary["n_events"] = fit["n_events"];
  summary["log_likelihood"] = fit["log_likelihood"];
  summary["terminal_survival"] = terminal;
  summary["cutoffs"].erase("schema_version");
  summary["retrieval"].erase("schema_version");
  write_file_atomic(dir / "summary.json", dump(summary));
}

}  // namespace

void run_stage(Stage stage, const RunConfig& cfg) {
  cfg.validate();
  const Paths paths{cfg.workdir};
  fs::create_directories(cfg.workdir);
  switch (stage) {
    case Stage::synth: return stage_synth(cfg, paths);
    case Stage::ingest: return stage_ingest(cfg, paths);
    case Stage::train: return stage_train(cfg, paths);
    case Stage::subfields: return stage_subfields(cfg, paths);
    case Stage::diffusion: return stage_diffusion(cfg, paths);
    case Stage::detect: return stage_detect(cfg, paths);
    case Stage::panel: return stage_panel(cfg, paths);
    case Stage::fit: return stage_fit(cfg, paths);
    case Stage::survival: return stage_survival(cfg, paths);
    case Stage::posthoc: return stage_posthoc(cfg, paths);
    case Stage::report: return stage_report(cfg, paths);
  }
}

}  // namespace bubble
