#include "bubble/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "bubble/io.hpp"

namespace bubble {

std::string to_string(SpaceKind kind) { return kind == SpaceKind::scientific ? "scientific" : "social"; }

SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "scientific") return SpaceKind::scientific;
  if (s == "social") return SpaceKind::social;
  throw InputError("unknown space kind '" + s + "'");
}

EmbeddingConfig EmbeddingConfig::scientific() {
  EmbeddingConfig c;
  c.kind = SpaceKind::scientific;
  c.min_token_count = 10;
  c.window = 110;
  return c;
}

EmbeddingConfig EmbeddingConfig::social() {
  EmbeddingConfig c;
  c.kind = SpaceKind::social;
  c.min_token_count = 2;
  c.window = 2000;
  return c;
}

void EmbeddingConfig::validate() const {
  if (dim < 1) throw InputError("embedding dim must be >= 1");
  if (epochs < 1) throw InputError("embedding epochs must be >= 1");
  if (min_token_count < 1) throw InputError("min_token_count must be >= 1");
  if (window < 1) throw InputError("window must be >= 1");
  if (negative_samples < 1) throw InputError("negative_samples must be >= 1");
  if (workers < 1) throw InputError("workers must be >= 1");
  if (infer_epochs < 1) throw InputError("infer_epochs must be >= 1");
  if (!(learning_rate_initial > 0.0) || learning_rate_final < 0.0 || learning_rate_final > learning_rate_initial)
    throw InputError("learning rates must satisfy 0 <= final <= initial, initial > 0");
}

std::vector<std::string> document_tokens(const PaperRecord& paper, SpaceKind kind) {
  return kind == SpaceKind::scientific ? expand_topic_tokens(paper.topic_entries) : author_tokens(paper);
}

VocabCounts build_vocab(const PaperTable& papers, SpaceKind kind, int min_count) {
  if (papers.empty()) throw InputError("cannot build vocabulary from an empty corpus");
  VocabCounts counts;
  for (const auto& p : papers.papers())
    for (auto& t : document_tokens(p, kind)) ++counts[std::move(t)];
  std::erase_if(counts, [&](const auto& kv) { return kv.second < static_cast<std::uint64_t>(min_count); });
  return counts;
}

std::size_t VectorStore::add(std::uint64_t id, std::span<const float> v) {
  if (static_cast<int>(v.size()) != dim_) throw std::invalid_argument("vector length does not match store dim");
  auto [it, fresh] = index_.emplace(id, ids_.size());
  if (!fresh) throw InputError("duplicate vector id " + std::to_string(id));
  ids_.push_back(id);
  data_.insert(data_.end(), v.begin(), v.end());
  return it->second;
}

std::span<const float> VectorStore::get(std::uint64_t id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return {};
  return row(it->second);
}

std::span<const float> EmbeddingSpace::token(const std::string& t) const {
  auto it = token_ids.find(t);
  if (it == token_ids.end()) return {};
  return token_vectors.get(it->second);
}

namespace {

// Cumulative unigram^0.75 noise distribution over token ids.
std::vector<double> noise_cdf(const EmbeddingSpace& space) {
  std::vector<double> cdf;
  cdf.reserve(space.tokens.size());
  double acc = 0.0;
  for (const auto& t : space.tokens) {
    acc += std::pow(static_cast<double>(space.vocab_counts.at(t)), 0.75);
    cdf.push_back(acc);
  }
  return cdf;
}

std::uint32_t draw_noise(const std::vector<double>& cdf, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, cdf.back());
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u(rng));
  if (it == cdf.end()) --it;
  return static_cast<std::uint32_t>(it - cdf.begin());
}

inline float sigmoid(float x) {
  if (x > 30.0f) return 1.0f;
  if (x < -30.0f) return 0.0f;
  return 1.0f / (1.0f + std::exp(-x));
}

template <bool Shared>
inline float load(float& x) {
  if constexpr (Shared) return std::atomic_ref<float>(x).load(std::memory_order_relaxed);
  else return x;
}

template <bool Shared>
inline void store(float& x, float v) {
  if constexpr (Shared) std::atomic_ref<float>(x).store(v, std::memory_order_relaxed);
  else x = v;
}

// One SGD step on a (document, token) pair plus its noise draws. With UpdateTokens false
// the output vectors stay frozen (inference). Shared selects relaxed-atomic access to
// the output table for lock-free multi-worker training.
template <bool Shared, bool UpdateTokens>
void sgd_pair(float* doc, float* out, int dim, std::uint32_t target, const std::uint32_t* negs, int n_neg,
              float lr, float* grad_acc) {
  std::fill(grad_acc, grad_acc + dim, 0.0f);
  for (int s = -1; s < n_neg; ++s) {
    std::uint32_t tok;
    float label;
    if (s < 0) {
      tok = target;
      label = 1.0f;
    } else {
      tok = negs[s];
      if (tok == target) continue;
      label = 0.0f;
    }
    float* u = out + static_cast<std::size_t>(tok) * dim;
    float f = 0.0f;
    for (int k = 0; k < dim; ++k) f += doc[k] * load<Shared>(u[k]);
    const float g = (label - sigmoid(f)) * lr;
    for (int k = 0; k < dim; ++k) {
      const float uk = load<Shared>(u[k]);
      grad_acc[k] += g * uk;
      if constexpr (UpdateTokens) store<Shared>(u[k], uk + g * doc[k]);
    }
  }
  for (int k = 0; k < dim; ++k) doc[k] += grad_acc[k];
}

struct TrainingDoc {
  std::size_t row;
  std::vector<std::uint32_t> tokens;
};

template <bool Shared>
void train_shard(std::vector<float>& doc_data, std::vector<float>& out_data, const std::vector<TrainingDoc>& docs,
                 std::span<const std::size_t> order, const std::vector<double>& cdf, const EmbeddingConfig& cfg,
                 std::mt19937_64& rng, std::uint64_t pairs_before, std::uint64_t total_pairs) {
  const int dim = cfg.dim;
  std::vector<float> grad(dim);
  std::vector<std::uint32_t> negs(cfg.negative_samples);
  std::uint64_t done = pairs_before;
  for (auto di : order) {
    const auto& d = docs[di];
    float* doc = doc_data.data() + d.row * dim;
    for (auto tok : d.tokens) {
      const double progress = static_cast<double>(done) / static_cast<double>(total_pairs);
      const auto lr = static_cast<float>(cfg.learning_rate_initial -
                                         (cfg.learning_rate_initial - cfg.learning_rate_final) * progress);
      for (auto& n : negs) n = draw_noise(cdf, rng);
      sgd_pair<Shared, true>(doc, out_data.data(), dim, tok, negs.data(), cfg.negative_samples, lr, grad.data());
      ++done;
    }
  }
}

}  // namespace

EmbeddingSpace train_dbow(const PaperTable& papers, const EmbeddingConfig& config) {
  config.validate();
  EmbeddingSpace space;
  space.config = config;
  space.vocab_counts = build_vocab(papers, config.kind, config.min_token_count);
  if (space.vocab_counts.empty()) throw InputError("no token meets min_token_count; vocabulary empty");
  for (const auto& [tok, count] : space.vocab_counts) {
    space.token_ids.emplace(tok, space.tokens.size());
    space.tokens.push_back(tok);
  }

  std::vector<TrainingDoc> docs;
  std::vector<PaperId> doc_ids;
  for (const auto& p : papers.papers()) {
    auto toks = document_tokens(p, config.kind);
    if (static_cast<int>(toks.size()) > config.window)
      throw InputError("paper " + std::to_string(p.paper_id) + " has " + std::to_string(toks.size()) +
                       " tokens, more than window " + std::to_string(config.window));
    TrainingDoc d{docs.size(), {}};
    for (const auto& t : toks)
      if (auto it = space.token_ids.find(t); it != space.token_ids.end())
        d.tokens.push_back(static_cast<std::uint32_t>(it->second));
    if (d.tokens.empty()) continue;
    docs.push_back(std::move(d));
    doc_ids.push_back(p.paper_id);
  }
  if (docs.empty()) throw InputError("no document has a retained token");

  const int dim = config.dim;
  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<float> init(-0.5f, 0.5f);
  std::vector<float> doc_data(docs.size() * dim);
  for (auto& x : doc_data) x = init(rng) / static_cast<float>(dim);
  std::vector<float> out_data(space.tokens.size() * dim, 0.0f);

  const auto cdf = noise_cdf(space);
  std::uint64_t pairs_per_epoch = 0;
  for (const auto& d : docs) pairs_per_epoch += d.tokens.size();
  const std::uint64_t total_pairs = pairs_per_epoch * static_cast<std::uint64_t>(config.epochs);

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  const int workers = std::min<int>(config.workers, static_cast<int>(docs.size()));

  if (workers <= 1) {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      train_shard<false>(doc_data, out_data, docs, order, cdf, config, rng, pairs_per_epoch * epoch, total_pairs);
    }
  } else {
    // Each document lives in exactly one shard, so only the output table is contended.
    std::vector<std::mt19937_64> rngs;
    for (int w = 0; w < workers; ++w) rngs.emplace_back(config.rng_seed + 0x9e3779b97f4a7c15ULL * (w + 1));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<std::thread> threads;
      const std::size_t chunk = (order.size() + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const std::size_t lo = std::min(order.size(), w * chunk);
        const std::size_t hi = std::min(order.size(), lo + chunk);
        std::span<const std::size_t> shard(order.data() + lo, hi - lo);
        threads.emplace_back([&, shard, w] {
          train_shard<true>(doc_data, out_data, docs, shard, cdf, config, rngs[w], pairs_per_epoch * epoch,
                            total_pairs);
        });
      }
      for (auto& t : threads) t.join();
    }
  }

  space.docs = VectorStore(dim);
  for (std::size_t i = 0; i < docs.size(); ++i)
    space.docs.add(doc_ids[i], std::span<const float>(doc_data.data() + i * dim, dim));
  space.token_vectors = VectorStore(dim);
  for (std::size_t t = 0; t < space.tokens.size(); ++t)
    space.token_vectors.add(t, std::span<const float>(out_data.data() + t * dim, dim));
  return space;
}

std::vector<float> infer_document(std::span<const std::string> tokens, const EmbeddingSpace& space, int infer_epochs,
                                  std::uint64_t rng_seed) {
  if (tokens.empty()) throw InputError("cannot infer a document from an empty token list");
  if (infer_epochs < 1) throw InputError("infer_epochs must be >= 1");
  std::vector<std::uint32_t> ids;
  for (const auto& t : tokens)
    if (auto it = space.token_ids.find(t); it != space.token_ids.end()) ids.push_back(static_cast<std::uint32_t>(it->second));
  if (ids.empty()) throw InputError("no known tokens");

  const auto& cfg = space.config;
  const int dim = cfg.dim;
  std::mt19937_64 rng(rng_seed ? rng_seed : cfg.rng_seed);
  std::uniform_real_distribution<float> init(-0.5f, 0.5f);
  std::vector<float> doc(dim);
  for (auto& x : doc) x = init(rng) / static_cast<float>(dim);

  // The token table is read-only here; sgd_pair with UpdateTokens=false never writes it.
  auto* out = const_cast<float*>(space.token_vectors.row(0).data());
  const auto cdf = noise_cdf(space);
  std::vector<float> grad(dim);
  std::vector<std::uint32_t> negs(cfg.negative_samples);
  const std::uint64_t total = static_cast<std::uint64_t>(infer_epochs) * ids.size();
  std::uint64_t done = 0;
  for (int epoch = 0; epoch < infer_epochs; ++epoch) {
    for (auto tok : ids) {
      const double progress = static_cast<double>(done) / static_cast<double>(total);
      const auto lr = static_cast<float>(cfg.learning_rate_initial -
                                         (cfg.learning_rate_initial - cfg.learning_rate_final) * progress);
      for (auto& n : negs) n = draw_noise(cdf, rng);
      sgd_pair<false, false>(doc.data(), out, dim, tok, negs.data(), cfg.negative_samples, lr, grad.data());
      ++done;
    }
  }
  return doc;
}

namespace {

template <class T>
double cosine_distance_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_distance: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 1.0;
  const double d = 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(d, 0.0, 2.0);
}

}  // namespace

double cosine_distance(std::span<const float> u, std::span<const float> v) { return cosine_distance_impl(u, v); }
double cosine_distance(std::span<const double> u, std::span<const double> v) { return cosine_distance_impl(u, v); }

std::vector<ScoredId> top_k_similar(std::span<const float> query, const VectorStore& store, std::size_t k) {
  if (k < 1) throw InputError("top_k_similar: k must be >= 1");
  if (store.empty()) throw InputError("top_k_similar: empty space");
  if (static_cast<int>(query.size()) != store.dim()) throw std::invalid_argument("top_k_similar: query dim mismatch");
  std::vector<ScoredId> scored;
  scored.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    scored.push_back({store.ids()[i], 1.0 - cosine_distance(query, store.row(i))});
  k = std::min(k, scored.size());
  auto better = [](const ScoredId& a, const ScoredId& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
  scored.resize(k);
  return scored;
}

std::vector<ScoredId> top_k_similar(std::span<const float> query, const EmbeddingSpace& space, std::size_t k) {
  return top_k_similar(query, space.docs, k);
}

std::map<int, double> self_retrieval_test(const EmbeddingSpace& space, const PaperTable& papers,
                                          std::size_t sample_size, std::vector<int> k_list, std::uint64_t rng_seed) {
  std::vector<PaperId> candidates;
  for (const auto& p : papers.papers())
    if (space.docs.contains(p.paper_id)) candidates.push_back(p.paper_id);
  std::mt19937_64 rng(rng_seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (sample_size < candidates.size()) candidates.resize(sample_size);

  std::sort(k_list.begin(), k_list.end());
  std::map<int, double> rates;
  for (int k : k_list) rates[k] = 0.0;
  if (candidates.empty() || k_list.empty()) return rates;
  const auto kmax = static_cast<std::size_t>(std::max(1, k_list.back()));

  std::map<int, std::size_t> hits;
  for (auto id : candidates) {
    const auto toks = document_tokens(papers.at(id), space.config.kind);
    std::vector<float> inferred;
    try {
      inferred = infer_document(toks, space, space.config.infer_epochs, rng_seed + id + 1);
    } catch (const InputError&) {
      continue;  // counts as a miss
    }
    const auto ranked = top_k_similar(inferred, space, kmax);
    auto pos = std::find_if(ranked.begin(), ranked.end(), [&](const ScoredId& s) { return s.id == id; });
    const auto rank = static_cast<std::size_t>(pos - ranked.begin());
    for (int k : k_list)
      if (pos != ranked.end() && rank < static_cast<std::size_t>(k)) ++hits[k];
  }
  for (int k : k_list) rates[k] = static_cast<double>(hits[k]) / static_cast<double>(candidates.size());
  return rates;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double ns_pair_loss(std::span<const double> doc, std::span<const double> positive,
                    const std::vector<std::span<const double>>& negatives) {
  double loss = -log_sigmoid(dot(doc, positive));
  for (auto n : negatives) loss -= log_sigmoid(-dot(doc, n));
  return loss;
}

NsPairGradient ns_pair_gradient(std::span<const double> doc, std::span<const double> positive,
                                const std::vector<std::span<const double>>& negatives) {
  // Same coefficient (label - sigma(d.u)) that sgd_pair applies, with opposite sign.
  const std::size_t dim = doc.size();
  NsPairGradient g{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0), {}};
  const double cp = sigmoid_d(dot(doc, positive)) - 1.0;
  for (std::size_t k = 0; k < dim; ++k) {
    g.doc[k] += cp * positive[k];
    g.positive[k] = cp * doc[k];
  }
  for (auto n : negatives) {
    const double cn = sigmoid_d(dot(doc, n));
    std::vector<double> gn(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      g.doc[k] += cn * n[k];
      gn[k] = cn * doc[k];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

namespace {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::string_view in, std::size_t& pos, const std::string& source) {
  if (pos + sizeof(T) > in.size()) throw InputError(source + ": truncated vector file");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_vectors(const std::filesystem::path& path, const VectorStore& store) {
  std::string out = "EMB1";
  out.reserve(16 + store.size() * (8 + 4 * static_cast<std::size_t>(store.dim())));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  put_le<std::uint64_t>(out, store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    put_le<std::uint64_t>(out, store.ids()[i]);
    for (float x : store.row(i)) put_le<float>(out, x);
  }
  write_file_atomic(path, out);
}

VectorStore read_vectors(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string src = path.string();
  if (data.size() < 4 || data.compare(0, 4, "EMB1") != 0) throw InputError(src + ": bad magic, expected EMB1");
  std::size_t pos = 4;
  const auto dim = get_le<std::uint32_t>(data, pos, src);
  const auto count = get_le<std::uint64_t>(data, pos, src);
  if (dim == 0) throw InputError(src + ": zero dim");
  VectorStore store(static_cast<int>(dim));
  std::vector<float> v(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto id = get_le<std::uint64_t>(data, pos, src);
    for (auto& x : v) x = get_le<float>(data, pos, src);
    store.add(id, v);
  }
  if (pos != data.size()) throw InputError(src + ": trailing bytes after " + std::to_string(count) + " records");
  return store;
}

void save_space(const EmbeddingSpace& space, const std::filesystem::path& dir, const std::string& prefix) {
  write_vectors(dir / (prefix + "_docs.emb"), space.docs);
  write_vectors(dir / (prefix + "_tokens.emb"), space.token_vectors);
  std::string tsv, vocab;
  for (std::size_t i = 0; i < space.tokens.size(); ++i) {
    tsv += space.tokens[i] + '\t' + std::to_string(i) + '\n';
    vocab += space.tokens[i] + '\t' + std::to_string(space.vocab_counts.at(space.tokens[i])) + '\n';
  }
  write_file_atomic(dir / (prefix + "_tokens.tsv"), tsv);
  write_file_atomic(dir / (prefix + "_vocab.tsv"), vocab);
  const auto& c = space.config;
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["space_kind"] = to_string(c.kind);
  j["dim"] = c.dim;
  j["epochs"] = c.epochs;
  j["min_token_count"] = c.min_token_count;
  j["window"] = c.window;
  j["negative_samples"] = c.negative_samples;
  j["learning_rate_initial"] = c.learning_rate_initial;
  j["learning_rate_final"] = c.learning_rate_final;
  j["rng_seed"] = c.rng_seed;
  j["workers"] = c.workers;
  j["infer_epochs"] = c.infer_epochs;
  j["n_docs"] = space.docs.size();
  j["n_tokens"] = space.tokens.size();
  write_file_atomic(dir / (prefix + "_space.json"), j.dump(2) + "\n");
}

EmbeddingSpace load_space(const std::filesystem::path& dir, const std::string& prefix) {
  EmbeddingSpace space;
  const auto meta_path = dir / (prefix + "_space.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(meta_path.string() + ": " + e.what());
  }
  if (j.value("schema_version", std::string()) != kSchemaVersion)
    throw InputError(meta_path.string() + ": schema version mismatch");
  auto& c = space.config;
  c.kind = space_kind_from_string(j.at("space_kind").get<std::string>());
  c.dim = j.at("dim").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.min_token_count = j.at("min_token_count").get<int>();
  c.window = j.at("window").get<int>();
  c.negative_samples = j.at("negative_samples").get<int>();
  c.learning_rate_initial = j.at("learning_rate_initial").get<double>();
  c.learning_rate_final = j.at("learning_rate_final").get<double>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.workers = j.at("workers").get<int>();
  c.infer_epochs = j.at("infer_epochs").get<int>();

  space.docs = read_vectors(dir / (prefix + "_docs.emb"));
  space.token_vectors = read_vectors(dir / (prefix + "_tokens.emb"));

  auto parse_tsv = [](const std::filesystem::path& p, auto&& on_row) {
    const auto text = read_file(p);
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
      auto eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string_view line(text.data() + pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (line.empty()) continue;
      auto tab = line.rfind('\t');
      if (tab == std::string_view::npos) throw InputError(p.string() + ": line " + std::to_string(line_no) + ": missing tab");
      on_row(std::string(line.substr(0, tab)), parse_int(line.substr(tab + 1), p.string()));
    }
  };
  parse_tsv(dir / (prefix + "_tokens.tsv"), [&](std::string tok, std::int64_t id) {
    if (id != static_cast<std::int64_t>(space.tokens.size())) throw InputError("token ids must be dense and ordered");
    space.token_ids.emplace(tok, id);
    space.tokens.push_back(std::move(tok));
  });
  parse_tsv(dir / (prefix + "_vocab.tsv"),
            [&](std::string tok, std::int64_t count) { space.vocab_counts[std::move(tok)] = static_cast<std::uint64_t>(count); });
  if (space.tokens.size() != space.token_vectors.size() || space.vocab_counts.size() != space.tokens.size())
    throw InputError(dir.string() + ": token sidecar does not match token vectors for " + prefix);
  if (space.docs.dim() != c.dim || space.token_vectors.dim() != c.dim)
    throw InputError(dir.string() + ": vector dim does not match space metadata for " + prefix);
  return space;
}

}  // namespace bubble
