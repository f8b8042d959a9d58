#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bubble/corpus.hpp"

namespace bubble {

enum class SpaceKind { scientific, social };

std::string to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& s);

struct EmbeddingConfig {
  SpaceKind kind = SpaceKind::scientific;
  int dim = 100;
  int epochs = 100;
  int min_token_count = 10;
  int window = 110;            // must cover the longest document; context is the whole document
  int negative_samples = 5;
  double learning_rate_initial = 0.025;
  double learning_rate_final = 0.0001;
  std::uint64_t rng_seed = 1;
  int workers = 1;             // 1 = deterministic single-worker mode
  int infer_epochs = 100;

  static EmbeddingConfig scientific();  // min count 10, window 110
  static EmbeddingConfig social();      // min count 2, window 2000

  void validate() const;  // throws InputError
};

// Training document tokens of a paper for the given space.
std::vector<std::string> document_tokens(const PaperRecord& paper, SpaceKind kind);

// Token -> occurrence count over the corpus, restricted to tokens with count >= min_count.
using VocabCounts = std::map<std::string, std::uint64_t>;
VocabCounts build_vocab(const PaperTable& papers, SpaceKind kind, int min_count);

// Dense row-major float vectors keyed by 64-bit id.
class VectorStore {
 public:
  VectorStore() = default;
  explicit VectorStore(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::span<const std::uint64_t> ids() const { return ids_; }

  std::size_t add(std::uint64_t id, std::span<const float> v);
  bool contains(std::uint64_t id) const { return index_.contains(id); }
  // Empty span when the id has no vector.
  std::span<const float> get(std::uint64_t id) const;
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }
  std::span<float> mutable_row(std::size_t i) { return {data_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }

  bool operator==(const VectorStore& o) const { return dim_ == o.dim_ && ids_ == o.ids_ && data_ == o.data_; }

 private:
  int dim_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<float> data_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

struct EmbeddingSpace {
  EmbeddingConfig config;
  VectorStore docs;                  // paper_id -> vector
  VectorStore token_vectors;         // token id -> output-layer vector
  std::vector<std::string> tokens;   // token id -> token string
  std::unordered_map<std::string, std::uint64_t> token_ids;
  VocabCounts vocab_counts;

  std::span<const float> doc(PaperId id) const { return docs.get(id); }
  std::span<const float> token(const std::string& t) const;
};

EmbeddingSpace train_dbow(const PaperTable& papers, const EmbeddingConfig& config);

// Fits a fresh document vector for the token list with token vectors frozen.
std::vector<float> infer_document(std::span<const std::string> tokens, const EmbeddingSpace& space,
                                  int infer_epochs, std::uint64_t rng_seed = 0);

// 1 - cos(u, v). Returns 1 when either vector has zero norm.
double cosine_distance(std::span<const float> u, std::span<const float> v);
double cosine_distance(std::span<const double> u, std::span<const double> v);

struct ScoredId {
  std::uint64_t id;
  double similarity;
  bool operator==(const ScoredId&) const = default;
};

// Exact top-k by cosine similarity, descending; ties by ascending id.
std::vector<ScoredId> top_k_similar(std::span<const float> query, const VectorStore& store, std::size_t k);
std::vector<ScoredId> top_k_similar(std::span<const float> query, const EmbeddingSpace& space, std::size_t k);

std::map<int, double> self_retrieval_test(const EmbeddingSpace& space, const PaperTable& papers,
                                          std::size_t sample_size, std::vector<int> k_list,
                                          std::uint64_t rng_seed);

// Negative-sampling loss of one (document, token) pair with its noise tokens:
//   -log sigma(d.p) - sum_n log sigma(-d.n)
double ns_pair_loss(std::span<const double> doc, std::span<const double> positive,
                    const std::vector<std::span<const double>>& negatives);

struct NsPairGradient {
  std::vector<double> doc;
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
};
NsPairGradient ns_pair_gradient(std::span<const double> doc, std::span<const double> positive,
                                const std::vector<std::span<const double>>& negatives);

// EMB1 binary vector files and the token sidecar.
void write_vectors(const std::filesystem::path& path, const VectorStore& store);
VectorStore read_vectors(const std::filesystem::path& path);

// Writes <prefix>_docs.emb, <prefix>_tokens.emb, <prefix>_tokens.tsv,
// <prefix>_vocab.tsv and <prefix>_space.json under dir.
void save_space(const EmbeddingSpace& space, const std::filesystem::path& dir, const std::string& prefix);
EmbeddingSpace load_space(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace bubble
