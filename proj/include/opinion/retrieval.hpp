#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opinion/backend.hpp"
#include "opinion/corpus.hpp"

namespace opinion {

// Immutable per-subreddit tf-idf index over corpus instructions.
//
// Tokens are text::tokenize() runs. A term's idf is ln((1 + N) / (1 + df)) + 1
// over the subreddit's N instructions; query terms absent from the
// subreddit get df = 0. Document weights are raw term counts times idf and
// similarity is the cosine of the two weight vectors (0 when either is
// empty).
class RetrievalIndex {
 public:
  explicit RetrievalIndex(std::vector<InstructionPair> pairs);

  struct Match {
    const InstructionPair* pair = nullptr;
    std::size_t position = 0;  // within the subreddit, corpus order
    double similarity = 0.0;
  };

  // Best match by similarity; the earliest record wins ties. Throws
  // NoCorpusError when the subreddit has no records.
  Match retrieve(std::string_view subreddit, std::string_view query) const;

  // Similarity of `query` to every record of the subreddit, corpus order.
  std::vector<double> similarities(std::string_view subreddit, std::string_view query) const;

  std::size_t size(std::string_view subreddit) const noexcept;
  std::size_t size() const noexcept { return total_; }

 private:
  using TermVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by term id

  struct Shard {
    std::vector<InstructionPair> pairs;
    std::vector<TermVector> vectors;
    std::vector<double> norms;
    std::unordered_map<std::string, std::uint32_t> vocabulary;
    std::vector<double> idf;
    double unseen_idf = 1.0;
  };

  const Shard& shard(std::string_view subreddit) const;
  TermVector query_vector(const Shard& shard, std::string_view query, double& norm) const;

  std::map<std::string, Shard, std::less<>> shards_;
  std::size_t total_ = 0;
};

// Offline stand-in for a tuned model: answers with the stored response
// whose instruction is most similar to the prompt's.
class RetrievalBackend final : public GenerationBackend {
 public:
  explicit RetrievalBackend(std::shared_ptr<const RetrievalIndex> index) : index_(std::move(index)) {}

  Completion generate(const RenderedPrompt& prompt, const GenerationParams& params) override;
  BackendKind kind() const noexcept override { return BackendKind::retrieval; }

 private:
  std::shared_ptr<const RetrievalIndex> index_;
};

}  // namespace opinion
