#include "opinion/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "opinion/error.hpp"
#include "opinion/text.hpp"

namespace opinion {

namespace {

double dot(const std::vector<std::pair<std::uint32_t, double>>& a,
           const std::vector<std::pair<std::uint32_t, double>>& b) {
  double sum = 0.0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      sum += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return sum;
}

double norm_of(const std::vector<std::pair<std::uint32_t, double>>& v) {
  double sum = 0.0;
  for (const auto& [_, w] : v) sum += w * w;
  return std::sqrt(sum);
}

}  // namespace

RetrievalIndex::RetrievalIndex(std::vector<InstructionPair> pairs) {
  total_ = pairs.size();
  for (auto& p : pairs) {
    auto it = shards_.find(p.subreddit);
    if (it == shards_.end()) it = shards_.emplace(p.subreddit, Shard{}).first;
    it->second.pairs.push_back(std::move(p));
  }

  for (auto& [_, shard] : shards_) {
    std::vector<std::uint32_t> df;
    std::vector<std::map<std::uint32_t, std::uint32_t>> counts;
    counts.reserve(shard.pairs.size());
    for (const auto& p : shard.pairs) {
      std::map<std::uint32_t, std::uint32_t> tf;
      for (auto& tok : text::tokenize(p.instruction)) {
        auto [it, inserted] = shard.vocabulary.try_emplace(std::move(tok), static_cast<std::uint32_t>(df.size()));
        if (inserted) df.push_back(0);
        ++tf[it->second];
      }
      for (const auto& [term, _] : tf) ++df[term];
      counts.push_back(std::move(tf));
    }

    const double n = static_cast<double>(shard.pairs.size());
    shard.idf.resize(df.size());
    for (std::size_t t = 0; t < df.size(); ++t) shard.idf[t] = std::log((1.0 + n) / (1.0 + df[t])) + 1.0;
    shard.unseen_idf = std::log(1.0 + n) + 1.0;

    for (const auto& tf : counts) {
      TermVector v;
      v.reserve(tf.size());
      for (const auto& [term, count] : tf) v.emplace_back(term, count * shard.idf[term]);
      shard.norms.push_back(norm_of(v));
      shard.vectors.push_back(std::move(v));
    }
  }
}

const RetrievalIndex::Shard& RetrievalIndex::shard(std::string_view subreddit) const {
  auto it = shards_.find(subreddit);
  if (it == shards_.end() || it->second.pairs.empty()) {
    throw NoCorpusError("no corpus records for subreddit " + std::string(subreddit));
  }
  return it->second;
}

RetrievalIndex::TermVector RetrievalIndex::query_vector(const Shard& s, std::string_view query,
                                                        double& norm) const {
  std::map<std::uint32_t, std::uint32_t> known;
  double unseen_sq = 0.0;
  std::map<std::string, std::uint32_t> unseen;
  for (auto& tok : text::tokenize(query)) {
    if (auto it = s.vocabulary.find(tok); it != s.vocabulary.end()) {
      ++known[it->second];
    } else {
      ++unseen[std::move(tok)];
    }
  }
  for (const auto& [_, count] : unseen) unseen_sq += (count * s.unseen_idf) * (count * s.unseen_idf);

  TermVector v;
  v.reserve(known.size());
  for (const auto& [term, count] : known) v.emplace_back(term, count * s.idf[term]);
  double known_sq = 0.0;
  for (const auto& [_, w] : v) known_sq += w * w;
  norm = std::sqrt(known_sq + unseen_sq);
  return v;
}

std::vector<double> RetrievalIndex::similarities(std::string_view subreddit, std::string_view query) const {
  const auto& s = shard(subreddit);
  double qnorm = 0.0;
  const auto q = query_vector(s, query, qnorm);
  std::vector<double> sims(s.pairs.size(), 0.0);
  if (qnorm == 0.0) return sims;
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    if (s.norms[i] == 0.0) continue;
    sims[i] = dot(q, s.vectors[i]) / (qnorm * s.norms[i]);
  }
  return sims;
}

RetrievalIndex::Match RetrievalIndex::retrieve(std::string_view subreddit, std::string_view query) const {
  const auto& s = shard(subreddit);
  const auto sims = similarities(subreddit, query);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sims.size(); ++i) {
    if (sims[i] > sims[best]) best = i;
  }
  return Match{&s.pairs[best], best, sims[best]};
}

std::size_t RetrievalIndex::size(std::string_view subreddit) const noexcept {
  auto it = shards_.find(subreddit);
  return it == shards_.end() ? 0 : it->second.pairs.size();
}

Completion RetrievalBackend::generate(const RenderedPrompt& prompt, const GenerationParams& params) {
  const auto start = std::chrono::steady_clock::now();
  auto match = index_->retrieve(prompt.subreddit, prompt.instruction);
  Completion c;
  c.text = apply_stop_sequences(match.pair->response, params.stop);
  c.backend = BackendKind::retrieval;
  c.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return c;
}

}  // namespace opinion
