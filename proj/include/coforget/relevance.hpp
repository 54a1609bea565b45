#pragma once

#include <functional>
#include <memory>
#include <string>

#include "coforget/core.hpp"

namespace coforget {

struct ContextProfile {
  Embedding embedding;  // must be non-zero
  std::string label;
};

enum class ScorerKind { cosine_context, external };

/// Maps (memory, context) to a relevance R in [0,1]. Implementations must be
/// deterministic and hold no mutable state after construction.
class RelevanceScorer {
 public:
  virtual ~RelevanceScorer() = default;
  virtual ScorerKind kind() const = 0;
  virtual double score(const MemoryRecord& memory, const ContextProfile& context) const = 0;
};

/// (cos + 1) / 2 of the memory and context embeddings. A zero memory
/// embedding carries no information and scores 0.5.
class CosineContextScorer final : public RelevanceScorer {
 public:
  ScorerKind kind() const override { return ScorerKind::cosine_context; }
  double score(const MemoryRecord& memory, const ContextProfile& context) const override;
};

/// Seam for model-backed scoring. Results are clamped to [0,1].
class ExternalScorer final : public RelevanceScorer {
 public:
  using Fn = std::function<double(const MemoryRecord&, const ContextProfile&)>;

  explicit ExternalScorer(Fn fn) : fn_(std::move(fn)) {}

  ScorerKind kind() const override { return ScorerKind::external; }
  double score(const MemoryRecord& memory, const ContextProfile& context) const override;

 private:
  Fn fn_;
};

/// Cosine similarity in [-1, 1]; zero vectors give 0.
/// Throws DimensionMismatch on unequal lengths.
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Default relevance: CosineContextScorer. Throws DimensionMismatch, or
/// InvalidParameter for a zero context embedding.
double relevance(const MemoryRecord& memory, const ContextProfile& context);

std::shared_ptr<const RelevanceScorer> default_scorer();

}  // namespace coforget
