#include "coforget/relevance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace coforget {

namespace {

struct Moments {
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
};

Moments moments(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("embedding lengths differ: {} vs {}", a.size(), b.size()));
  }
  Moments m;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m.dot += a[i] * b[i];
    m.aa += a[i] * a[i];
    m.bb += b[i] * b[i];
  }
  return m;
}

// sqrt(aa * bb) rather than sqrt(aa) * sqrt(bb): identical vectors give
// exactly 1 this way.
double cosine_from(const Moments& m) {
  if (m.aa == 0.0 || m.bb == 0.0) return 0.0;
  return std::clamp(m.dot / std::sqrt(m.aa * m.bb), -1.0, 1.0);
}

}  // namespace

double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_from(moments(a, b));
}

double CosineContextScorer::score(const MemoryRecord& memory,
                                  const ContextProfile& context) const {
  const auto m = moments(memory.embedding, context.embedding);
  if (m.bb == 0.0) throw Error(ErrorCode::InvalidParameter, "context embedding is zero");
  if (m.aa == 0.0) return 0.5;
  return std::clamp((cosine_from(m) + 1.0) / 2.0, 0.0, 1.0);
}

double ExternalScorer::score(const MemoryRecord& memory, const ContextProfile& context) const {
  const double r = fn_(memory, context);
  if (std::isnan(r)) throw Error(ErrorCode::InvalidParameter, "external scorer returned NaN");
  return std::clamp(r, 0.0, 1.0);
}

double relevance(const MemoryRecord& memory, const ContextProfile& context) {
  return CosineContextScorer{}.score(memory, context);
}

std::shared_ptr<const RelevanceScorer> default_scorer() {
  static const auto scorer = std::make_shared<const CosineContextScorer>();
  return scorer;
}

}  // namespace coforget
