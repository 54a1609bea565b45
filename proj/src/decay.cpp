#include "coforget/decay.hpp"

#include <cmath>

#include <fmt/format.h>

namespace coforget {

DecayResult decay_score(Timestamp t_last, Timestamp now, const ProtocolConfig& cfg) {
  if (now < t_last) {
    throw Error(ErrorCode::NegativeAge,
                fmt::format("now ({}) precedes last access ({})", now, t_last));
  }
  const double age = now - t_last;
  const std::size_t n = cfg.decay_scales.size();

  DecayResult r;
  r.per_scale.reserve(n);
  r.combined = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::exp(-age / cfg.decay_scales[i]);
    r.per_scale.push_back(d);
    r.combined += cfg.decay_weights[i] * d;
  }

  double sq = 0.0;
  for (double d : r.per_scale) sq += (d - r.combined) * (d - r.combined);
  r.variance = n == 0 ? 0.0 : sq / static_cast<double>(n);

  r.high_variance = r.variance > cfg.variance_warn;
  r.proposal = r.combined < cfg.decay_threshold ? DecayProposal::propose_forget
                                                : DecayProposal::propose_keep;
  return r;
}

}  // namespace coforget
