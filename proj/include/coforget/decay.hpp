#pragma once

#include <vector>

#include "coforget/core.hpp"

namespace coforget {

enum class DecayProposal { propose_keep, propose_forget };

struct DecayResult {
  std::vector<double> per_scale;  // exp(-age / S_i), one per time scale
  double combined = 1.0;          // gamma-weighted sum of per_scale
  double variance = 0.0;          // population variance around `combined`
  bool high_variance = false;     // variance > cfg.variance_warn
  DecayProposal proposal = DecayProposal::propose_keep;
};

/// Multi-scale exponential decay of a memory last touched at t_last,
/// evaluated at now. The variance is centred on the weighted score, not the
/// plain mean of the per-scale terms. Very old memories may underflow to a
/// combined score of exactly zero, which proposes forgetting.
///
/// Throws Error(NegativeAge) when now < t_last.
DecayResult decay_score(Timestamp t_last, Timestamp now, const ProtocolConfig& cfg);

}  // namespace coforget
