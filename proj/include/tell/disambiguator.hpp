#pragma once

#include <cstdint>
#include <vector>

#include "tell/candidates.hpp"
#include "tell/encoders.hpp"
#include "tell/kb.hpp"
#include "tell/nn/model.hpp"
#include "tell/prediction.hpp"
#include "tell/table.hpp"

namespace tell {

/// Softmax over mention-candidate dot products with the learned NIL embedding
/// appended as the last class. best == candidates.size() means NIL; ties go to
/// the earliest index.
struct ScoredCandidates {
  Vecd probs;  // size candidates + 1, sums to 1
  int best = 0;
};

ScoredCandidates score_candidates(const Vecd& mention_vec, const std::vector<Vecd>& candidates,
                                  const Vecd& nil_embed);

struct TrainConfig {
  Variant variant = Variant::Tell;
  ModelHyper hyper;
  AdamConfig adam;
  int epochs = 10;
  int batch_size = 8;
  int candidate_k = 20;  // k used when generating the candidate files
  std::uint64_t seed = 42;
};

struct TrainResult {
  EncoderModel model;
  std::vector<double> loss_curve;  // mean per-mention loss per epoch
};

/// Cross-entropy over candidates + NIL. Mentions whose gold entity is absent
/// from their candidate set (or that have no gold link) train as NIL.
/// Deterministic under a fixed seed; single-threaded.
TrainResult train(const std::vector<Table>& corpus, const KbStore& kb,
                  const CandidateMap& candidates, const TrainConfig& config);

struct PredictOptions {
  /// Score-threshold NIL alternative: drop the learned NIL class and predict
  /// NIL when the best candidate probability falls below the threshold.
  bool nil_threshold_mode = false;
  double nil_threshold = 0.5;
};

struct PredictResult {
  std::vector<Prediction> predictions;
  std::size_t entity_cache_size = 0;  // unique entities encoded
  std::size_t entity_cache_hits = 0;  // re-uses of a cached embedding
};

/// One Prediction per mention; mentions without a candidate entry predict NIL
/// with probability 1. Entity embeddings are computed once per unique
/// candidate in a pre-pass.
PredictResult predict(const std::vector<Table>& tables, const EncoderModel& model,
                      const KbStore& kb, const CandidateMap& candidates,
                      const PredictOptions& options = {});

}  // namespace tell
