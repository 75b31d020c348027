#include "tell/disambiguator.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tell/nn/ops.hpp"

namespace tell {

ScoredCandidates score_candidates(const Vecd& mention_vec, const std::vector<Vecd>& candidates,
                                  const Vecd& nil_embed) {
  const auto n = static_cast<Eigen::Index>(candidates.size());
  Vecd logits(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vecd& e = candidates[static_cast<std::size_t>(i)];
    if (e.size() != mention_vec.size()) {
      throw InternalError("score_candidates: embedding dimension mismatch");
    }
    logits(i) = mention_vec.dot(e);
  }
  if (nil_embed.size() != mention_vec.size()) {
    throw InternalError("score_candidates: NIL embedding dimension mismatch");
  }
  logits(n) = mention_vec.dot(nil_embed);

  ScoredCandidates out;
  out.probs = nn::softmax_stable(logits);
  out.best = 0;
  for (Eigen::Index i = 1; i < out.probs.size(); ++i) {
    if (out.probs(i) > out.probs(out.best)) out.best = static_cast<int>(i);
  }
  return out;
}

namespace {

struct MentionLabel {
  std::vector<std::string> candidate_ids;  // in candidate-set order
  int gold_index = 0;                      // candidate count == NIL
};

MentionLabel mention_label(const Table& table, const Mention& mention,
                           const CandidateMap& candidates) {
  MentionLabel label;
  const auto it = candidates.find(mention_key(mention));
  if (it != candidates.end()) {
    for (const Candidate& c : it->second.candidates) label.candidate_ids.push_back(c.id);
  }
  label.gold_index = static_cast<int>(label.candidate_ids.size());  // NIL unless found
  const auto gold = table.gold_links.find(CellRef{mention.row, mention.col});
  if (gold != table.gold_links.end()) {
    for (std::size_t i = 0; i < label.candidate_ids.size(); ++i) {
      if (label.candidate_ids[i] == gold->second) {
        label.gold_index = static_cast<int>(i);
        break;
      }
    }
  }
  return label;
}

/// Per-step entity memo: one forward per unique candidate, summed upstream
/// gradients, one backward per entity at the end of the step.
struct EntityMemo {
  EntityEncodeCache cache;
  Vecd embed;
  Vecd dembed;
};

class StepContext {
 public:
  StepContext(const EncoderModel& model, const KbStore& kb, ParamSet& grads)
      : model_(model), kb_(kb), grads_(grads) {}

  const Vecd& entity_embed(const std::string& id) {
    auto it = memo_.find(id);
    if (it == memo_.end()) {
      const Entity* entity = kb_.find(id);
      if (entity == nullptr) throw DataError("train: candidate entity " + id + " not in KB");
      EntityMemo memo;
      memo.embed = encode_entity(model_, *entity, &memo.cache);
      memo.dembed = Vecd::Zero(memo.embed.size());
      it = memo_.emplace(id, std::move(memo)).first;
    }
    return it->second.embed;
  }

  void add_entity_grad(const std::string& id, const Vecd& dvec) {
    memo_.at(id).dembed += dvec;
  }

  /// Backprop through each memoized entity encoding (deterministic id order).
  void flush() {
    for (auto& [id, memo] : memo_) {
      encode_entity_backward(model_, memo.cache, memo.dembed, grads_);
    }
    memo_.clear();
  }

  /// Returns the loss; accumulates d(loss)/d(mention_vec) into dvec and the
  /// entity/NIL gradients into the step state. Gradients are of the SUM of
  /// mention losses; the caller rescales at step end.
  double mention_loss(const Vecd& mention_vec, const MentionLabel& label, Vecd& dvec) {
    const auto n = static_cast<Eigen::Index>(label.candidate_ids.size());
    Vecd logits(n + 1);
    std::vector<const Vecd*> embeds(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      embeds[static_cast<std::size_t>(i)] = &entity_embed(label.candidate_ids[static_cast<std::size_t>(i)]);
      logits(i) = mention_vec.dot(*embeds[static_cast<std::size_t>(i)]);
    }
    logits(n) = mention_vec.dot(model_.params.nil_embed);

    const auto [probs, loss] = nn::softmax_xent(logits, label.gold_index);
    const Vecd dlogits = nn::softmax_xent_backward(probs, label.gold_index);

    dvec = dlogits(n) * model_.params.nil_embed;
    for (Eigen::Index i = 0; i < n; ++i) {
      dvec += dlogits(i) * *embeds[static_cast<std::size_t>(i)];
      add_entity_grad(label.candidate_ids[static_cast<std::size_t>(i)], dlogits(i) * mention_vec);
    }
    grads_.nil_embed += dlogits(n) * mention_vec;
    return loss;
  }

 private:
  const EncoderModel& model_;
  const KbStore& kb_;
  ParamSet& grads_;
  std::map<std::string, EntityMemo> memo_;
};

}  // namespace

TrainResult train(const std::vector<Table>& corpus, const KbStore& kb,
                  const CandidateMap& candidates, const TrainConfig& config) {
  if (corpus.empty()) throw DataError("train: empty corpus");
  for (const Table& table : corpus) table.validate();

  ModelHyper hyper = config.hyper;
  hyper.seed = config.seed;
  EncoderModel model =
      EncoderModel::init(hyper, config.variant, Vocabulary::build(corpus, kb));

  const bool table_level = is_table_level(config.variant);
  struct Example {
    int table = 0;
    int row = -1;  // -1 for whole-table examples
    int col = -1;
  };
  std::vector<Example> examples;
  for (std::size_t ti = 0; ti < corpus.size(); ++ti) {
    if (table_level) {
      if (!mention_iter(corpus[ti]).empty()) {
        examples.push_back(Example{static_cast<int>(ti), -1, -1});
      }
    } else {
      for (const Mention& m : mention_iter(corpus[ti])) {
        examples.push_back(Example{static_cast<int>(ti), m.row, m.col});
      }
    }
  }
  if (examples.empty()) throw DataError("train: corpus has no mentions");

  TrainResult result;
  AdamState adam(model.params);
  ParamSet grads = ParamSet::zeros_like(model.params);
  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t batch =
      std::max<std::size_t>(1, static_cast<std::size_t>(config.batch_size));

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_mentions = 0;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      grads.set_zero();
      StepContext step(model, kb, grads);
      double step_loss = 0.0;
      std::size_t step_mentions = 0;

      const std::size_t end = std::min(order.size(), start + batch);
      for (std::size_t oi = start; oi < end; ++oi) {
        const Example& ex = examples[order[oi]];
        const Table& table = corpus[static_cast<std::size_t>(ex.table)];

        if (table_level) {
          TableEncodeCache tcache = encode_table(model, table, /*keep_cache=*/true);
          Matd dhidden = Matd::Zero(tcache.hidden.rows(), tcache.hidden.cols());
          for (const Mention& mention : mention_iter(table)) {
            const MentionLabel label = mention_label(table, mention, candidates);
            const Vecd vec = table_mention_vec(tcache, mention.row, mention.col);
            Vecd dvec;
            step_loss += step.mention_loss(vec, label, dvec);
            ++step_mentions;
            const Span span = tcache.layout.cell_spans.at(CellRef{mention.row, mention.col});
            std::vector<int> positions;
            for (int pos = span.first; pos < span.second; ++pos) positions.push_back(pos);
            nn::mean_pool_backward(dvec, positions, dhidden);
          }
          encode_table_backward(model, tcache, dhidden, grads);
        } else {
          const Mention mention{table.id, ex.row, ex.col, table.cell(ex.row, ex.col)};
          const MentionLabel label = mention_label(table, mention, candidates);
          MentionEncodeCache mcache;
          const Vecd vec =
              encode_mention(model, mention.value, cell_metadata(table, mention.col), &mcache);
          Vecd dvec;
          step_loss += step.mention_loss(vec, label, dvec);
          ++step_mentions;
          encode_mention_backward(model, mcache, dvec, grads);
        }
      }

      step.flush();
      if (step_mentions == 0) continue;
      grads.scale(1.0 / static_cast<double>(step_mentions));
      adam.step(model.params, grads, config.adam);
      epoch_loss += step_loss;
      epoch_mentions += step_mentions;
    }

    result.loss_curve.push_back(epoch_mentions == 0
                                    ? 0.0
                                    : epoch_loss / static_cast<double>(epoch_mentions));
  }

  result.model = std::move(model);
  return result;
}

namespace {

Prediction make_prediction(const Mention& mention, const std::vector<std::string>& ids,
                           const Vecd& mention_vec,
                           const std::map<std::string, Vecd>& embed_cache,
                           const Vecd& nil_embed, const PredictOptions& options) {
  Prediction pred;
  pred.table_id = mention.table_id;
  pred.row = mention.row;
  pred.col = mention.col;

  std::vector<Vecd> embeds;
  embeds.reserve(ids.size());
  for (const std::string& id : ids) embeds.push_back(embed_cache.at(id));

  if (options.nil_threshold_mode) {
    if (ids.empty()) {
      pred.entity.reset();
      pred.prob = 1.0;
      pred.candidate_probs = {1.0};
      return pred;
    }
    Vecd logits(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      logits(static_cast<Eigen::Index>(i)) = mention_vec.dot(embeds[i]);
    }
    const Vecd probs = nn::softmax_stable(logits);
    int best = 0;
    for (Eigen::Index i = 1; i < probs.size(); ++i) {
      if (probs(i) > probs(best)) best = static_cast<int>(i);
    }
    pred.candidate_probs.assign(probs.data(), probs.data() + probs.size());
    pred.prob = probs(best);
    if (probs(best) >= options.nil_threshold) {
      pred.entity = ids[static_cast<std::size_t>(best)];
    }
    return pred;
  }

  const ScoredCandidates scored = score_candidates(mention_vec, embeds, nil_embed);
  pred.candidate_probs.assign(scored.probs.data(), scored.probs.data() + scored.probs.size());
  pred.prob = scored.probs(scored.best);
  if (scored.best < static_cast<int>(ids.size())) {
    pred.entity = ids[static_cast<std::size_t>(scored.best)];
  }
  return pred;
}

}  // namespace

PredictResult predict(const std::vector<Table>& tables, const EncoderModel& model,
                      const KbStore& kb, const CandidateMap& candidates,
                      const PredictOptions& options) {
  PredictResult result;

  // Pre-pass: encode each unique candidate entity once.
  std::set<std::string> unique_ids;
  std::size_t references = 0;
  for (const Table& table : tables) {
    for (const Mention& mention : mention_iter(table)) {
      const auto it = candidates.find(mention_key(mention));
      if (it == candidates.end()) continue;
      for (const Candidate& c : it->second.candidates) {
        unique_ids.insert(c.id);
        ++references;
      }
    }
  }
  std::map<std::string, Vecd> embed_cache;
  for (const std::string& id : unique_ids) {
    const Entity* entity = kb.find(id);
    if (entity == nullptr) throw DataError("predict: candidate entity " + id + " not in KB");
    embed_cache.emplace(id, encode_entity(model, *entity));
  }
  result.entity_cache_size = unique_ids.size();
  result.entity_cache_hits = references - unique_ids.size();

  const bool table_level = is_table_level(model.variant);
  for (const Table& table : tables) {
    TableEncodeCache tcache;
    if (table_level) tcache = encode_table(model, table, /*keep_cache=*/false);
    for (const Mention& mention : mention_iter(table)) {
      std::vector<std::string> ids;
      const auto it = candidates.find(mention_key(mention));
      if (it != candidates.end()) {
        for (const Candidate& c : it->second.candidates) ids.push_back(c.id);
      }
      const Vecd vec = table_level
                           ? table_mention_vec(tcache, mention.row, mention.col)
                           : encode_mention(model, mention.value,
                                            cell_metadata(table, mention.col));
      result.predictions.push_back(
          make_prediction(mention, ids, vec, embed_cache, model.params.nil_embed, options));
    }
  }
  return result;
}

}  // namespace tell
