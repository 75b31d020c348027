#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tell/kb.hpp"
#include "tell/nn/model.hpp"
#include "tell/prediction.hpp"
#include "tell/table.hpp"
#include "tell/variant.hpp"

namespace tell {

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct_link = 0;  // predicted == gold, both non-NIL
  std::size_t wrong_link = 0;    // both non-NIL, mismatch
  std::size_t false_link = 0;    // predicted non-NIL, gold NIL
  std::size_t false_nil = 0;     // predicted NIL, gold non-NIL
  std::size_t correct_nil = 0;
  double accuracy = 0.0;             // NIL == NIL counts as correct
  double accuracy_links_only = 0.0;  // over gold-linked mentions only
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // micro link-F1, NIL as the negative class
  double nil_recall = 0.0;
  std::optional<double> macro_f1;
  std::optional<double> p_e;

  std::string to_json_string() const;
};

/// Errors when the prediction set does not cover exactly the corpus mentions.
EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Table>& tables,
                    bool with_macro_f1 = false);

double accuracy(const std::vector<Prediction>& predictions, const std::vector<Table>& tables);
double f1(const std::vector<Prediction>& predictions, const std::vector<Table>& tables);

// ---------------------------------------------------------------------------
// Synthetic corpus: the desk-scale stand-in for web-table dumps
// ---------------------------------------------------------------------------

struct SynthSpec {
  int tables = 50;
  int eval_tables = 0;  // held-out split sharing the same KB
  int rows = 4;
  int cols = 2;
  /// Mentions whose surface form names two entities, resolvable only through
  /// the column header topic.
  double ambiguous_frac = 0.0;
  /// Mentions carrying a token-level corruption of the entity name (dropped
  /// second token): exact gazetteer lookup misses, BM25 recovers.
  double misspelled_frac = 0.0;
  double nil_frac = 0.0;
  int topics = 4;
};

struct SynthCorpus {
  std::vector<Table> tables;
  std::vector<Table> eval_tables;
  std::vector<Entity> kb;
};

SynthCorpus make_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Complexity probe: attention-pair counts and peak live tensor elements over
// growing single-column tables (fixed schema, growing rows)
// ---------------------------------------------------------------------------

struct ScalingPoint {
  int n_cells = 0;
  long attn_pairs = 0;
  long peak_tensor_elems = 0;
  long per_cell_peak = 0;  // per-cell variants: peak while encoding one cell
  double wall_seconds = 0.0;
  bool out_of_budget = false;
};

struct ScalingReport {
  Variant variant = Variant::Tell;
  std::vector<ScalingPoint> points;
  double slope = 0.0;  // log-log least-squares fit of attn_pairs vs n

  std::string to_json_string() const;
};

/// Deterministic single-column probe table with n one-token cells and empty
/// metadata.
Table make_probe_table(int n_cells);

/// Model sized for the probe corpus (small d, vocabulary covering all sizes).
EncoderModel make_probe_model(const std::vector<int>& sizes, int d = 16, int layers = 2,
                              int heads = 2, std::uint64_t seed = 7);

/// One forward pass per size; pair counting follows the variant kind: sum of
/// true mask entries for table-level variants, sum of per-cell sequence
/// lengths squared for per-cell variants. Out-of-budget sizes are recorded
/// and excluded from the fit.
ScalingReport complexity_probe(const EncoderModel& model, Variant variant,
                               const std::vector<int>& sizes);

double loglog_slope(const std::vector<std::pair<double, double>>& points);

std::string scaling_svg(const std::vector<ScalingReport>& reports);

}  // namespace tell
