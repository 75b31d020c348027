#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tell/common.hpp"
#include "tell/kb.hpp"
#include "tell/nn/ops.hpp"
#include "tell/table.hpp"
#include "tell/variant.hpp"

namespace tell {

/// Input-source tag per token; each gets its own learned embedding row.
enum class Segment : int {
  Cell = 0,
  Header = 1,
  Caption = 2,
  Title = 3,
  Name = 4,
  Desc = 5,
  Sep = 6,
};
inline constexpr int kSegmentCount = 7;

/// Whitespace/punctuation word tokenizer with reserved PAD/UNK/SEP ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);  // full list incl. reserved

  /// Deterministic: reserved ids then corpus+KB tokens sorted lexicographically.
  static Vocabulary build(const std::vector<Table>& corpus, const KbStore& kb);
  static Vocabulary build_from_texts(const std::vector<std::string>& texts);

  int id(const std::string& token) const;  // kUnk when absent
  std::vector<int> encode(const std::string& text) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct ModelHyper {
  int d = 64;
  int layers = 2;
  int heads = 4;
  int ffn_mult = 4;
  int max_seq_len = 64;    // per-cell sequence budget
  int max_table_len = 512;  // table-level linearization budget
  std::uint64_t seed = 42;
};

/// Every trainable tensor. Doubles as the gradient/optimizer-state container,
/// so the visiting order below is the single source of truth for parameter
/// enumeration (Adam, checkpoints, gradient checks).
struct ParamSet {
  Matd tok_embed;  // V x d
  Matd pos_embed;  // max(max_seq_len, max_table_len) x d
  Matd seg_embed;  // kSegmentCount x d
  std::vector<nn::TransformerLayerParams<double>> layers;
  nn::LstmParams<double> lstm;
  Matd linear_w;  // d x d
  Vecd linear_b;  // d
  Vecd nil_embed;  // d

  static ParamSet zeros_like(const ParamSet& other);
  void set_zero();
  void scale(double factor);
};

struct TensorView {
  std::string name;
  double* data = nullptr;
  Eigen::Index size = 0;
};

/// Fixed deterministic enumeration of every tensor in the set.
std::vector<TensorView> tensor_views(ParamSet& params);

struct EncoderModel {
  ModelHyper hyper;
  Variant variant = Variant::Tell;
  Vocabulary vocab;
  ParamSet params;

  static EncoderModel init(const ModelHyper& hyper, Variant variant, Vocabulary vocab);

  void save(const std::string& path) const;
  static EncoderModel load(const std::string& path);
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam over the full ParamSet. Deterministic: no stochastic state.
class AdamState {
 public:
  explicit AdamState(const ParamSet& params);

  void step(ParamSet& params, ParamSet& grads, const AdamConfig& config);
  long step_count() const { return step_; }

 private:
  ParamSet m_, v_;
  long step_ = 0;
};

}  // namespace tell
