#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tell/kb.hpp"
#include "tell/nn/model.hpp"
#include "tell/nn/ops.hpp"
#include "tell/table.hpp"
#include "tell/variant.hpp"

namespace tell {

struct TokenSeq {
  std::vector<int> ids;
  std::vector<Segment> segs;

  int size() const { return static_cast<int>(ids.size()); }
  void push(int id, Segment seg) {
    ids.push_back(id);
    segs.push_back(seg);
  }
};

/// What each token position of a table linearization came from.
struct TokenSource {
  enum class Kind { Cell, Header, Caption, Title };
  Kind kind = Kind::Cell;
  int row = -1;
  int col = -1;
};

using Span = std::pair<int, int>;  // [begin, end)

/// Table linearization: caption, page title, headers left to right, cells
/// row-major; empty texts contribute no tokens.
struct TableLayout {
  TokenSeq seq;
  std::vector<TokenSource> sources;
  std::map<CellRef, Span> cell_spans;  // non-empty cells only
};

struct CellMetadata {
  std::string header;
  std::string caption;
  std::string title;
};

CellMetadata cell_metadata(const Table& table, int col);

/// Cell tokens only (UNK placeholder when the text has no tokens).
TokenSeq build_cell_seq(const Vocabulary& vocab, const std::string& cell_text, int max_seq_len,
                        Span* cell_span = nullptr);

/// cell SEP header SEP caption SEP title. Separators always present. When the
/// budget is tight, page-title tokens go first, then caption, then header;
/// the cell value is never truncated below the budget minus separators.
TokenSeq build_tell_seq(const Vocabulary& vocab, const std::string& cell_text,
                        const CellMetadata& meta, int max_seq_len, Span* cell_span = nullptr);

/// Throws DataError when the linearization exceeds the budget.
TableLayout build_table_layout(const Vocabulary& vocab, const Table& table, bool with_meta,
                               int budget);

/// Visibility rule: a cell token attends tokens of the same cell, same row and
/// same column, its own column header, all caption and all page-title tokens.
/// Metadata tokens attend every position.
MaskArray build_structural_mask(const Table& table, const TableLayout& layout);

long mask_pair_count(const MaskArray& mask);

// ---------------------------------------------------------------------------
// Shared transformer encoder over a token sequence
// ---------------------------------------------------------------------------

struct SeqEncodeCache {
  TokenSeq seq;
  Matd x0;
  std::vector<nn::TransformerLayerCache<double>> layers;
};

Matd embed_seq(const EncoderModel& model, const TokenSeq& seq);
void embed_backward(const EncoderModel& model, const TokenSeq& seq, const Matd& dx0,
                    ParamSet& grads);

Matd encode_seq(const EncoderModel& model, const TokenSeq& seq, const MaskArray* mask,
                SeqEncodeCache* cache, nn::TensorMeter* meter = nullptr);
void encode_seq_backward(const EncoderModel& model, const SeqEncodeCache& cache, const Matd& dh,
                         ParamSet& grads);

// ---------------------------------------------------------------------------
// Entity encoder: mean-pooled encoded name plus mean-pooled encoded
// description; an empty description contributes the zero vector.
// ---------------------------------------------------------------------------

struct EntityEncodeCache {
  SeqEncodeCache name;
  SeqEncodeCache desc;
  bool has_desc = false;
};

Vecd encode_entity(const EncoderModel& model, const Entity& entity,
                   EntityEncodeCache* cache = nullptr);
void encode_entity_backward(const EncoderModel& model, const EntityEncodeCache& cache,
                            const Vecd& dvec, ParamSet& grads);

// ---------------------------------------------------------------------------
// Per-cell mention encoders (Single, Tell, LinearMeta, LstmMeta)
// ---------------------------------------------------------------------------

struct MentionEncodeCache {
  Variant variant = Variant::Single;
  TokenSeq seq;
  Span cell_span{0, 0};
  SeqEncodeCache trans;            // Single / Tell
  Matd x0;                         // LinearMeta / LstmMeta input embeddings
  Vecd mean;                       // LinearMeta pre-projection mean
  nn::LstmCache<double> lstm;      // LstmMeta
};

Vecd encode_mention(const EncoderModel& model, const std::string& cell_text,
                    const CellMetadata& meta, MentionEncodeCache* cache = nullptr,
                    nn::TensorMeter* meter = nullptr);
void encode_mention_backward(const EncoderModel& model, const MentionEncodeCache& cache,
                             const Vecd& dvec, ParamSet& grads);

// ---------------------------------------------------------------------------
// Table-level encoders (AllAtt, AllAttMeta, MaskAttMeta)
// ---------------------------------------------------------------------------

struct TableEncodeCache {
  TableLayout layout;
  MaskArray mask;  // zero-sized when unmasked
  SeqEncodeCache seq;
  Matd hidden;
};

TableEncodeCache encode_table(const EncoderModel& model, const Table& table, bool keep_cache,
                              nn::TensorMeter* meter = nullptr);
Vecd table_mention_vec(const TableEncodeCache& cache, int row, int col);
void encode_table_backward(const EncoderModel& model, const TableEncodeCache& cache,
                           const Matd& dhidden, ParamSet& grads);

}  // namespace tell
