#pragma once

#include <string>

namespace tell {

/// Mention-encoder ablation variants. Config strings follow the common
/// ablation naming: MaskAttEnc+meta, SingleAttEnc+meta (alias TELL),
/// AllAttEnc+meta, SingleLinearEnc+meta, SingleAttEnc (alias baseline),
/// AllAttEnc, SingleLSTMEnc+meta.
enum class Variant {
  Single,       // SingleAttEnc: cell tokens only, per-cell transformer
  Tell,         // SingleAttEnc+meta: cell + header + caption + title, per cell
  AllAtt,       // AllAttEnc: whole table, full attention
  AllAttMeta,   // AllAttEnc+meta
  MaskAttMeta,  // MaskAttEnc+meta: whole table + metadata, structural mask
  LinearMeta,   // SingleLinearEnc+meta: embedding average + linear layer
  LstmMeta,     // SingleLSTMEnc+meta: LSTM final state
};

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// Table-level variants encode the whole table in one pass.
inline bool is_table_level(Variant v) {
  return v == Variant::AllAtt || v == Variant::AllAttMeta || v == Variant::MaskAttMeta;
}

/// True when the mention sequence includes header/caption/title.
inline bool uses_metadata(Variant v) { return v != Variant::Single && v != Variant::AllAtt; }

}  // namespace tell
