#include "tell/encoders.hpp"

#include <algorithm>

namespace tell {

CellMetadata cell_metadata(const Table& table, int col) {
  if (col < 0 || col >= table.cols()) {
    throw DataError("cell_metadata: column " + std::to_string(col) + " out of bounds");
  }
  return CellMetadata{table.headers[static_cast<std::size_t>(col)], table.caption,
                      table.page_title};
}

TokenSeq build_cell_seq(const Vocabulary& vocab, const std::string& cell_text, int max_seq_len,
                        Span* cell_span) {
  std::vector<int> ids = vocab.encode(cell_text);
  if (ids.empty()) ids.push_back(Vocabulary::kUnk);  // keep encoding total
  if (static_cast<int>(ids.size()) > max_seq_len) ids.resize(static_cast<std::size_t>(max_seq_len));
  TokenSeq seq;
  for (int id : ids) seq.push(id, Segment::Cell);
  if (cell_span != nullptr) *cell_span = Span{0, seq.size()};
  return seq;
}

TokenSeq build_tell_seq(const Vocabulary& vocab, const std::string& cell_text,
                        const CellMetadata& meta, int max_seq_len, Span* cell_span) {
  constexpr int kSeparators = 3;
  if (max_seq_len <= kSeparators) throw UsageError("build_tell_seq: max_seq_len too small");

  std::vector<int> cell = vocab.encode(cell_text);
  if (cell.empty()) cell.push_back(Vocabulary::kUnk);
  const int cell_budget = max_seq_len - kSeparators;
  if (static_cast<int>(cell.size()) > cell_budget) {
    cell.resize(static_cast<std::size_t>(cell_budget));
  }

  // Remaining budget goes header first, caption second, page title last, so
  // tight budgets truncate the title before the caption before the header.
  int remaining = max_seq_len - kSeparators - static_cast<int>(cell.size());
  auto take = [&](const std::string& text) {
    std::vector<int> ids = vocab.encode(text);
    if (static_cast<int>(ids.size()) > remaining) {
      ids.resize(static_cast<std::size_t>(std::max(remaining, 0)));
    }
    remaining -= static_cast<int>(ids.size());
    return ids;
  };
  const std::vector<int> header = take(meta.header);
  const std::vector<int> caption = take(meta.caption);
  const std::vector<int> title = take(meta.title);

  TokenSeq seq;
  for (int id : cell) seq.push(id, Segment::Cell);
  if (cell_span != nullptr) *cell_span = Span{0, seq.size()};
  seq.push(Vocabulary::kSep, Segment::Sep);
  for (int id : header) seq.push(id, Segment::Header);
  seq.push(Vocabulary::kSep, Segment::Sep);
  for (int id : caption) seq.push(id, Segment::Caption);
  seq.push(Vocabulary::kSep, Segment::Sep);
  for (int id : title) seq.push(id, Segment::Title);
  return seq;
}

TableLayout build_table_layout(const Vocabulary& vocab, const Table& table, bool with_meta,
                               int budget) {
  TableLayout layout;
  auto append = [&](const std::string& text, Segment seg, TokenSource source) {
    for (int id : vocab.encode(text)) {
      layout.seq.push(id, seg);
      layout.sources.push_back(source);
    }
  };
  if (with_meta) {
    append(table.caption, Segment::Caption, TokenSource{TokenSource::Kind::Caption, -1, -1});
    append(table.page_title, Segment::Title, TokenSource{TokenSource::Kind::Title, -1, -1});
    for (int j = 0; j < table.cols(); ++j) {
      append(table.headers[static_cast<std::size_t>(j)], Segment::Header,
             TokenSource{TokenSource::Kind::Header, -1, j});
    }
  }
  for (int i = 0; i < table.rows(); ++i) {
    for (int j = 0; j < table.cols(); ++j) {
      const std::string& cell = table.cell(i, j);
      if (cell.empty()) continue;
      const int begin = layout.seq.size();
      append(cell, Segment::Cell, TokenSource{TokenSource::Kind::Cell, i, j});
      int end = layout.seq.size();
      if (end == begin) {
        // Cell text with no alphanumeric tokens still counts as a mention.
        layout.seq.push(Vocabulary::kUnk, Segment::Cell);
        layout.sources.push_back(TokenSource{TokenSource::Kind::Cell, i, j});
        end = layout.seq.size();
      }
      layout.cell_spans[CellRef{i, j}] = Span{begin, end};
    }
  }
  if (layout.seq.size() > budget) {
    throw DataError("table " + table.id + ": linearization length " +
                    std::to_string(layout.seq.size()) + " exceeds budget " +
                    std::to_string(budget));
  }
  return layout;
}

MaskArray build_structural_mask(const Table& table, const TableLayout& layout) {
  const int len = layout.seq.size();
  if (static_cast<int>(layout.sources.size()) != len) {
    throw DataError("structural mask: layout inconsistent for table " + table.id);
  }
  MaskArray mask(len, len);
  for (int q = 0; q < len; ++q) {
    const TokenSource& src = layout.sources[static_cast<std::size_t>(q)];
    if (src.kind != TokenSource::Kind::Cell) {
      mask.row(q).setConstant(true);  // metadata attends everything
      continue;
    }
    for (int k = 0; k < len; ++k) {
      const TokenSource& dst = layout.sources[static_cast<std::size_t>(k)];
      bool visible = false;
      switch (dst.kind) {
        case TokenSource::Kind::Cell:
          visible = dst.row == src.row || dst.col == src.col;
          break;
        case TokenSource::Kind::Header:
          visible = dst.col == src.col;
          break;
        case TokenSource::Kind::Caption:
        case TokenSource::Kind::Title:
          visible = true;
          break;
      }
      mask(q, k) = visible;
    }
  }
  return mask;
}

long mask_pair_count(const MaskArray& mask) {
  long count = 0;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      if (mask(r, c)) ++count;
    }
  }
  return count;
}

Matd embed_seq(const EncoderModel& model, const TokenSeq& seq) {
  const int len = seq.size();
  if (len == 0) throw InternalError("embed_seq: empty sequence");
  if (len > model.params.pos_embed.rows()) {
    throw DataError("embed_seq: sequence length " + std::to_string(len) +
                    " exceeds positional table");
  }
  Matd x(len, model.hyper.d);
  for (int i = 0; i < len; ++i) {
    const int id = seq.ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= model.vocab.size()) throw InternalError("embed_seq: token id out of range");
    x.row(i) = model.params.tok_embed.row(id) + model.params.pos_embed.row(i) +
               model.params.seg_embed.row(static_cast<int>(seq.segs[static_cast<std::size_t>(i)]));
  }
  return x;
}

void embed_backward(const EncoderModel& model, const TokenSeq& seq, const Matd& dx0,
                    ParamSet& grads) {
  (void)model;
  for (int i = 0; i < seq.size(); ++i) {
    grads.tok_embed.row(seq.ids[static_cast<std::size_t>(i)]) += dx0.row(i);
    grads.pos_embed.row(i) += dx0.row(i);
    grads.seg_embed.row(static_cast<int>(seq.segs[static_cast<std::size_t>(i)])) += dx0.row(i);
  }
}

Matd encode_seq(const EncoderModel& model, const TokenSeq& seq, const MaskArray* mask,
                SeqEncodeCache* cache, nn::TensorMeter* meter) {
  Matd h = embed_seq(model, seq);
  if (meter != nullptr) meter->alloc(h.size());
  if (cache != nullptr) {
    cache->seq = seq;
    cache->x0 = h;
    cache->layers.clear();
    cache->layers.resize(model.params.layers.size());
  }
  for (std::size_t i = 0; i < model.params.layers.size(); ++i) {
    h = nn::transformer_layer_forward(h, model.params.layers[i], mask, model.hyper.heads,
                                      cache != nullptr ? &cache->layers[i] : nullptr, meter);
  }
  if (meter != nullptr) meter->release(h.size());
  return h;
}

void encode_seq_backward(const EncoderModel& model, const SeqEncodeCache& cache, const Matd& dh,
                         ParamSet& grads) {
  Matd grad = dh;
  for (std::size_t i = model.params.layers.size(); i-- > 0;) {
    grad = nn::transformer_layer_backward(cache.layers[i], model.params.layers[i], grad,
                                          grads.layers[i]);
  }
  embed_backward(model, cache.seq, grad, grads);
}

namespace {

TokenSeq build_text_seq(const Vocabulary& vocab, const std::string& text, Segment seg,
                        int max_seq_len) {
  std::vector<int> ids = vocab.encode(text);
  if (static_cast<int>(ids.size()) > max_seq_len) ids.resize(static_cast<std::size_t>(max_seq_len));
  TokenSeq seq;
  for (int id : ids) seq.push(id, seg);
  return seq;
}

std::vector<int> span_positions(Span span) {
  std::vector<int> positions;
  positions.reserve(static_cast<std::size_t>(span.second - span.first));
  for (int i = span.first; i < span.second; ++i) positions.push_back(i);
  return positions;
}

}  // namespace

Vecd encode_entity(const EncoderModel& model, const Entity& entity, EntityEncodeCache* cache) {
  const TokenSeq name_seq =
      build_text_seq(model.vocab, entity.name, Segment::Name, model.hyper.max_seq_len);
  if (name_seq.size() == 0) {
    throw DataError("encode_entity: entity " + entity.id + " has no name tokens");
  }
  const Matd name_h =
      encode_seq(model, name_seq, nullptr, cache != nullptr ? &cache->name : nullptr);
  Vecd e = name_h.colwise().mean().transpose();

  const TokenSeq desc_seq =
      build_text_seq(model.vocab, entity.description, Segment::Desc, model.hyper.max_seq_len);
  const bool has_desc = desc_seq.size() > 0;
  if (has_desc) {
    const Matd desc_h =
        encode_seq(model, desc_seq, nullptr, cache != nullptr ? &cache->desc : nullptr);
    e += desc_h.colwise().mean().transpose();
  }
  if (cache != nullptr) cache->has_desc = has_desc;
  return e;
}

void encode_entity_backward(const EncoderModel& model, const EntityEncodeCache& cache,
                            const Vecd& dvec, ParamSet& grads) {
  {
    const Eigen::Index len = cache.name.x0.rows();
    Matd dh = Matd::Zero(len, dvec.size());
    dh.rowwise() = (dvec / static_cast<double>(len)).transpose();
    encode_seq_backward(model, cache.name, dh, grads);
  }
  if (cache.has_desc) {
    const Eigen::Index len = cache.desc.x0.rows();
    Matd dh = Matd::Zero(len, dvec.size());
    dh.rowwise() = (dvec / static_cast<double>(len)).transpose();
    encode_seq_backward(model, cache.desc, dh, grads);
  }
}

Vecd encode_mention(const EncoderModel& model, const std::string& cell_text,
                    const CellMetadata& meta, MentionEncodeCache* cache, nn::TensorMeter* meter) {
  const Variant variant = model.variant;
  if (is_table_level(variant)) {
    throw InternalError("encode_mention: table-level variant, use encode_table");
  }
  Span cell_span{0, 0};
  TokenSeq seq;
  if (variant == Variant::Single) {
    seq = build_cell_seq(model.vocab, cell_text, model.hyper.max_seq_len, &cell_span);
  } else {
    seq = build_tell_seq(model.vocab, cell_text, meta, model.hyper.max_seq_len, &cell_span);
  }
  if (cache != nullptr) {
    cache->variant = variant;
    cache->seq = seq;
    cache->cell_span = cell_span;
  }

  switch (variant) {
    case Variant::Single:
    case Variant::Tell: {
      const Matd h =
          encode_seq(model, seq, nullptr, cache != nullptr ? &cache->trans : nullptr, meter);
      return nn::mean_pool(h, span_positions(cell_span));
    }
    case Variant::LinearMeta: {
      const Matd x0 = embed_seq(model, seq);
      if (meter != nullptr) {
        meter->alloc(x0.size());
        meter->release(x0.size());
      }
      const Vecd mean = x0.colwise().mean().transpose();
      if (cache != nullptr) {
        cache->x0 = x0;
        cache->mean = mean;
      }
      return model.params.linear_w.transpose() * mean + model.params.linear_b;
    }
    case Variant::LstmMeta: {
      const Matd x0 = embed_seq(model, seq);
      if (meter != nullptr) meter->alloc(x0.size());
      Vecd h = nn::lstm_forward(x0, model.params.lstm,
                                cache != nullptr ? &cache->lstm : nullptr, meter);
      if (cache != nullptr) cache->x0 = x0;
      if (meter != nullptr) meter->release(x0.size());
      return h;
    }
    default:
      throw InternalError("encode_mention: unhandled variant");
  }
}

void encode_mention_backward(const EncoderModel& model, const MentionEncodeCache& cache,
                             const Vecd& dvec, ParamSet& grads) {
  switch (cache.variant) {
    case Variant::Single:
    case Variant::Tell: {
      Matd dh = Matd::Zero(cache.seq.size(), dvec.size());
      nn::mean_pool_backward(dvec, span_positions(cache.cell_span), dh);
      encode_seq_backward(model, cache.trans, dh, grads);
      return;
    }
    case Variant::LinearMeta: {
      grads.linear_w += cache.mean * dvec.transpose();
      grads.linear_b += dvec;
      const Vecd dmean = model.params.linear_w * dvec;
      Matd dx0(cache.x0.rows(), cache.x0.cols());
      dx0.rowwise() = (dmean / static_cast<double>(cache.x0.rows())).transpose();
      embed_backward(model, cache.seq, dx0, grads);
      return;
    }
    case Variant::LstmMeta: {
      const Matd dx0 = nn::lstm_backward(cache.lstm, model.params.lstm, dvec, grads.lstm);
      embed_backward(model, cache.seq, dx0, grads);
      return;
    }
    default:
      throw InternalError("encode_mention_backward: unhandled variant");
  }
}

TableEncodeCache encode_table(const EncoderModel& model, const Table& table, bool keep_cache,
                              nn::TensorMeter* meter) {
  if (!is_table_level(model.variant)) {
    throw InternalError("encode_table: per-cell variant, use encode_mention");
  }
  TableEncodeCache out;
  out.layout = build_table_layout(model.vocab, table, uses_metadata(model.variant),
                                  model.hyper.max_table_len);
  const MaskArray* mask = nullptr;
  if (model.variant == Variant::MaskAttMeta) {
    out.mask = build_structural_mask(table, out.layout);
    mask = &out.mask;
  }
  out.hidden =
      encode_seq(model, out.layout.seq, mask, keep_cache ? &out.seq : nullptr, meter);
  return out;
}

Vecd table_mention_vec(const TableEncodeCache& cache, int row, int col) {
  const auto it = cache.layout.cell_spans.find(CellRef{row, col});
  if (it == cache.layout.cell_spans.end()) {
    throw InternalError("table_mention_vec: no span for cell (" + std::to_string(row) + "," +
                        std::to_string(col) + ")");
  }
  return nn::mean_pool(cache.hidden, span_positions(it->second));
}

void encode_table_backward(const EncoderModel& model, const TableEncodeCache& cache,
                           const Matd& dhidden, ParamSet& grads) {
  encode_seq_backward(model, cache.seq, dhidden, grads);
}

}  // namespace tell
