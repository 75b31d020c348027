#include "tell/nn/model.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "tell/text.hpp"

namespace tell {

using nlohmann::json;

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<pad>", "<unk>", "<sep>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 3) throw InternalError("vocabulary: missing reserved tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
}

Vocabulary Vocabulary::build_from_texts(const std::vector<std::string>& texts) {
  std::set<std::string> unique;
  for (const std::string& text : texts) {
    for (std::string& token : tokenize(text)) unique.insert(std::move(token));
  }
  std::vector<std::string> tokens{"<pad>", "<unk>", "<sep>"};
  tokens.insert(tokens.end(), unique.begin(), unique.end());
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::build(const std::vector<Table>& corpus, const KbStore& kb) {
  std::vector<std::string> texts;
  for (const Table& t : corpus) {
    texts.push_back(t.page_title);
    texts.push_back(t.caption);
    for (const std::string& h : t.headers) texts.push_back(h);
    for (const auto& row : t.cells) {
      for (const std::string& cell : row) texts.push_back(cell);
    }
  }
  for (const Entity& e : kb.entities()) {
    texts.push_back(e.name);
    texts.push_back(e.description);
    for (const std::string& a : e.aliases) texts.push_back(a);
  }
  return build_from_texts(texts);
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& token : tokenize(text)) ids.push_back(id(token));
  return ids;
}

ParamSet ParamSet::zeros_like(const ParamSet& other) {
  ParamSet out = other;
  out.set_zero();
  return out;
}

void ParamSet::set_zero() {
  for (TensorView& view : tensor_views(*this)) {
    Eigen::Map<Eigen::ArrayXd>(view.data, view.size).setZero();
  }
}

void ParamSet::scale(double factor) {
  for (TensorView& view : tensor_views(*this)) {
    Eigen::Map<Eigen::ArrayXd>(view.data, view.size) *= factor;
  }
}

std::vector<TensorView> tensor_views(ParamSet& p) {
  std::vector<TensorView> views;
  auto add_mat = [&](const std::string& name, Matd& m) {
    views.push_back(TensorView{name, m.data(), m.size()});
  };
  auto add_vec = [&](const std::string& name, Vecd& v) {
    views.push_back(TensorView{name, v.data(), v.size()});
  };
  add_mat("tok_embed", p.tok_embed);
  add_mat("pos_embed", p.pos_embed);
  add_mat("seg_embed", p.seg_embed);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + ".";
    auto& l = p.layers[i];
    add_mat(prefix + "attn.wq", l.attn.wq);
    add_vec(prefix + "attn.bq", l.attn.bq);
    add_mat(prefix + "attn.wk", l.attn.wk);
    add_vec(prefix + "attn.bk", l.attn.bk);
    add_mat(prefix + "attn.wv", l.attn.wv);
    add_vec(prefix + "attn.bv", l.attn.bv);
    add_mat(prefix + "attn.wo", l.attn.wo);
    add_vec(prefix + "attn.bo", l.attn.bo);
    add_vec(prefix + "ln1.gamma", l.ln1.gamma);
    add_vec(prefix + "ln1.beta", l.ln1.beta);
    add_mat(prefix + "ffn.w1", l.ffn.w1);
    add_vec(prefix + "ffn.b1", l.ffn.b1);
    add_mat(prefix + "ffn.w2", l.ffn.w2);
    add_vec(prefix + "ffn.b2", l.ffn.b2);
    add_vec(prefix + "ln2.gamma", l.ln2.gamma);
    add_vec(prefix + "ln2.beta", l.ln2.beta);
  }
  add_mat("lstm.wx", p.lstm.wx);
  add_mat("lstm.wh", p.lstm.wh);
  add_vec("lstm.b", p.lstm.b);
  add_mat("linear_w", p.linear_w);
  add_vec("linear_b", p.linear_b);
  add_vec("nil_embed", p.nil_embed);
  return views;
}

EncoderModel EncoderModel::init(const ModelHyper& hyper, Variant variant, Vocabulary vocab) {
  if (hyper.d <= 0 || hyper.layers <= 0 || hyper.heads <= 0) {
    throw UsageError("model: d, layers and heads must be positive");
  }
  if (hyper.d % hyper.heads != 0) throw UsageError("model: heads must divide d");

  EncoderModel model;
  model.hyper = hyper;
  model.variant = variant;
  model.vocab = std::move(vocab);

  const int d = hyper.d;
  const int f = hyper.ffn_mult * d;
  const int pos_rows = std::max(hyper.max_seq_len, hyper.max_table_len);
  ParamSet& p = model.params;
  p.tok_embed.resize(model.vocab.size(), d);
  p.pos_embed.resize(pos_rows, d);
  p.seg_embed.resize(kSegmentCount, d);
  p.layers.resize(static_cast<std::size_t>(hyper.layers));
  for (auto& l : p.layers) {
    l.attn.wq.resize(d, d);
    l.attn.wk.resize(d, d);
    l.attn.wv.resize(d, d);
    l.attn.wo.resize(d, d);
    l.attn.bq.resize(d);
    l.attn.bk.resize(d);
    l.attn.bv.resize(d);
    l.attn.bo.resize(d);
    l.ln1.gamma.resize(d);
    l.ln1.beta.resize(d);
    l.ffn.w1.resize(d, f);
    l.ffn.b1.resize(f);
    l.ffn.w2.resize(f, d);
    l.ffn.b2.resize(d);
    l.ln2.gamma.resize(d);
    l.ln2.beta.resize(d);
  }
  p.lstm.wx.resize(d, 4 * d);
  p.lstm.wh.resize(d, 4 * d);
  p.lstm.b.resize(4 * d);
  p.linear_w.resize(d, d);
  p.linear_b.resize(d);
  p.nil_embed.resize(d);

  // Fill every tensor from the seeded stream in enumeration order, then pin
  // the structural initializations (zero biases, unit layer-norm gains,
  // positive LSTM forget bias).
  Rng rng(hyper.seed);
  constexpr double kInitScale = 0.02;
  for (TensorView& view : tensor_views(p)) {
    Eigen::Map<Eigen::ArrayXd> map(view.data, view.size);
    for (Eigen::Index i = 0; i < view.size; ++i) map(i) = rng.normal() * kInitScale;
  }
  for (auto& l : p.layers) {
    l.attn.bq.setZero();
    l.attn.bk.setZero();
    l.attn.bv.setZero();
    l.attn.bo.setZero();
    l.ln1.gamma.setOnes();
    l.ln1.beta.setZero();
    l.ffn.b1.setZero();
    l.ffn.b2.setZero();
    l.ln2.gamma.setOnes();
    l.ln2.beta.setZero();
  }
  p.lstm.b.setZero();
  p.lstm.b.segment(d, d).setOnes();  // forget gate bias
  p.linear_b.setZero();
  return model;
}

namespace {

json hyper_to_json(const ModelHyper& h) {
  return json{{"d", h.d},
              {"layers", h.layers},
              {"heads", h.heads},
              {"ffn_mult", h.ffn_mult},
              {"max_seq_len", h.max_seq_len},
              {"max_table_len", h.max_table_len},
              {"seed", h.seed}};
}

ModelHyper hyper_from_json(const json& j) {
  ModelHyper h;
  h.d = j.at("d").get<int>();
  h.layers = j.at("layers").get<int>();
  h.heads = j.at("heads").get<int>();
  h.ffn_mult = j.at("ffn_mult").get<int>();
  h.max_seq_len = j.at("max_seq_len").get<int>();
  h.max_table_len = j.at("max_table_len").get<int>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

}  // namespace

void EncoderModel::save(const std::string& path) const {
  json tensors = json::object();
  // tensor_views needs mutable access; serialization copies the values.
  ParamSet copy = params;
  for (TensorView& view : tensor_views(copy)) {
    tensors[view.name] = std::vector<double>(view.data, view.data + view.size);
  }
  const json j{{"format", "tell-checkpoint"},
               {"version", 1},
               {"hyper", hyper_to_json(hyper)},
               {"variant", variant_name(variant)},
               {"vocab", vocab.tokens()},
               {"tensors", std::move(tensors)}};
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out << j.dump() << "\n";
}

EncoderModel EncoderModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint: " + path + ": " + std::string(e.what()));
  }
  if (j.value("format", "") != "tell-checkpoint" || j.value("version", 0) != 1) {
    throw DataError("checkpoint: " + path + ": unsupported format/version");
  }
  EncoderModel model = init(hyper_from_json(j.at("hyper")),
                            parse_variant(j.at("variant").get<std::string>()),
                            Vocabulary(j.at("vocab").get<std::vector<std::string>>()));
  const json& tensors = j.at("tensors");
  for (TensorView& view : tensor_views(model.params)) {
    const auto values = tensors.at(view.name).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != view.size) {
      throw DataError("checkpoint: tensor " + view.name + " has wrong size");
    }
    std::copy(values.begin(), values.end(), view.data);
  }
  return model;
}

AdamState::AdamState(const ParamSet& params)
    : m_(ParamSet::zeros_like(params)), v_(ParamSet::zeros_like(params)) {}

void AdamState::step(ParamSet& params, ParamSet& grads, const AdamConfig& config) {
  ++step_;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_));
  auto p_views = tensor_views(params);
  auto g_views = tensor_views(grads);
  auto m_views = tensor_views(m_);
  auto v_views = tensor_views(v_);
  for (std::size_t i = 0; i < p_views.size(); ++i) {
    Eigen::Map<Eigen::ArrayXd> p(p_views[i].data, p_views[i].size);
    Eigen::Map<Eigen::ArrayXd> g(g_views[i].data, g_views[i].size);
    Eigen::Map<Eigen::ArrayXd> m(m_views[i].data, m_views[i].size);
    Eigen::Map<Eigen::ArrayXd> v(v_views[i].data, v_views[i].size);
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.square();
    p -= config.lr * (m / bc1) / ((v / bc2).sqrt() + config.eps);
  }
}

}  // namespace tell
