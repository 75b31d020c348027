#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "tell/common.hpp"

namespace tell::nn {

/// Exact live-tensor-element accounting for the complexity probe.
/// Forward passes report allocations of their working set; the probe reads
/// the peak. Platform-independent by construction.
struct TensorMeter {
  long live = 0;
  long peak = 0;

  void alloc(long n) {
    live += n;
    if (live > peak) peak = live;
  }
  void release(long n) { live -= n; }
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

template <class S>
struct AttentionParams {
  Mat<S> wq, wk, wv, wo;  // d x d
  Vec<S> bq, bk, bv, bo;  // d
};

template <class S>
struct LayerNormParams {
  Vec<S> gamma, beta;  // d
};

template <class S>
struct FeedForwardParams {
  Mat<S> w1;  // d x f
  Vec<S> b1;  // f
  Mat<S> w2;  // f x d
  Vec<S> b2;  // d
};

template <class S>
struct TransformerLayerParams {
  AttentionParams<S> attn;
  LayerNormParams<S> ln1;
  FeedForwardParams<S> ffn;
  LayerNormParams<S> ln2;
};

template <class S>
struct LstmParams {
  // Gate order [i f g o], stacked along columns.
  Mat<S> wx;  // d x 4h
  Mat<S> wh;  // h x 4h
  Vec<S> b;   // 4h
};

// ---------------------------------------------------------------------------
// Softmax over rows with optional visibility mask
// ---------------------------------------------------------------------------

/// Softmax per row over the visible entries; masked entries get exactly zero
/// weight. A row with no visible entry becomes the zero row (its output is
/// the zero vector rather than an error; structural masks can isolate rows).
template <class S>
Mat<S> masked_softmax_rows(const Mat<S>& scores, const MaskArray* mask) {
  Mat<S> out = Mat<S>::Zero(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    S max_score = -std::numeric_limits<S>::infinity();
    bool any = false;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (mask != nullptr && !(*mask)(r, c)) continue;
      any = true;
      if (scores(r, c) > max_score) max_score = scores(r, c);
    }
    if (!any || max_score == -std::numeric_limits<S>::infinity()) continue;
    S sum = S(0);
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (mask != nullptr && !(*mask)(r, c)) continue;
      const S e = std::exp(scores(r, c) - max_score);
      out(r, c) = e;
      sum += e;
    }
    out.row(r) /= sum;
  }
  return out;
}

/// dS = A .* (dA - rowsum(dA .* A)); zero rows stay zero.
template <class S>
Mat<S> softmax_rows_backward(const Mat<S>& weights, const Mat<S>& dweights) {
  const Vec<S> row_dot = (weights.array() * dweights.array()).rowwise().sum();
  return (weights.array() * (dweights.array().colwise() - row_dot.array())).matrix();
}

// ---------------------------------------------------------------------------
// Scaled dot-product multi-head attention
// ---------------------------------------------------------------------------

template <class S>
struct AttentionCache {
  Mat<S> x, q, k, v, ctx;
  std::vector<Mat<S>> head_weights;
  MaskArray mask;  // empty when unmasked
  int heads = 1;
};

/// mask == nullptr means full attention. cache may be null for inference.
template <class S>
Mat<S> attention_forward(const Mat<S>& x, const AttentionParams<S>& p, const MaskArray* mask,
                         int heads, AttentionCache<S>* cache, TensorMeter* meter = nullptr) {
  const Eigen::Index len = x.rows();
  const Eigen::Index d = x.cols();
  if (p.wq.rows() != d) throw InternalError("attention: input width mismatch");
  if (heads < 1 || d % heads != 0) throw InternalError("attention: heads must divide d");
  if (mask != nullptr && (mask->rows() != len || mask->cols() != len)) {
    throw InternalError("attention: mask shape mismatch");
  }
  const Eigen::Index dk = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dk));

  Mat<S> q = (x * p.wq).rowwise() + p.bq.transpose();
  Mat<S> k = (x * p.wk).rowwise() + p.bk.transpose();
  Mat<S> v = (x * p.wv).rowwise() + p.bv.transpose();
  if (meter != nullptr) meter->alloc(3 * len * d);

  Mat<S> ctx(len, d);
  if (meter != nullptr) meter->alloc(len * d);
  std::vector<Mat<S>> head_weights;
  if (cache != nullptr) head_weights.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.middleCols(h * dk, dk);
    const auto kh = k.middleCols(h * dk, dk);
    const auto vh = v.middleCols(h * dk, dk);
    if (meter != nullptr) meter->alloc(2 * len * len);  // scores + weights
    Mat<S> scores = qh * kh.transpose() * scale;
    Mat<S> weights = masked_softmax_rows(scores, mask);
    ctx.middleCols(h * dk, dk) = weights * vh;
    if (meter != nullptr) meter->release(2 * len * len);
    if (cache != nullptr) head_weights.push_back(std::move(weights));
  }

  Mat<S> y = (ctx * p.wo).rowwise() + p.bo.transpose();
  if (cache != nullptr) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->ctx = std::move(ctx);
    cache->head_weights = std::move(head_weights);
    cache->mask = mask != nullptr ? *mask : MaskArray();
    cache->heads = heads;
  }
  if (meter != nullptr) meter->release(4 * len * d);  // q, k, v, ctx
  return y;
}

template <class S>
Mat<S> attention_backward(const AttentionCache<S>& cache, const AttentionParams<S>& p,
                          const Mat<S>& dy, AttentionParams<S>& grads) {
  const Eigen::Index len = cache.x.rows();
  const Eigen::Index d = cache.x.cols();
  const Eigen::Index dk = d / cache.heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dk));

  grads.wo += cache.ctx.transpose() * dy;
  grads.bo += dy.colwise().sum().transpose();
  const Mat<S> dctx = dy * p.wo.transpose();

  Mat<S> dq(len, d), dkm(len, d), dv(len, d);
  for (int h = 0; h < cache.heads; ++h) {
    const auto qh = cache.q.middleCols(h * dk, dk);
    const auto kh = cache.k.middleCols(h * dk, dk);
    const auto vh = cache.v.middleCols(h * dk, dk);
    const auto dctx_h = dctx.middleCols(h * dk, dk);
    const Mat<S>& weights = cache.head_weights[static_cast<std::size_t>(h)];

    const Mat<S> dweights = dctx_h * vh.transpose();
    dv.middleCols(h * dk, dk) = weights.transpose() * dctx_h;
    const Mat<S> dscores = softmax_rows_backward(weights, dweights);
    dq.middleCols(h * dk, dk) = dscores * kh * scale;
    dkm.middleCols(h * dk, dk) = dscores.transpose() * qh * scale;
  }

  grads.wq += cache.x.transpose() * dq;
  grads.bq += dq.colwise().sum().transpose();
  grads.wk += cache.x.transpose() * dkm;
  grads.bk += dkm.colwise().sum().transpose();
  grads.wv += cache.x.transpose() * dv;
  grads.bv += dv.colwise().sum().transpose();

  return dq * p.wq.transpose() + dkm * p.wk.transpose() + dv * p.wv.transpose();
}

// ---------------------------------------------------------------------------
// Layer norm over rows
// ---------------------------------------------------------------------------

inline constexpr double kLayerNormEps = 1e-5;

template <class S>
struct LayerNormCache {
  Mat<S> xhat;
  Vec<S> inv_std;
};

template <class S>
Mat<S> layer_norm_forward(const Mat<S>& x, const LayerNormParams<S>& p, LayerNormCache<S>* cache,
                          TensorMeter* meter = nullptr) {
  const Eigen::Index d = x.cols();
  Mat<S> xhat(x.rows(), d);
  Vec<S> inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mu = x.row(r).mean();
    const S var = (x.row(r).array() - mu).square().sum() / static_cast<S>(d);
    inv_std(r) = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Mat<S> y = ((xhat.array().rowwise() * p.gamma.transpose().array()).rowwise() +
              p.beta.transpose().array())
                 .matrix();
  if (meter != nullptr) meter->alloc(x.rows() * d);  // xhat working copy
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  if (meter != nullptr) meter->release(x.rows() * d);
  return y;
}

template <class S>
Mat<S> layer_norm_backward(const LayerNormCache<S>& cache, const LayerNormParams<S>& p,
                           const Mat<S>& dy, LayerNormParams<S>& grads) {
  const Eigen::Index d = cache.xhat.cols();
  grads.gamma += (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
  grads.beta += dy.colwise().sum().transpose();
  Mat<S> dx(dy.rows(), d);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const auto dxhat = (dy.row(r).array() * p.gamma.transpose().array()).eval();
    const S m1 = dxhat.mean();
    const S m2 = (dxhat * cache.xhat.row(r).array()).mean();
    dx.row(r) = ((dxhat - m1 - cache.xhat.row(r).array() * m2) * cache.inv_std(r)).matrix();
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Position-wise feed-forward with GELU
// ---------------------------------------------------------------------------

template <class S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
}

template <class S>
S gelu_grad(S x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684;
  return S(0.5) * (S(1) + std::erf(x / std::sqrt(S(2)))) +
         x * static_cast<S>(kInvSqrt2Pi) * std::exp(S(-0.5) * x * x);
}

template <class S>
struct FeedForwardCache {
  Mat<S> x, pre, hidden;
};

template <class S>
Mat<S> feed_forward_forward(const Mat<S>& x, const FeedForwardParams<S>& p,
                            FeedForwardCache<S>* cache, TensorMeter* meter = nullptr) {
  Mat<S> pre = (x * p.w1).rowwise() + p.b1.transpose();
  Mat<S> hidden = pre.unaryExpr([](S v) { return gelu(v); });
  if (meter != nullptr) meter->alloc(2 * pre.rows() * pre.cols());
  Mat<S> y = (hidden * p.w2).rowwise() + p.b2.transpose();
  if (cache != nullptr) {
    cache->x = x;
    cache->pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  if (meter != nullptr) meter->release(2 * pre.rows() * pre.cols());
  return y;
}

template <class S>
Mat<S> feed_forward_backward(const FeedForwardCache<S>& cache, const FeedForwardParams<S>& p,
                             const Mat<S>& dy, FeedForwardParams<S>& grads) {
  grads.w2 += cache.hidden.transpose() * dy;
  grads.b2 += dy.colwise().sum().transpose();
  const Mat<S> dhidden = dy * p.w2.transpose();
  const Mat<S> dpre =
      (dhidden.array() * cache.pre.unaryExpr([](S v) { return gelu_grad(v); }).array()).matrix();
  grads.w1 += cache.x.transpose() * dpre;
  grads.b1 += dpre.colwise().sum().transpose();
  return dpre * p.w1.transpose();
}

// ---------------------------------------------------------------------------
// Transformer layer: post-norm residual wiring
// ---------------------------------------------------------------------------

template <class S>
struct TransformerLayerCache {
  AttentionCache<S> attn;
  LayerNormCache<S> ln1;
  FeedForwardCache<S> ffn;
  LayerNormCache<S> ln2;
};

template <class S>
Mat<S> transformer_layer_forward(const Mat<S>& x, const TransformerLayerParams<S>& p,
                                 const MaskArray* mask, int heads,
                                 TransformerLayerCache<S>* cache, TensorMeter* meter = nullptr) {
  Mat<S> attn_out = attention_forward(x, p.attn, mask, heads,
                                      cache != nullptr ? &cache->attn : nullptr, meter);
  if (meter != nullptr) meter->alloc(2 * x.rows() * x.cols());  // attn_out + residual
  attn_out += x;
  Mat<S> n1 = layer_norm_forward(attn_out, p.ln1, cache != nullptr ? &cache->ln1 : nullptr, meter);
  Mat<S> ffn_out =
      feed_forward_forward(n1, p.ffn, cache != nullptr ? &cache->ffn : nullptr, meter);
  ffn_out += n1;
  Mat<S> y = layer_norm_forward(ffn_out, p.ln2, cache != nullptr ? &cache->ln2 : nullptr, meter);
  if (meter != nullptr) meter->release(2 * x.rows() * x.cols());
  return y;
}

template <class S>
Mat<S> transformer_layer_backward(const TransformerLayerCache<S>& cache,
                                  const TransformerLayerParams<S>& p, const Mat<S>& dy,
                                  TransformerLayerParams<S>& grads) {
  const Mat<S> dr2 = layer_norm_backward(cache.ln2, p.ln2, dy, grads.ln2);
  const Mat<S> dn1 = dr2 + feed_forward_backward(cache.ffn, p.ffn, dr2, grads.ffn);
  const Mat<S> dr1 = layer_norm_backward(cache.ln1, p.ln1, dn1, grads.ln1);
  return dr1 + attention_backward(cache.attn, p.attn, dr1, grads.attn);
}

// ---------------------------------------------------------------------------
// LSTM over rows, returning the final hidden state
// ---------------------------------------------------------------------------

template <class S>
struct LstmCache {
  Mat<S> x;
  std::vector<Vec<S>> i, f, g, o, c, tanh_c, h;  // per step; h[t] is post-step state
};

template <class S>
Vec<S> lstm_forward(const Mat<S>& x, const LstmParams<S>& p, LstmCache<S>* cache,
                    TensorMeter* meter = nullptr) {
  const Eigen::Index len = x.rows();
  if (len == 0) throw InternalError("lstm: empty sequence");
  const Eigen::Index hidden = p.wh.rows();

  Vec<S> h = Vec<S>::Zero(hidden);
  Vec<S> c = Vec<S>::Zero(hidden);
  if (meter != nullptr) meter->alloc(2 * hidden);
  if (cache != nullptr) {
    cache->x = x;
    const auto n = static_cast<std::size_t>(len);
    cache->i.resize(n);
    cache->f.resize(n);
    cache->g.resize(n);
    cache->o.resize(n);
    cache->c.resize(n);
    cache->tanh_c.resize(n);
    cache->h.resize(n);
  }
  const auto sigmoid = [](S v) { return S(1) / (S(1) + std::exp(-v)); };
  for (Eigen::Index t = 0; t < len; ++t) {
    const Vec<S> z =
        (x.row(t) * p.wx).transpose() + (h.transpose() * p.wh).transpose() + p.b;
    const Vec<S> i = z.segment(0, hidden).unaryExpr(sigmoid);
    const Vec<S> f = z.segment(hidden, hidden).unaryExpr(sigmoid);
    const Vec<S> g = z.segment(2 * hidden, hidden).array().tanh();
    const Vec<S> o = z.segment(3 * hidden, hidden).unaryExpr(sigmoid);
    const Vec<S> c_new = (f.array() * c.array() + i.array() * g.array()).matrix();
    const Vec<S> tanh_c = c_new.array().tanh();
    h = (o.array() * tanh_c.array()).matrix();
    if (cache != nullptr) {
      const auto idx = static_cast<std::size_t>(t);
      cache->i[idx] = i;
      cache->f[idx] = f;
      cache->g[idx] = g;
      cache->o[idx] = o;
      cache->c[idx] = c_new;
      cache->tanh_c[idx] = tanh_c;
      cache->h[idx] = h;
    }
    c = c_new;
  }
  if (meter != nullptr) meter->release(2 * hidden);
  return h;
}

template <class S>
Mat<S> lstm_backward(const LstmCache<S>& cache, const LstmParams<S>& p, const Vec<S>& dh_final,
                     LstmParams<S>& grads) {
  const Eigen::Index len = cache.x.rows();
  const Eigen::Index hidden = p.wh.rows();
  Mat<S> dx(len, cache.x.cols());
  Vec<S> dh = dh_final;
  Vec<S> dc = Vec<S>::Zero(hidden);
  for (Eigen::Index t = len - 1; t >= 0; --t) {
    const auto idx = static_cast<std::size_t>(t);
    const Vec<S>& i = cache.i[idx];
    const Vec<S>& f = cache.f[idx];
    const Vec<S>& g = cache.g[idx];
    const Vec<S>& o = cache.o[idx];
    const Vec<S>& tanh_c = cache.tanh_c[idx];
    const Vec<S> c_prev =
        t > 0 ? cache.c[idx - 1] : Vec<S>::Zero(hidden);
    const Vec<S> h_prev = t > 0 ? cache.h[idx - 1] : Vec<S>::Zero(hidden);

    const Vec<S> do_ = (dh.array() * tanh_c.array()).matrix();
    const Vec<S> dc_total =
        (dc.array() + dh.array() * o.array() * (S(1) - tanh_c.array().square())).matrix();
    const Vec<S> di = (dc_total.array() * g.array()).matrix();
    const Vec<S> df = (dc_total.array() * c_prev.array()).matrix();
    const Vec<S> dg = (dc_total.array() * i.array()).matrix();
    dc = (dc_total.array() * f.array()).matrix();

    Vec<S> dz(4 * hidden);
    dz.segment(0, hidden) = (di.array() * i.array() * (S(1) - i.array())).matrix();
    dz.segment(hidden, hidden) = (df.array() * f.array() * (S(1) - f.array())).matrix();
    dz.segment(2 * hidden, hidden) = (dg.array() * (S(1) - g.array().square())).matrix();
    dz.segment(3 * hidden, hidden) = (do_.array() * o.array() * (S(1) - o.array())).matrix();

    grads.wx += cache.x.row(t).transpose() * dz.transpose();
    grads.wh += h_prev * dz.transpose();
    grads.b += dz;
    dx.row(t) = (p.wx * dz).transpose();
    dh = p.wh * dz;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

template <class S>
Vec<S> mean_pool(const Mat<S>& x, const std::vector<int>& positions) {
  if (positions.empty()) throw InternalError("mean_pool: empty position set");
  Vec<S> out = Vec<S>::Zero(x.cols());
  for (int pos : positions) {
    if (pos < 0 || pos >= x.rows()) throw InternalError("mean_pool: position out of range");
    out += x.row(pos).transpose();
  }
  return out / static_cast<S>(positions.size());
}

/// Scatters d(mean)/count back onto the pooled rows of dx.
template <class S>
void mean_pool_backward(const Vec<S>& dpooled, const std::vector<int>& positions, Mat<S>& dx) {
  const S inv = S(1) / static_cast<S>(positions.size());
  for (int pos : positions) {
    dx.row(pos) += dpooled.transpose() * inv;
  }
}

// ---------------------------------------------------------------------------
// Softmax + cross entropy
// ---------------------------------------------------------------------------

template <class S>
Vec<S> softmax_stable(const Vec<S>& logits) {
  if (logits.size() == 0) throw InternalError("softmax: empty logits");
  const S max_logit = logits.maxCoeff();
  Vec<S> probs = (logits.array() - max_logit).exp();
  probs /= probs.sum();
  return probs;
}

/// Returns (probs, loss) with loss = -log probs[target].
template <class S>
std::pair<Vec<S>, S> softmax_xent(const Vec<S>& logits, int target) {
  if (target < 0 || target >= logits.size()) throw InternalError("softmax_xent: bad target");
  Vec<S> probs = softmax_stable(logits);
  const S loss = -std::log(probs(target));
  return {std::move(probs), loss};
}

template <class S>
Vec<S> softmax_xent_backward(const Vec<S>& probs, int target, S dloss = S(1)) {
  Vec<S> dlogits = probs * dloss;
  dlogits(target) -= dloss;
  return dlogits;
}

}  // namespace tell::nn
