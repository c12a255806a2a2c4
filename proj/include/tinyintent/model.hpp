#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinyintent/kernels.hpp"
#include "tinyintent/model_config.hpp"
#include "tinyintent/pipeline.hpp"
#include "tinyintent/rng.hpp"
#include "tinyintent/tensor.hpp"

namespace tinyintent {

template <class Real>
struct Parameters;

template <class Real>
Parameters<Real> make_parameter_skeleton(const ModelConfig& cfg, bool training_buffers = true);

// All trainable weights of the model. Tensor order here is the canonical
// order used by the optimizer, the quantizer and the model file.
template <class Real>
struct Parameters {
    ModelConfig config;
    Tensor<Real> word_emb;                // [Vw, We]
    Tensor<Real> char_emb;                // [Vc, Ce]
    std::vector<Tensor<Real>> conv_w;     // per branch [Fi, Ki, Ce]
    std::vector<Tensor<Real>> conv_b;     // per branch [Fi]
    Tensor<Real> lstm_w;                  // [4H, D+H]
    Tensor<Real> lstm_b;                  // [4H]
    Tensor<Real> dense_w;                 // [NL, H]
    Tensor<Real> dense_b;                 // [NL]

    std::vector<Tensor<Real>*> all_tensors() {
        std::vector<Tensor<Real>*> out{&word_emb, &char_emb};
        for (std::size_t i = 0; i < conv_w.size(); ++i) {
            out.push_back(&conv_w[i]);
            out.push_back(&conv_b[i]);
        }
        out.push_back(&lstm_w);
        out.push_back(&lstm_b);
        out.push_back(&dense_w);
        out.push_back(&dense_b);
        return out;
    }

    std::vector<const Tensor<Real>*> all_tensors() const {
        std::vector<const Tensor<Real>*> out{&word_emb, &char_emb};
        for (std::size_t i = 0; i < conv_w.size(); ++i) {
            out.push_back(&conv_w[i]);
            out.push_back(&conv_b[i]);
        }
        out.push_back(&lstm_w);
        out.push_back(&lstm_b);
        out.push_back(&dense_w);
        out.push_back(&dense_b);
        return out;
    }

    long long parameter_count() const {
        long long n = 0;
        for (const Tensor<Real>* t : all_tensors()) n += static_cast<long long>(t->size());
        return n;
    }

    void zero_grad() {
        for (Tensor<Real>* t : all_tensors()) t->zero_grad();
    }

    // Copy of the weights without gradient/optimizer state; snapshots and
    // serialization want this, not the full training tensors.
    Parameters values_snapshot() const {
        Parameters out = make_parameter_skeleton<Real>(config, /*training_buffers=*/false);
        auto src = all_tensors();
        auto dst = out.all_tensors();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i]->values = src[i]->values;
        return out;
    }

    template <class Other>
    Parameters<Other> cast() const {
        Parameters<Other> out;
        out.config = config;
        out.word_emb = word_emb.template cast<Other>();
        out.char_emb = char_emb.template cast<Other>();
        for (const auto& t : conv_w) out.conv_w.push_back(t.template cast<Other>());
        for (const auto& t : conv_b) out.conv_b.push_back(t.template cast<Other>());
        out.lstm_w = lstm_w.template cast<Other>();
        out.lstm_b = lstm_b.template cast<Other>();
        out.dense_w = dense_w.template cast<Other>();
        out.dense_b = dense_b.template cast<Other>();
        return out;
    }
};

// Tensor skeleton with the canonical names and shapes; values zero.
template <class Real>
Parameters<Real> make_parameter_skeleton(const ModelConfig& cfg, bool training_buffers) {
    cfg.validate();
    Parameters<Real> p;
    p.config = cfg;
    p.word_emb = Tensor<Real>("word_emb", {cfg.word_vocab_size, cfg.word_emb_dim}, training_buffers);
    p.char_emb = Tensor<Real>("char_emb", {cfg.char_vocab_size, cfg.char_emb_dim}, training_buffers);
    for (int i = 0; i < cfg.num_conv_branches(); ++i) {
        const int k = cfg.conv_kernel_sizes[static_cast<std::size_t>(i)];
        const int f = cfg.conv_filter_counts[static_cast<std::size_t>(i)];
        p.conv_w.emplace_back("conv" + std::to_string(i) + "_w", std::vector<int>{f, k, cfg.char_emb_dim},
                              training_buffers);
        p.conv_b.emplace_back("conv" + std::to_string(i) + "_b", std::vector<int>{f}, training_buffers);
    }
    const int d = cfg.lstm_input_width();
    const int h = cfg.lstm_hidden;
    p.lstm_w = Tensor<Real>("lstm_w", {4 * h, d + h}, training_buffers);
    p.lstm_b = Tensor<Real>("lstm_b", {4 * h}, training_buffers);
    p.dense_w = Tensor<Real>("dense_w", {cfg.num_labels, h}, training_buffers);
    p.dense_b = Tensor<Real>("dense_b", {cfg.num_labels}, training_buffers);
    return p;
}

// Builds randomly initialized parameters; word rows present in
// pretrained_word_rows (word id -> vector) are copied verbatim afterwards,
// so uncovered rows do not depend on coverage. Deterministic given seed.
template <class Real>
Parameters<Real> init_parameters(const ModelConfig& cfg, std::uint64_t seed,
                                 const std::unordered_map<int, std::vector<float>>* pretrained_word_rows = nullptr) {
    Parameters<Real> p = make_parameter_skeleton<Real>(cfg);
    const int d = cfg.lstm_input_width();
    const int h = cfg.lstm_hidden;

    Rng rng(seed);
    auto fill_uniform = [&rng](Tensor<Real>& t, float lo, float hi) {
        for (Real& v : t.values) v = static_cast<Real>(rng.uniform(lo, hi));
    };
    auto fill_glorot = [&rng](Tensor<Real>& t, int fan_in, int fan_out) {
        const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
        for (Real& v : t.values) v = static_cast<Real>(rng.uniform(-limit, limit));
    };

    fill_uniform(p.word_emb, -0.05f, 0.05f);
    fill_uniform(p.char_emb, -0.05f, 0.05f);
    for (int i = 0; i < cfg.num_conv_branches(); ++i) {
        const int k = cfg.conv_kernel_sizes[static_cast<std::size_t>(i)];
        const int f = cfg.conv_filter_counts[static_cast<std::size_t>(i)];
        fill_glorot(p.conv_w[static_cast<std::size_t>(i)], k * cfg.char_emb_dim, f);
        // conv biases stay zero
    }
    fill_glorot(p.lstm_w, d + h, 4 * h);
    // Forget-gate bias starts at 1, the rest at 0.
    for (int j = 0; j < h; ++j) p.lstm_b.values[static_cast<std::size_t>(h + j)] = Real(1);
    fill_glorot(p.dense_w, h, cfg.num_labels);

    if (pretrained_word_rows) {
        for (const auto& [word_id, row] : *pretrained_word_rows) {
            if (word_id < 0 || word_id >= cfg.word_vocab_size)
                throw IndexError("init_parameters: pretrained word id out of range");
            if (static_cast<int>(row.size()) != cfg.word_emb_dim)
                throw ShapeError("init_parameters: pretrained row has wrong dimension");
            Real* dst = p.word_emb.values.data() + static_cast<std::size_t>(word_id) * cfg.word_emb_dim;
            for (int j = 0; j < cfg.word_emb_dim; ++j) dst[j] = static_cast<Real>(row[static_cast<std::size_t>(j)]);
        }
    }
    return p;
}

// Per-call scratch for forward/backward. Allocated once from the config;
// forward and backward never allocate.
template <class Real>
struct ForwardCache {
    explicit ForwardCache(const ModelConfig& cfg) {
        cfg.validate();  // buffer sizes below assume a coherent config
        const int s = cfg.max_seq_len;
        const int l = cfg.max_word_len;
        const int ec = cfg.char_emb_dim;
        const int c = cfg.char_feature_width();
        const int d = cfg.lstm_input_width();
        const int h = cfg.lstm_hidden;
        post_off.assign(static_cast<std::size_t>(cfg.num_conv_branches()), 0);
        feat_off.assign(static_cast<std::size_t>(cfg.num_conv_branches()), 0);
        int post_total = 0, feat_total = 0, max_branch_post = 0;
        for (int i = 0; i < cfg.num_conv_branches(); ++i) {
            post_off[static_cast<std::size_t>(i)] = post_total;
            feat_off[static_cast<std::size_t>(i)] = feat_total;
            const int sz = cfg.conv_out_len(i) * cfg.conv_filter_counts[static_cast<std::size_t>(i)];
            post_total += sz;
            feat_total += cfg.conv_filter_counts[static_cast<std::size_t>(i)];
            max_branch_post = std::max(max_branch_post, sz);
        }
        conv_post_total = post_total;
        char_emb_rows.assign(static_cast<std::size_t>(s) * l * ec, Real(0));
        conv_post.assign(static_cast<std::size_t>(s) * post_total, Real(0));
        pool_argmax.assign(static_cast<std::size_t>(s) * c, 0);
        word_repr.assign(static_cast<std::size_t>(s) * d, Real(0));
        gates.assign(static_cast<std::size_t>(s) * 4 * h, Real(0));
        cells.assign(static_cast<std::size_t>(s) * h, Real(0));
        tanh_cells.assign(static_cast<std::size_t>(s) * h, Real(0));
        hiddens.assign(static_cast<std::size_t>(s) * h, Real(0));
        logits.assign(static_cast<std::size_t>(cfg.num_labels), Real(0));
        probs.assign(static_cast<std::size_t>(cfg.num_labels), Real(0));
        xh.assign(static_cast<std::size_t>(d + h), Real(0));
        zeros.assign(static_cast<std::size_t>(h), Real(0));
        d_h.assign(static_cast<std::size_t>(h), Real(0));
        d_c.assign(static_cast<std::size_t>(h), Real(0));
        d_z.assign(static_cast<std::size_t>(4 * h), Real(0));
        d_xh.assign(static_cast<std::size_t>(d + h), Real(0));
        d_logits.assign(static_cast<std::size_t>(cfg.num_labels), Real(0));
        d_conv_post.assign(static_cast<std::size_t>(max_branch_post), Real(0));
        d_char_rows.assign(static_cast<std::size_t>(l) * ec, Real(0));
    }

    std::vector<int> post_off, feat_off;
    int conv_post_total = 0;

    std::vector<Real> char_emb_rows, conv_post, word_repr;
    std::vector<int> pool_argmax;
    std::vector<Real> gates, cells, tanh_cells, hiddens;
    std::vector<Real> logits, probs;
    std::vector<Real> xh, zeros;
    std::vector<Real> d_h, d_c, d_z, d_xh, d_logits, d_conv_post, d_char_rows;
};

struct IntentPrediction {
    int label_id = -1;
    std::string label_name;
    std::vector<float> probabilities;
};

// Lowest-index tie-break.
template <class Real>
int argmax(const Real* v, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

namespace detail {

template <class Real>
void check_ids(const EncodedUtterance& utt, const ModelConfig& cfg) {
    if (utt.true_length < 1) throw InputError("forward: utterance has no real tokens");
    if (utt.true_length > cfg.max_seq_len || static_cast<int>(utt.word_ids.size()) < utt.true_length)
        throw ShapeError("forward: utterance longer than max_seq_len");
    if (utt.max_word_len != cfg.max_word_len) throw ShapeError("forward: utterance max_word_len mismatch");
    for (int p = 0; p < utt.true_length; ++p) {
        const int wid = utt.word_ids[static_cast<std::size_t>(p)];
        if (wid < 0 || wid >= cfg.word_vocab_size) throw IndexError("forward: word id out of range");
        const int* row = utt.char_row(p);
        for (int l = 0; l < cfg.max_word_len; ++l)
            if (row[l] < 0 || row[l] >= cfg.char_vocab_size) throw IndexError("forward: char id out of range");
    }
}

// Char feature extractor for one word: embed chars, run the conv branches,
// activate, max-pool over time, concatenate into out_feat [C].
template <class Real>
void char_features_at(const Parameters<Real>& params, const int* char_ids, ForwardCache<Real>& cache, int pos,
                      Real* out_feat) {
    const ModelConfig& cfg = params.config;
    const int l = cfg.max_word_len;
    const int ec = cfg.char_emb_dim;
    const int c = cfg.char_feature_width();
    Real* rows = cache.char_emb_rows.data() + static_cast<std::size_t>(pos) * l * ec;
    for (int i = 0; i < l; ++i) {
        const Real* src = params.char_emb.values.data() + static_cast<std::size_t>(char_ids[i]) * ec;
        std::memcpy(rows + static_cast<std::size_t>(i) * ec, src, sizeof(Real) * static_cast<std::size_t>(ec));
    }
    Real* post_base = cache.conv_post.data() + static_cast<std::size_t>(pos) * cache.conv_post_total;
    int* argmax_base = cache.pool_argmax.data() + static_cast<std::size_t>(pos) * c;
    for (int b = 0; b < cfg.num_conv_branches(); ++b) {
        const int k = cfg.conv_kernel_sizes[static_cast<std::size_t>(b)];
        const int f = cfg.conv_filter_counts[static_cast<std::size_t>(b)];
        const int out_len = cfg.conv_out_len(b);
        Real* post = post_base + cache.post_off[static_cast<std::size_t>(b)];
        conv1d_valid(rows, l, ec, params.conv_w[static_cast<std::size_t>(b)].values.data(), f, k,
                     params.conv_b[static_cast<std::size_t>(b)].values.data(), post);
        if (cfg.conv_activation == ConvActivation::Relu) {
            const int n = out_len * f;
            for (int i = 0; i < n; ++i) post[i] = std::max(post[i], Real(0));
        }
        maxpool_time(post, out_len, f, out_feat + cache.feat_off[static_cast<std::size_t>(b)],
                     argmax_base + cache.feat_off[static_cast<std::size_t>(b)]);
    }
}

}  // namespace detail

// Full forward pass; fills the cache (probs included). Never allocates.
template <class Real>
void forward(const EncodedUtterance& utt, const Parameters<Real>& params, ForwardCache<Real>& cache) {
    const ModelConfig& cfg = params.config;
    detail::check_ids<Real>(utt, cfg);
    const int we = cfg.word_emb_dim;
    const int d = cfg.lstm_input_width();
    const int h = cfg.lstm_hidden;

    for (int p = 0; p < utt.true_length; ++p) {
        Real* repr = cache.word_repr.data() + static_cast<std::size_t>(p) * d;
        const Real* wrow =
            params.word_emb.values.data() + static_cast<std::size_t>(utt.word_ids[static_cast<std::size_t>(p)]) * we;
        std::memcpy(repr, wrow, sizeof(Real) * static_cast<std::size_t>(we));
        detail::char_features_at(params, utt.char_row(p), cache, p, repr + we);
    }

    for (int t = 0; t < utt.true_length; ++t) {
        const Real* x = cache.word_repr.data() + static_cast<std::size_t>(t) * d;
        const Real* h_prev = t == 0 ? cache.zeros.data() : cache.hiddens.data() + static_cast<std::size_t>(t - 1) * h;
        const Real* c_prev = t == 0 ? cache.zeros.data() : cache.cells.data() + static_cast<std::size_t>(t - 1) * h;
        std::memcpy(cache.xh.data(), x, sizeof(Real) * static_cast<std::size_t>(d));
        std::memcpy(cache.xh.data() + d, h_prev, sizeof(Real) * static_cast<std::size_t>(h));
        lstm_cell(cache.xh.data(), d, h, params.lstm_w.values.data(), params.lstm_b.values.data(), c_prev,
                  cache.gates.data() + static_cast<std::size_t>(t) * 4 * h,
                  cache.cells.data() + static_cast<std::size_t>(t) * h,
                  cache.tanh_cells.data() + static_cast<std::size_t>(t) * h,
                  cache.hiddens.data() + static_cast<std::size_t>(t) * h);
    }

    const Real* sentence = cache.hiddens.data() + static_cast<std::size_t>(utt.true_length - 1) * h;
    dense_forward(sentence, h, params.dense_w.values.data(), params.dense_b.values.data(), cfg.num_labels,
                  cache.logits.data());
    softmax(cache.logits.data(), cfg.num_labels, cache.probs.data());
}

// Accumulates gradients for every tensor, scaled by loss_scale (1/batch for
// averaged batches). Requires a cache filled by forward() for this utterance.
// Returns the unscaled loss.
template <class Real>
Real backward(const EncodedUtterance& utt, int true_label, Parameters<Real>& params, ForwardCache<Real>& cache,
              Real loss_scale = Real(1)) {
    const ModelConfig& cfg = params.config;
    if (!params.word_emb.has_training_buffers())  // loaded-for-inference model being trained further
        for (Tensor<Real>* t : params.all_tensors()) t->ensure_training_buffers();
    const int we = cfg.word_emb_dim;
    const int ec = cfg.char_emb_dim;
    const int l = cfg.max_word_len;
    const int c = cfg.char_feature_width();
    const int d = cfg.lstm_input_width();
    const int h = cfg.lstm_hidden;

    const Real loss = cross_entropy(cache.probs.data(), cfg.num_labels, true_label);

    std::fill(cache.d_logits.begin(), cache.d_logits.end(), Real(0));
    softmax_cross_entropy_backward(cache.probs.data(), cfg.num_labels, true_label, loss_scale,
                                   cache.d_logits.data());

    const Real* sentence = cache.hiddens.data() + static_cast<std::size_t>(utt.true_length - 1) * h;
    dense_backward(sentence, h, params.dense_w.values.data(), cfg.num_labels, cache.d_logits.data(),
                   cache.d_h.data(), params.dense_w.grad.data(), params.dense_b.grad.data());
    std::fill(cache.d_c.begin(), cache.d_c.end(), Real(0));

    for (int t = utt.true_length - 1; t >= 0; --t) {
        const Real* x = cache.word_repr.data() + static_cast<std::size_t>(t) * d;
        const Real* h_prev = t == 0 ? cache.zeros.data() : cache.hiddens.data() + static_cast<std::size_t>(t - 1) * h;
        const Real* c_prev = t == 0 ? cache.zeros.data() : cache.cells.data() + static_cast<std::size_t>(t - 1) * h;
        std::memcpy(cache.xh.data(), x, sizeof(Real) * static_cast<std::size_t>(d));
        std::memcpy(cache.xh.data() + d, h_prev, sizeof(Real) * static_cast<std::size_t>(h));

        lstm_cell_backward(cache.xh.data(), d, h, params.lstm_w.values.data(),
                           cache.gates.data() + static_cast<std::size_t>(t) * 4 * h, c_prev,
                           cache.tanh_cells.data() + static_cast<std::size_t>(t) * h, cache.d_h.data(),
                           cache.d_c.data(), cache.d_z.data(), cache.d_c.data(), cache.d_xh.data(),
                           params.lstm_w.grad.data(), params.lstm_b.grad.data());

        // Input gradient: word embedding row plus the char path.
        const Real* d_x = cache.d_xh.data();
        Real* wgrad =
            params.word_emb.grad.data() + static_cast<std::size_t>(utt.word_ids[static_cast<std::size_t>(t)]) * we;
        for (int j = 0; j < we; ++j) wgrad[j] += d_x[j];

        const Real* d_feat = d_x + we;
        const Real* post_base = cache.conv_post.data() + static_cast<std::size_t>(t) * cache.conv_post_total;
        const int* argmax_base = cache.pool_argmax.data() + static_cast<std::size_t>(t) * c;
        const Real* rows = cache.char_emb_rows.data() + static_cast<std::size_t>(t) * l * ec;
        std::fill(cache.d_char_rows.begin(), cache.d_char_rows.end(), Real(0));
        for (int b = 0; b < cfg.num_conv_branches(); ++b) {
            const int k = cfg.conv_kernel_sizes[static_cast<std::size_t>(b)];
            const int f = cfg.conv_filter_counts[static_cast<std::size_t>(b)];
            const int out_len = cfg.conv_out_len(b);
            const int n = out_len * f;
            Real* d_post = cache.d_conv_post.data();
            std::fill(d_post, d_post + n, Real(0));
            maxpool_time_backward(argmax_base + cache.feat_off[static_cast<std::size_t>(b)], f,
                                  d_feat + cache.feat_off[static_cast<std::size_t>(b)], d_post);
            if (cfg.conv_activation == ConvActivation::Relu) {
                const Real* post = post_base + cache.post_off[static_cast<std::size_t>(b)];
                for (int i = 0; i < n; ++i)
                    if (post[i] <= Real(0)) d_post[i] = Real(0);
            }
            conv1d_valid_backward(rows, l, ec, params.conv_w[static_cast<std::size_t>(b)].values.data(), f, k,
                                  d_post, cache.d_char_rows.data(),
                                  params.conv_w[static_cast<std::size_t>(b)].grad.data(),
                                  params.conv_b[static_cast<std::size_t>(b)].grad.data());
        }
        const int* char_row = utt.char_row(t);
        for (int i = 0; i < l; ++i) {
            Real* cgrad = params.char_emb.grad.data() + static_cast<std::size_t>(char_row[i]) * ec;
            const Real* src = cache.d_char_rows.data() + static_cast<std::size_t>(i) * ec;
            for (int j = 0; j < ec; ++j) cgrad[j] += src[j];
        }

        // d_h for the previous step; d_c was already written by the cell backward.
        std::memcpy(cache.d_h.data(), cache.d_xh.data() + d, sizeof(Real) * static_cast<std::size_t>(h));
    }
    return loss;
}

// --- Standalone ops (spec surface; convenience wrappers over the same core) ---

// Char features for one word's id row (length max_word_len). Output width =
// sum of filter counts.
template <class Real>
std::vector<Real> char_features(const int* char_ids, const Parameters<Real>& params) {
    ForwardCache<Real> cache(params.config);
    std::vector<Real> out(static_cast<std::size_t>(params.config.char_feature_width()));
    detail::char_features_at(params, char_ids, cache, 0, out.data());
    return out;
}

// Word embedding (first) concatenated with char features.
template <class Real>
std::vector<Real> word_representation(int word_id, const int* char_ids, const Parameters<Real>& params) {
    const ModelConfig& cfg = params.config;
    if (word_id < 0 || word_id >= cfg.word_vocab_size) throw IndexError("word_representation: word id out of range");
    std::vector<Real> out(static_cast<std::size_t>(cfg.lstm_input_width()));
    const Real* row = params.word_emb.values.data() + static_cast<std::size_t>(word_id) * cfg.word_emb_dim;
    std::copy(row, row + cfg.word_emb_dim, out.begin());
    std::vector<Real> feat = char_features(char_ids, params);
    std::copy(feat.begin(), feat.end(), out.begin() + cfg.word_emb_dim);
    return out;
}

// LSTM hidden state after the last real token (padding is never fed).
template <class Real>
std::vector<Real> encode_sentence(const EncodedUtterance& utt, const Parameters<Real>& params) {
    ForwardCache<Real> cache(params.config);
    forward(utt, params, cache);
    const int h = params.config.lstm_hidden;
    const Real* last = cache.hiddens.data() + static_cast<std::size_t>(utt.true_length - 1) * h;
    return std::vector<Real>(last, last + h);
}

// Probabilities for one utterance (allocating convenience).
template <class Real>
std::vector<Real> forward_probs(const EncodedUtterance& utt, const Parameters<Real>& params) {
    ForwardCache<Real> cache(params.config);
    forward(utt, params, cache);
    return cache.probs;
}

}  // namespace tinyintent
