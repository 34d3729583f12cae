#pragma once

// Two-stream transformer encoders over the target and content aspect
// sequences, with three cross-attention wirings: CB swaps the K/V tensors
// between streams at the attention input, CM swaps the feed-forward inputs
// after self-attention, CBM does both. A plain single-stream stack (None)
// encodes the linguistic-behaviour sequence. Post-norm residuals throughout;
// no positional encoding, so outputs are permutation-equivariant over
// unpadded positions.

#include "ald/ops.hpp"

namespace ald {

struct EncoderConfig {
    int num_encoders = 2;      // stacked layers per stream
    int num_heads = 3;
    int hidden_dim = 64;       // feed-forward width
    int d_model = 48;          // shared projection width
    double dropout_rate = 0.5;
    int max_seq_len = 16;

    int head_dim() const { return d_model / num_heads; }

    void validate() const {
        if (num_encoders < 1) throw std::invalid_argument("encoder config: num_encoders must be >= 1");
        if (num_heads < 1) throw std::invalid_argument("encoder config: num_heads must be >= 1");
        if (d_model % num_heads != 0)
            throw std::invalid_argument("encoder config: d_model " + std::to_string(d_model) +
                                        " not divisible by num_heads " + std::to_string(num_heads));
        if (hidden_dim < 1 || max_seq_len < 1) throw std::invalid_argument("encoder config: non-positive dimension");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw std::invalid_argument("encoder config: dropout_rate must be in [0, 1)");
    }
};

enum class CrossMode { None, CB, CM, CBM };

inline const char* cross_mode_name(CrossMode m) {
    switch (m) {
        case CrossMode::None: return "none";
        case CrossMode::CB: return "cb";
        case CrossMode::CM: return "cm";
        case CrossMode::CBM: return "cbm";
    }
    return "?";
}

inline CrossMode cross_mode_from(const std::string& s) {
    if (s == "cb") return CrossMode::CB;
    if (s == "cm") return CrossMode::CM;
    if (s == "cbm") return CrossMode::CBM;
    if (s == "none") return CrossMode::None;
    throw std::invalid_argument("unknown cross mode '" + s + "' (expected cb, cm or cbm)");
}

// Target/content embedding pair with the shared padding mask.
struct AspectPair {
    Tensor target;  // [N x D_T]
    Tensor content; // [N x D_C]
    std::vector<bool> pad_mask;
};

struct EncodedPair {
    Tensor target_h;  // [N x d_model]
    Tensor content_h; // [N x d_model]
};

// T_e = [D ; G], C_e = [E ; broadcast(I)]; absent aspects are skipped but each
// group needs at least one member. I arrives as a single row.
inline AspectPair build_inputs(const Tensor* directed, const Tensor* generalised, const Tensor* explicit_m,
                               const Tensor* implicit_m, int n_tokens, std::vector<bool> pad_mask) {
    auto check_rows = [](const char* name, const Tensor& t, int want) {
        if (t.rows() != want)
            throw std::invalid_argument(std::string("build_inputs: ") + name + " has " + std::to_string(t.rows()) +
                                        " rows, expected " + std::to_string(want));
    };
    Tensor target;
    if (directed) {
        check_rows("directed", *directed, n_tokens);
        target = *directed;
    }
    if (generalised) {
        check_rows("generalised", *generalised, n_tokens);
        target = target.defined() ? concat_cols(target, *generalised) : *generalised;
    }
    Tensor content;
    if (explicit_m) {
        check_rows("explicit", *explicit_m, n_tokens);
        content = *explicit_m;
    }
    if (implicit_m) {
        check_rows("implicit", *implicit_m, 1);
        Tensor broad = broadcast_rows(*implicit_m, n_tokens);
        content = content.defined() ? concat_cols(content, broad) : broad;
    }
    if (!target.defined()) throw std::invalid_argument("build_inputs: no target aspect enabled");
    if (!content.defined()) throw std::invalid_argument("build_inputs: no content aspect enabled");
    if (static_cast<int>(pad_mask.size()) != n_tokens)
        throw std::invalid_argument("build_inputs: pad mask length mismatch");
    return AspectPair{target, content, std::move(pad_mask)};
}

// softmax(Q K^T / sqrt(d_k) + mask_bias) V over one head. Sorted
// accumulation in the value sum keeps output rows bit-identical under key
// permutations.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor* mask_bias = nullptr) {
    if (q.cols() != k.cols()) detail::shape_error("attention", q.shape(), k.shape());
    if (k.rows() != v.rows()) detail::shape_error("attention", k.shape(), v.shape());
    Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
    if (mask_bias) scores = add(scores, *mask_bias);
    return matmul_sorted(softmax(scores), v);
}

// additive key mask: -1e9 on padded key columns
inline Tensor key_mask_bias(const std::vector<bool>& pad_mask, int n_queries) {
    const int n = static_cast<int>(pad_mask.size());
    std::vector<double> bias(static_cast<size_t>(n_queries) * n, 0.0);
    for (int i = 0; i < n_queries; ++i)
        for (int j = 0; j < n; ++j)
            if (pad_mask[j]) bias[static_cast<size_t>(i) * n + j] = -1e9;
    return Tensor::from_data({n_queries, n}, std::move(bias));
}

struct AttentionWeights {
    Tensor wq, wk, wv, wo; // all [d_model x d_model]
};

struct LayerNormWeights {
    Tensor gain, bias; // [1 x d_model]
};

struct FfnWeights {
    Tensor w1, b1, w2, b2; // [d_model x hidden], [1 x hidden], [hidden x d_model], [1 x d_model]
};

struct EncoderLayerWeights {
    AttentionWeights attn;
    LayerNormWeights norm1;
    FfnWeights ffn;
    LayerNormWeights norm2;
};

struct StreamWeights {
    std::vector<EncoderLayerWeights> layers;
};

// one cross encoder: input projections to the shared width plus both streams
struct CrossEncoderWeights {
    Tensor in_proj_target;  // [D_T x d_model]
    Tensor in_proj_content; // [D_C x d_model]
    StreamWeights target;
    StreamWeights content;
};

struct BehaviourEncoderWeights {
    Tensor in_proj; // [D_LBG x d_model]
    StreamWeights stream;
};

namespace detail {

inline EncoderLayerWeights init_layer(const EncoderConfig& cfg, Rng& rng) {
    const int d = cfg.d_model, h = cfg.hidden_dim;
    EncoderLayerWeights w;
    w.attn.wq = glorot_uniform({d, d}, rng, d, d);
    w.attn.wk = glorot_uniform({d, d}, rng, d, d);
    w.attn.wv = glorot_uniform({d, d}, rng, d, d);
    w.attn.wo = glorot_uniform({d, d}, rng, d, d);
    w.norm1.gain = Tensor::from_data({1, d}, std::vector<double>(d, 1.0), true);
    w.norm1.bias = Tensor::zeros({1, d}, true);
    w.ffn.w1 = glorot_uniform({d, h}, rng, d, h);
    w.ffn.b1 = Tensor::zeros({1, h}, true);
    w.ffn.w2 = glorot_uniform({h, d}, rng, h, d);
    w.ffn.b2 = Tensor::zeros({1, d}, true);
    w.norm2.gain = Tensor::from_data({1, d}, std::vector<double>(d, 1.0), true);
    w.norm2.bias = Tensor::zeros({1, d}, true);
    return w;
}

inline StreamWeights init_stream(const EncoderConfig& cfg, Rng& rng) {
    StreamWeights s;
    for (int l = 0; l < cfg.num_encoders; ++l) s.layers.push_back(init_layer(cfg, rng));
    return s;
}

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

inline void collect_stream(const std::string& prefix, const StreamWeights& s, NamedParams& out) {
    for (size_t l = 0; l < s.layers.size(); ++l) {
        const std::string base = prefix + ".layer" + std::to_string(l);
        const EncoderLayerWeights& w = s.layers[l];
        out.emplace_back(base + ".attn.wq", w.attn.wq);
        out.emplace_back(base + ".attn.wk", w.attn.wk);
        out.emplace_back(base + ".attn.wv", w.attn.wv);
        out.emplace_back(base + ".attn.wo", w.attn.wo);
        out.emplace_back(base + ".norm1.gain", w.norm1.gain);
        out.emplace_back(base + ".norm1.bias", w.norm1.bias);
        out.emplace_back(base + ".ffn.w1", w.ffn.w1);
        out.emplace_back(base + ".ffn.b1", w.ffn.b1);
        out.emplace_back(base + ".ffn.w2", w.ffn.w2);
        out.emplace_back(base + ".ffn.b2", w.ffn.b2);
        out.emplace_back(base + ".norm2.gain", w.norm2.gain);
        out.emplace_back(base + ".norm2.bias", w.norm2.bias);
    }
}

} // namespace detail

inline CrossEncoderWeights init_cross_encoder(int d_target, int d_content, const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    CrossEncoderWeights w;
    w.in_proj_target = glorot_uniform({d_target, cfg.d_model}, rng, d_target, cfg.d_model);
    w.in_proj_content = glorot_uniform({d_content, cfg.d_model}, rng, d_content, cfg.d_model);
    w.target = detail::init_stream(cfg, rng);
    w.content = detail::init_stream(cfg, rng);
    return w;
}

inline BehaviourEncoderWeights init_behaviour_encoder(int d_input, const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    BehaviourEncoderWeights w;
    w.in_proj = glorot_uniform({d_input, cfg.d_model}, rng, d_input, cfg.d_model);
    w.stream = detail::init_stream(cfg, rng);
    return w;
}

inline detail::NamedParams cross_encoder_params(const CrossEncoderWeights& w, const std::string& prefix = "cross") {
    detail::NamedParams out;
    out.emplace_back(prefix + ".in_proj_target", w.in_proj_target);
    out.emplace_back(prefix + ".in_proj_content", w.in_proj_content);
    detail::collect_stream(prefix + ".target", w.target, out);
    detail::collect_stream(prefix + ".content", w.content, out);
    return out;
}

inline detail::NamedParams behaviour_encoder_params(const BehaviourEncoderWeights& w,
                                                    const std::string& prefix = "behaviour") {
    detail::NamedParams out;
    out.emplace_back(prefix + ".in_proj", w.in_proj);
    detail::collect_stream(prefix + ".stream", w.stream, out);
    return out;
}

// Run-time switches threaded through every forward pass.
struct ForwardState {
    Rng* rng = nullptr;
    bool train = false;
    double dropout_rate = 0.0;

    Tensor maybe_dropout(const Tensor& x) const {
        if (!train || dropout_rate == 0.0) return x;
        if (!rng) throw std::runtime_error("forward: training mode requires an rng");
        return dropout(x, dropout_rate, *rng, true);
    }
};

namespace detail {

struct ProjectedQkv {
    Tensor q, k, v;
};

inline ProjectedQkv project_qkv(const Tensor& x, const AttentionWeights& w) {
    return ProjectedQkv{matmul(x, w.wq), matmul(x, w.wk), matmul(x, w.wv)};
}

// heads are column slices of the shared d_model width
inline Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& out_proj,
                                   int num_heads, const Tensor& mask_bias) {
    const int d_k = q.cols() / num_heads;
    Tensor heads;
    for (int h = 0; h < num_heads; ++h) {
        Tensor head = attention(slice_cols(q, h * d_k, d_k), slice_cols(k, h * d_k, d_k),
                                slice_cols(v, h * d_k, d_k), &mask_bias);
        heads = h == 0 ? head : concat_cols(heads, head);
    }
    return matmul(heads, out_proj);
}

inline Tensor ffn_forward(const Tensor& x, const FfnWeights& w) {
    return add(matmul(relu(add(matmul(x, w.w1), w.b1)), w.w2), w.b2);
}

} // namespace detail

// One two-stream layer. Each stream projects Q/K/V from its own input with
// its own weights; CB then hands the projected K/V pair to the opposite
// stream's attention, CM swaps the feed-forward inputs, CBM does both.
// Residuals and norms stay within their own stream.
inline std::pair<Tensor, Tensor> encoder_layer(const Tensor& target_in, const Tensor& content_in,
                                               const EncoderLayerWeights& wt, const EncoderLayerWeights& wc,
                                               CrossMode mode, const EncoderConfig& cfg, const Tensor& mask_bias,
                                               const ForwardState& fs) {
    if (mode == CrossMode::None && target_in.node != content_in.node)
        throw std::invalid_argument("encoder_layer: mode none is single-stream");

    detail::ProjectedQkv t_qkv = detail::project_qkv(target_in, wt.attn);

    if (mode == CrossMode::None) {
        Tensor t_attn = detail::multi_head_attention(t_qkv.q, t_qkv.k, t_qkv.v, wt.attn.wo, cfg.num_heads,
                                                     mask_bias);
        Tensor t_mha = layer_norm(add(fs.maybe_dropout(t_attn), target_in), wt.norm1.gain, wt.norm1.bias);
        Tensor out = layer_norm(add(fs.maybe_dropout(detail::ffn_forward(t_mha, wt.ffn)), t_mha), wt.norm2.gain,
                                wt.norm2.bias);
        return {out, out};
    }

    detail::ProjectedQkv c_qkv = detail::project_qkv(content_in, wc.attn);
    const bool cross_attn = mode == CrossMode::CB || mode == CrossMode::CBM;
    const detail::ProjectedQkv& kv_for_target = cross_attn ? c_qkv : t_qkv;
    const detail::ProjectedQkv& kv_for_content = cross_attn ? t_qkv : c_qkv;

    Tensor t_attn = detail::multi_head_attention(t_qkv.q, kv_for_target.k, kv_for_target.v, wt.attn.wo,
                                                 cfg.num_heads, mask_bias);
    Tensor t_mha = layer_norm(add(fs.maybe_dropout(t_attn), target_in), wt.norm1.gain, wt.norm1.bias);

    Tensor c_attn = detail::multi_head_attention(c_qkv.q, kv_for_content.k, kv_for_content.v, wc.attn.wo,
                                                 cfg.num_heads, mask_bias);
    Tensor c_mha = layer_norm(add(fs.maybe_dropout(c_attn), content_in), wc.norm1.gain, wc.norm1.bias);

    const bool cross_ffn = mode == CrossMode::CM || mode == CrossMode::CBM;
    const Tensor& ffn_in_target = cross_ffn ? c_mha : t_mha;
    const Tensor& ffn_in_content = cross_ffn ? t_mha : c_mha;

    Tensor t_out = layer_norm(add(fs.maybe_dropout(detail::ffn_forward(ffn_in_target, wt.ffn)), t_mha),
                              wt.norm2.gain, wt.norm2.bias);
    Tensor c_out = layer_norm(add(fs.maybe_dropout(detail::ffn_forward(ffn_in_content, wc.ffn)), c_mha),
                              wc.norm2.gain, wc.norm2.bias);
    return {t_out, c_out};
}

namespace detail {

inline Tensor zero_padded_rows(const Tensor& x, const std::vector<bool>& pad_mask) {
    bool any = false;
    for (bool p : pad_mask) any = any || p;
    if (!any) return x;
    std::vector<double> m(x.numel(), 1.0);
    for (int i = 0; i < x.rows(); ++i)
        if (pad_mask[i])
            std::fill(m.begin() + static_cast<size_t>(i) * x.cols(),
                      m.begin() + static_cast<size_t>(i + 1) * x.cols(), 0.0);
    return mul(x, Tensor::from_data(x.shape(), std::move(m)));
}

} // namespace detail

// Full two-stream stack: project both streams to d_model, then num_encoders
// layers in the requested wiring. Padded output rows are zeroed for the gates.
inline EncodedPair encode_pair(const AspectPair& pair, const EncoderConfig& cfg, const CrossEncoderWeights& w,
                               CrossMode mode, const ForwardState& fs) {
    cfg.validate();
    if (mode == CrossMode::None)
        throw std::invalid_argument("encode_pair: mode none is reserved for the behaviour encoder");
    const int n = pair.target.rows();
    if (pair.content.rows() != n) detail::shape_error("encode_pair", pair.target.shape(), pair.content.shape());
    if (n > cfg.max_seq_len)
        throw std::invalid_argument("encode_pair: sequence length " + std::to_string(n) + " exceeds maximum " +
                                    std::to_string(cfg.max_seq_len));

    Tensor t = matmul(pair.target, w.in_proj_target);
    Tensor c = matmul(pair.content, w.in_proj_content);
    Tensor mask_bias = key_mask_bias(pair.pad_mask, n);
    for (int l = 0; l < cfg.num_encoders; ++l)
        std::tie(t, c) = encoder_layer(t, c, w.target.layers[l], w.content.layers[l], mode, cfg, mask_bias, fs);
    return EncodedPair{detail::zero_padded_rows(t, pair.pad_mask), detail::zero_padded_rows(c, pair.pad_mask)};
}

// Standard single-stream stack over the behaviour sequence G_e.
inline Tensor encode_behaviour(const Tensor& behaviour_seq, const std::vector<bool>& pad_mask,
                               const EncoderConfig& cfg, const BehaviourEncoderWeights& w, const ForwardState& fs) {
    cfg.validate();
    if (behaviour_seq.cols() != w.in_proj.rows())
        throw std::invalid_argument("encode_behaviour: input width " + std::to_string(behaviour_seq.cols()) +
                                    " does not match projection " + shape_str(w.in_proj.shape()));
    const int n = behaviour_seq.rows();
    if (n > cfg.max_seq_len)
        throw std::invalid_argument("encode_behaviour: sequence length exceeds maximum");
    Tensor h = matmul(behaviour_seq, w.in_proj);
    Tensor mask_bias = key_mask_bias(pad_mask, n);
    for (int l = 0; l < cfg.num_encoders; ++l) {
        auto [out, out2] = encoder_layer(h, h, w.stream.layers[l], w.stream.layers[l], CrossMode::None, cfg,
                                         mask_bias, fs);
        h = out;
    }
    return detail::zero_padded_rows(h, pad_mask);
}

} // namespace ald
