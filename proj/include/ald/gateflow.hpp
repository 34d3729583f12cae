#pragma once

// Bi-directional aspect gate flow and the hierarchical fusion head. Each gate
// flattens one stream into a class-probability vector, broadcasts it over the
// sequence and concatenates it into the opposite stream before a final dense.
// Fusion joins the gate logits with the behaviour sequence through two conv
// stacks (or concatenates the logits directly without the graph), and a
// three-layer MLP produces the class distribution.

#include "ald/encoder.hpp"

namespace ald {

struct GateConfig {
    int n_tokens = 16;  // fixed sequence length N
    int d_model = 48;   // encoder output width
    int n_classes = 2;  // D
};

struct GateWeights {
    // content gate: target stream produces the probability, content absorbs it
    Tensor gate_from_target_w, gate_from_target_b; // [(N*d_model) x D], [1 x D]
    Tensor out_content_w, out_content_b;           // [(N*(D+d_model)) x D], [1 x D]
    // target gate: mirror image
    Tensor gate_from_content_w, gate_from_content_b;
    Tensor out_target_w, out_target_b;
};

inline GateWeights init_gates(const GateConfig& cfg, Rng& rng) {
    const int flat_in = cfg.n_tokens * cfg.d_model;
    const int flat_aug = cfg.n_tokens * (cfg.n_classes + cfg.d_model);
    GateWeights w;
    w.gate_from_target_w = glorot_uniform({flat_in, cfg.n_classes}, rng, flat_in, cfg.n_classes);
    w.gate_from_target_b = Tensor::zeros({1, cfg.n_classes}, true);
    w.out_content_w = glorot_uniform({flat_aug, cfg.n_classes}, rng, flat_aug, cfg.n_classes);
    w.out_content_b = Tensor::zeros({1, cfg.n_classes}, true);
    w.gate_from_content_w = glorot_uniform({flat_in, cfg.n_classes}, rng, flat_in, cfg.n_classes);
    w.gate_from_content_b = Tensor::zeros({1, cfg.n_classes}, true);
    w.out_target_w = glorot_uniform({flat_aug, cfg.n_classes}, rng, flat_aug, cfg.n_classes);
    w.out_target_b = Tensor::zeros({1, cfg.n_classes}, true);
    return w;
}

inline detail::NamedParams gate_params(const GateWeights& w, const std::string& prefix = "gates") {
    return {{prefix + ".gate_from_target_w", w.gate_from_target_w},
            {prefix + ".gate_from_target_b", w.gate_from_target_b},
            {prefix + ".out_content_w", w.out_content_w},
            {prefix + ".out_content_b", w.out_content_b},
            {prefix + ".gate_from_content_w", w.gate_from_content_w},
            {prefix + ".gate_from_content_b", w.gate_from_content_b},
            {prefix + ".out_target_w", w.out_target_w},
            {prefix + ".out_target_b", w.out_target_b}};
}

struct GateOutputs {
    Tensor gate_prob; // P_Th or P_Ch, [1 x D] on the simplex
    Tensor augmented; // O_C or O_T, [N x (D + d_model)]
    Tensor logits;    // P_C or P_T, [1 x D] pre-softmax
};

namespace detail {

inline GateOutputs gate_flow(const Tensor& driver, const Tensor& receiver, const Tensor& gate_w,
                             const Tensor& gate_b, const Tensor& out_w, const Tensor& out_b) {
    if (driver.rows() != receiver.rows()) shape_error("gate", driver.shape(), receiver.shape());
    GateOutputs out;
    out.gate_prob = softmax(add(matmul(flatten(driver), gate_w), gate_b));
    Tensor broadcast = broadcast_rows(out.gate_prob, receiver.rows());
    out.augmented = concat_cols(broadcast, receiver);
    out.logits = add(matmul(flatten(out.augmented), out_w), out_b);
    return out;
}

} // namespace detail

// P_Th = softmax(dense(flatten(T_h))); O_C = [broadcast(P_Th) ; C_h]; P_C = dense(flatten(O_C))
inline GateOutputs content_gate(const Tensor& target_h, const Tensor& content_h, const GateWeights& w) {
    return detail::gate_flow(target_h, content_h, w.gate_from_target_w, w.gate_from_target_b, w.out_content_w,
                             w.out_content_b);
}

// mirror image with the roles swapped
inline GateOutputs target_gate(const Tensor& content_h, const Tensor& target_h, const GateWeights& w) {
    return detail::gate_flow(content_h, target_h, w.gate_from_content_w, w.gate_from_content_b, w.out_target_w,
                             w.out_target_b);
}

struct FusionConfig {
    int n_tokens = 16;
    int d_model = 48;
    int n_classes = 2;
    bool use_graph = true;
    int fusion_repeats = 1; // stacked conv+relu blocks per branch
    int mlp_hidden = 32;
    int conv_kernel = 3;

    int fused_width() const { return use_graph ? 2 * d_model : 2 * n_classes; }
};

struct ConvBlock {
    Tensor w; // [K x Cin x Cout]
    Tensor b; // [1 x Cout]
};

struct FusionWeights {
    std::vector<ConvBlock> content_branch;
    std::vector<ConvBlock> target_branch;
    Tensor mlp_w1, mlp_b1; // [F x H]
    Tensor mlp_w2, mlp_b2; // [H x H]
    Tensor mlp_w3, mlp_b3; // [H x D]
};

inline FusionWeights init_fusion(const FusionConfig& cfg, Rng& rng) {
    if (cfg.fusion_repeats < 1) throw std::invalid_argument("fusion: repeats must be >= 1");
    FusionWeights w;
    if (cfg.use_graph) {
        const int in_ch = cfg.n_classes + cfg.d_model;
        for (auto* branch : {&w.content_branch, &w.target_branch}) {
            for (int blk = 0; blk < cfg.fusion_repeats; ++blk) {
                const int cin = blk == 0 ? in_ch : cfg.d_model;
                ConvBlock cb;
                cb.w = glorot_uniform({cfg.conv_kernel, cin, cfg.d_model}, rng, cfg.conv_kernel * cin, cfg.d_model);
                cb.b = Tensor::zeros({1, cfg.d_model}, true);
                branch->push_back(std::move(cb));
            }
        }
    }
    const int fused = cfg.fused_width();
    w.mlp_w1 = glorot_uniform({fused, cfg.mlp_hidden}, rng, fused, cfg.mlp_hidden);
    w.mlp_b1 = Tensor::zeros({1, cfg.mlp_hidden}, true);
    w.mlp_w2 = glorot_uniform({cfg.mlp_hidden, cfg.mlp_hidden}, rng, cfg.mlp_hidden, cfg.mlp_hidden);
    w.mlp_b2 = Tensor::zeros({1, cfg.mlp_hidden}, true);
    w.mlp_w3 = glorot_uniform({cfg.mlp_hidden, cfg.n_classes}, rng, cfg.mlp_hidden, cfg.n_classes);
    w.mlp_b3 = Tensor::zeros({1, cfg.n_classes}, true);
    return w;
}

inline detail::NamedParams fusion_params(const FusionWeights& w, const std::string& prefix = "fusion") {
    detail::NamedParams out;
    auto branch = [&out, &prefix](const char* name, const std::vector<ConvBlock>& blocks) {
        for (size_t i = 0; i < blocks.size(); ++i) {
            out.emplace_back(prefix + "." + name + ".conv" + std::to_string(i) + ".w", blocks[i].w);
            out.emplace_back(prefix + "." + name + ".conv" + std::to_string(i) + ".b", blocks[i].b);
        }
    };
    branch("content", w.content_branch);
    branch("target", w.target_branch);
    out.emplace_back(prefix + ".mlp.w1", w.mlp_w1);
    out.emplace_back(prefix + ".mlp.b1", w.mlp_b1);
    out.emplace_back(prefix + ".mlp.w2", w.mlp_w2);
    out.emplace_back(prefix + ".mlp.b2", w.mlp_b2);
    out.emplace_back(prefix + ".mlp.w3", w.mlp_w3);
    out.emplace_back(prefix + ".mlp.b3", w.mlp_b3);
    return out;
}

namespace detail {

inline Tensor conv_branch(const Tensor& input, const std::vector<ConvBlock>& blocks) {
    Tensor x = input;
    for (const ConvBlock& blk : blocks) x = relu(conv1d(x, blk.w, blk.b));
    return maxpool_tokens(x);
}

} // namespace detail

// With the graph: each branch runs [broadcast(gate logits) ; P_G] through its
// conv stack and pools over tokens. Without it the two logit vectors are
// concatenated directly.
inline Tensor hierarchical_fusion(const Tensor& content_logits, const Tensor& target_logits,
                                  const Tensor* behaviour_seq, const FusionWeights& w, const FusionConfig& cfg) {
    if (cfg.fusion_repeats < 1) throw std::invalid_argument("hierarchical_fusion: repeats must be >= 1");
    if (cfg.use_graph) {
        if (!behaviour_seq)
            throw std::invalid_argument("hierarchical_fusion: graph mode needs the behaviour sequence");
        const int n = behaviour_seq->rows();
        Tensor content_in = concat_cols(broadcast_rows(content_logits, n), *behaviour_seq);
        Tensor target_in = concat_cols(broadcast_rows(target_logits, n), *behaviour_seq);
        Tensor pooled_content = detail::conv_branch(content_in, w.content_branch);
        Tensor pooled_target = detail::conv_branch(target_in, w.target_branch);
        return flatten(concat_cols(pooled_content, pooled_target));
    }
    return flatten(concat_cols(content_logits, target_logits));
}

struct HeadOutputs {
    Tensor logits; // [1 x D], feeds the training loss
    Tensor z;      // softmax(logits), the class distribution
};

// L1 = relu(W1 F + b1); L2 = relu(W2 L1 + b2); Z = softmax(W3 L2 + b3)
inline HeadOutputs mlp_head(const Tensor& fused, const FusionWeights& w) {
    Tensor l1 = relu(add(matmul(fused, w.mlp_w1), w.mlp_b1));
    Tensor l2 = relu(add(matmul(l1, w.mlp_w2), w.mlp_b2));
    HeadOutputs out;
    out.logits = add(matmul(l2, w.mlp_w3), w.mlp_b3);
    out.z = softmax(out.logits);
    return out;
}

} // namespace ald
