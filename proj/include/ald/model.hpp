#pragma once

// End-to-end classifier: aspect features -> cross encoders -> gate flow ->
// hierarchical fusion -> MLP head. Aspect tables and graph embeddings are
// trained upstream and enter the model as frozen inputs.

#include "ald/aspects.hpp"
#include "ald/gateflow.hpp"
#include "ald/textgraph.hpp"

namespace ald {

struct ModelConfig {
    EncoderConfig encoder;
    int n_classes = 2;
    CrossMode mode = CrossMode::CB;
    bool use_graph = true;
    int fusion_repeats = 1;
    int mlp_hidden = 32;
    bool use_directed = true;
    bool use_generalised = true;
    bool use_explicit = true;
    bool use_implicit = true;
    int d_directed = 16;
    int d_generalised = 16;
    int d_explicit = 16;
    int d_implicit = 16;
    int graph_dim = 200; // behaviour embedding width

    int d_target() const { return (use_directed ? d_directed : 0) + (use_generalised ? d_generalised : 0); }
    int d_content() const { return (use_explicit ? d_explicit : 0) + (use_implicit ? d_implicit : 0); }

    void validate() const {
        encoder.validate();
        if (n_classes < 2) throw std::invalid_argument("model config: n_classes must be >= 2");
        if (!use_directed && !use_generalised)
            throw std::invalid_argument("model config: at least one target aspect (D or G) required");
        if (!use_explicit && !use_implicit)
            throw std::invalid_argument("model config: at least one content aspect (E or I) required");
        if (fusion_repeats < 1) throw std::invalid_argument("model config: fusion_repeats must be >= 1");
    }

    GateConfig gate_config() const { return GateConfig{encoder.max_seq_len, encoder.d_model, n_classes}; }

    FusionConfig fusion_config() const {
        FusionConfig f;
        f.n_tokens = encoder.max_seq_len;
        f.d_model = encoder.d_model;
        f.n_classes = n_classes;
        f.use_graph = use_graph;
        f.fusion_repeats = fusion_repeats;
        f.mlp_hidden = mlp_hidden;
        return f;
    }

    std::string aspects_string() const {
        std::string s;
        if (use_directed) s += "d,";
        if (use_generalised) s += "g,";
        if (use_explicit) s += "e,";
        if (use_implicit) s += "i,";
        if (!s.empty()) s.pop_back();
        return s;
    }
};

struct ModelInputs {
    AspectPair pair;
    Tensor behaviour; // defined only in graph mode
};

struct ModelOutputs {
    HeadOutputs head;
    GateOutputs content_gate;
    GateOutputs target_gate;
};

class Model {
public:
    ModelConfig config;
    CrossEncoderWeights cross;
    BehaviourEncoderWeights behaviour;
    GateWeights gates;
    FusionWeights fusion;

    static Model init(const ModelConfig& cfg, Rng& rng) {
        cfg.validate();
        Model m;
        m.config = cfg;
        m.cross = init_cross_encoder(cfg.d_target(), cfg.d_content(), cfg.encoder, rng);
        if (cfg.use_graph) m.behaviour = init_behaviour_encoder(cfg.graph_dim, cfg.encoder, rng);
        m.gates = init_gates(cfg.gate_config(), rng);
        m.fusion = init_fusion(cfg.fusion_config(), rng);
        return m;
    }

    detail::NamedParams params() const {
        detail::NamedParams out = cross_encoder_params(cross);
        if (config.use_graph) {
            detail::NamedParams b = behaviour_encoder_params(behaviour);
            out.insert(out.end(), b.begin(), b.end());
        }
        detail::NamedParams g = gate_params(gates);
        out.insert(out.end(), g.begin(), g.end());
        detail::NamedParams f = fusion_params(fusion);
        out.insert(out.end(), f.begin(), f.end());
        return out;
    }

    ModelOutputs forward(const ModelInputs& in, const ForwardState& fs) const {
        EncodedPair enc = encode_pair(in.pair, config.encoder, cross, config.mode, fs);
        ModelOutputs out;
        out.content_gate = content_gate(enc.target_h, enc.content_h, gates);
        out.target_gate = target_gate(enc.content_h, enc.target_h, gates);
        Tensor fused;
        if (config.use_graph) {
            Tensor behaviour_h = encode_behaviour(in.behaviour, in.pair.pad_mask, config.encoder, behaviour, fs);
            fused = hierarchical_fusion(out.content_gate.logits, out.target_gate.logits, &behaviour_h, fusion,
                                        config.fusion_config());
        } else {
            fused = hierarchical_fusion(out.content_gate.logits, out.target_gate.logits, nullptr, fusion,
                                        config.fusion_config());
        }
        out.head = mlp_head(fused, fusion);
        return out;
    }
};

// Frozen per-record feature extraction: lexicon features plus the trained
// generalised / explicit / behaviour tables.
struct FeatureExtractor {
    LexiconSet lexicons;
    EmbeddingTable generalised_table;
    EmbeddingTable explicit_table;
    NodeEmbeddingTable graph_table;
    std::uint64_t directed_hash_seed = 1;

    ModelInputs extract(const ModelConfig& cfg, const TokenSeq& seq) const {
        Tensor d, g, e, i;
        if (cfg.use_directed) d = embed_directed(seq, lexicons, cfg.d_directed, directed_hash_seed);
        if (cfg.use_generalised) g = embed_generalised(seq, generalised_table, cfg.d_generalised);
        if (cfg.use_explicit) e = embed_explicit(seq, explicit_table, cfg.d_explicit);
        if (cfg.use_implicit) i = embed_implicit(seq, lexicons, cfg.d_implicit);

        std::vector<bool> pad(seq.padded.begin(), seq.padded.end());
        ModelInputs in;
        in.pair = build_inputs(cfg.use_directed ? &d : nullptr, cfg.use_generalised ? &g : nullptr,
                               cfg.use_explicit ? &e : nullptr, cfg.use_implicit ? &i : nullptr, seq.size(),
                               std::move(pad));
        if (cfg.use_graph) in.behaviour = lookup_sequence(seq, graph_table, cfg.graph_dim);
        return in;
    }

    ModelInputs extract_text(const ModelConfig& cfg, const std::string& text) const {
        return extract(cfg, tokenize(text, cfg.encoder.max_seq_len));
    }
};

} // namespace ald
