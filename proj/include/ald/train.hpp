#pragma once

// Upstream feature preparation (debias / dictionary-pair / GCN training),
// minibatch Adam training of the classifier, and evaluation.

#include "ald/data.hpp"
#include "ald/metrics.hpp"
#include "ald/model.hpp"

#include <ostream>

namespace ald {

struct TrainConfig {
    ModelConfig model;
    double lr = 1e-3;
    int epochs = 30;
    int batch_size = 16;
    std::uint64_t seed = 1;
    double val_fraction = 0.1;
    DebiasConfig debias;
    DictEmbedConfig dict_embed;
    GcnConfig gcn;
    std::string preset; // informational echo

    void validate() const {
        model.validate();
        if (lr <= 0.0) throw std::invalid_argument("train config: lr must be positive");
        if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
        if (val_fraction < 0.0 || val_fraction >= 1.0)
            throw std::invalid_argument("train config: val_fraction must be in [0, 1)");
    }
};

class Adam {
public:
    Adam(detail::NamedParams params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto& [name, p] : params_) {
            m_.emplace_back(p.numel(), 0.0);
            v_.emplace_back(p.numel(), 0.0);
        }
    }

    void zero_grad() {
        for (auto& [name, p] : params_) p.zero_grad();
    }

    // applies one update from the accumulated gradients times grad_scale
    void step(double grad_scale = 1.0) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = params_[i].second;
            if (p.node->grad.size() != p.numel()) continue; // no gradient reached this tensor
            for (size_t k = 0; k < p.numel(); ++k) {
                const double g = p.node->grad[k] * grad_scale;
                m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
                v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
                p.data()[k] -= lr_ * (m_[i][k] / bc1) / (std::sqrt(v_[i][k] / bc2) + eps_);
            }
        }
    }

private:
    detail::NamedParams params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

struct PreparedFeatures {
    FeatureExtractor extractor;
    std::string gcn_label_source; // empty when the graph is disabled
    double gcn_train_accuracy = 0.0;
};

inline std::set<std::string> corpus_vocabulary(const Dataset& ds, const std::vector<int>& indices) {
    std::set<std::string> vocab;
    for (int i : indices)
        for (const std::string& t : tokenize_full(ds.records[static_cast<size_t>(i)].text).tokens) vocab.insert(t);
    return vocab;
}

namespace detail {

inline EmbeddingTable seeded_table(const std::set<std::string>& vocab, int dim, std::uint64_t seed) {
    Rng rng(seed);
    EmbeddingTable table(dim);
    for (const std::string& w : vocab) {
        std::vector<double> v(dim);
        for (double& x : v) x = rand_uniform(rng, -0.5, 0.5);
        table.set(w, v);
    }
    return table;
}

} // namespace detail

// Trains the frozen upstream embedders on the training split only.
inline PreparedFeatures prepare_features(const Dataset& ds, const std::vector<int>& train_indices,
                                         const TrainConfig& cfg, const LexiconSet& lex,
                                         const DefinitionDictionary& dict) {
    PreparedFeatures out;
    out.extractor.lexicons = lex;
    out.extractor.directed_hash_seed = cfg.seed;
    const std::set<std::string> vocab = corpus_vocabulary(ds, train_indices);

    if (cfg.model.use_generalised) {
        std::set<std::string> gen_vocab = vocab;
        for (const auto* s : {&lex.v_masculine, &lex.v_feminine, &lex.v_neutral, &lex.v_stereotype})
            gen_vocab.insert(s->begin(), s->end());
        EmbeddingTable init = detail::seeded_table(gen_vocab, cfg.model.d_generalised, cfg.seed * 31 + 1);
        out.extractor.generalised_table = train_debias(init, lex, cfg.debias);
    }
    if (cfg.model.use_explicit) {
        WordPairSet pairs = extract_dict_pairs(dict);
        std::set<std::string> exp_vocab = vocab;
        for (const auto& [head, def] : dict.entries) exp_vocab.insert(head);
        exp_vocab.insert(lex.profanity.begin(), lex.profanity.end());
        DictEmbedConfig dcfg = cfg.dict_embed;
        dcfg.dim = cfg.model.d_explicit;
        dcfg.seed = cfg.seed * 31 + 2;
        out.extractor.explicit_table = train_dict_embeddings(pairs, exp_vocab, dcfg);
    }
    if (cfg.model.use_graph) {
        Corpus corpus;
        for (int i : train_indices) {
            const DatasetRecord& r = ds.records[static_cast<size_t>(i)];
            corpus.docs.push_back(CorpusDoc{"doc" + std::to_string(i), tokenize_full(r.text), r.label, r.user_id});
        }
        GcnConfig gcfg = cfg.gcn;
        gcfg.embed_dim = cfg.model.graph_dim;
        gcfg.seed = cfg.seed * 31 + 3;
        GcnResult gcn = train_gcn(corpus, gcfg);
        out.extractor.graph_table = std::move(gcn.table);
        out.gcn_label_source = gcn.label_source;
        out.gcn_train_accuracy = gcn.train_accuracy;
    }
    return out;
}

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_weighted_f1 = 0.0;
};

struct TrainResult {
    Model model;
    FeatureExtractor extractor;
    std::vector<std::string> label_names;
    std::vector<EpochLog> log;
    double final_train_accuracy = 0.0;
    std::string gcn_label_source;
    double gcn_train_accuracy = 0.0;
};

inline int predict_class(const Model& model, const ModelInputs& in) {
    NoGradGuard ng;
    ForwardState fs; // eval mode
    Tensor z = model.forward(in, fs).head.z;
    int best = 0;
    for (int j = 1; j < z.cols(); ++j)
        if (z.at(0, j) > z.at(0, best)) best = j;
    return best;
}

inline MetricsReport evaluate_cached(const Model& model, const std::vector<ModelInputs>& inputs,
                                     const std::vector<int>& labels, const std::vector<std::string>& label_names) {
    if (inputs.empty()) throw std::invalid_argument("evaluate: empty split");
    std::vector<int> pred;
    pred.reserve(inputs.size());
    for (const ModelInputs& in : inputs) pred.push_back(predict_class(model, in));
    return compute_metrics(labels, pred, label_names);
}

inline MetricsReport evaluate_records(const Model& model, const FeatureExtractor& extractor, const Dataset& ds,
                                      const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("evaluate: empty split");
    std::vector<ModelInputs> inputs;
    std::vector<int> labels;
    for (int i : indices) {
        const DatasetRecord& r = ds.records[static_cast<size_t>(i)];
        inputs.push_back(extractor.extract_text(model.config, r.text));
        labels.push_back(ds.label_id(r.label));
    }
    return evaluate_cached(model, inputs, labels, ds.label_names);
}

inline TrainResult train(const TrainConfig& cfg_in, const Dataset& ds, std::ostream* log_stream = nullptr,
                         const LexiconSet& lex = default_lexicons(),
                         const DefinitionDictionary& dict = default_definition_dictionary()) {
    TrainConfig cfg = cfg_in;
    cfg.model.n_classes = static_cast<int>(ds.label_names.size());
    cfg.validate();

    const DatasetSplit split = split_dataset(ds, cfg.val_fraction, cfg.seed);
    if (split.train_indices.empty()) throw std::invalid_argument("train: empty training split");

    PreparedFeatures prepared = prepare_features(ds, split.train_indices, cfg, lex, dict);

    TrainResult result;
    result.extractor = std::move(prepared.extractor);
    result.label_names = ds.label_names;
    result.gcn_label_source = prepared.gcn_label_source;
    result.gcn_train_accuracy = prepared.gcn_train_accuracy;

    Rng init_rng(cfg.seed * 97 + 5);
    result.model = Model::init(cfg.model, init_rng);

    // frozen features: extract once per record
    auto cache_inputs = [&](const std::vector<int>& indices, std::vector<ModelInputs>& inputs,
                            std::vector<int>& labels) {
        for (int i : indices) {
            const DatasetRecord& r = ds.records[static_cast<size_t>(i)];
            inputs.push_back(result.extractor.extract_text(cfg.model, r.text));
            labels.push_back(ds.label_id(r.label));
        }
    };
    std::vector<ModelInputs> train_inputs, val_inputs;
    std::vector<int> train_labels, val_labels;
    cache_inputs(split.train_indices, train_inputs, train_labels);
    cache_inputs(split.val_indices, val_inputs, val_labels);

    Adam optimizer(result.model.params(), cfg.lr);
    Rng train_rng(cfg.seed * 97 + 6);
    std::vector<size_t> order(train_inputs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_inplace(order, train_rng);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            optimizer.zero_grad();
            for (size_t b = start; b < end; ++b) {
                ForwardState fs{&train_rng, true, cfg.model.encoder.dropout_rate};
                ModelOutputs out = result.model.forward(train_inputs[order[b]], fs);
                Tensor loss = cross_entropy_softmax(out.head.logits, {train_labels[order[b]]});
                const double value = loss.item();
                if (!std::isfinite(value))
                    throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                             ", record " + std::to_string(order[b]));
                epoch_loss += value;
                loss.backward();
            }
            optimizer.step(1.0 / static_cast<double>(end - start));
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = epoch_loss / static_cast<double>(train_inputs.size());
        if (!val_inputs.empty())
            log.val_weighted_f1 = evaluate_cached(result.model, val_inputs, val_labels, ds.label_names).weighted_f1;
        result.log.push_back(log);
        if (log_stream)
            *log_stream << "epoch " << epoch << " train_loss " << log.train_loss << " val_weighted_f1 "
                        << log.val_weighted_f1 << "\n";
    }

    int correct = 0;
    for (size_t i = 0; i < train_inputs.size(); ++i)
        if (predict_class(result.model, train_inputs[i]) == train_labels[i]) ++correct;
    result.final_train_accuracy = train_inputs.empty() ? 0.0 : static_cast<double>(correct) / train_inputs.size();
    return result;
}

} // namespace ald
