#pragma once

// Heterogeneous word-document graph (self-loops, TF-IDF doc-word edges,
// positive PMI word-word edges over sliding windows) and the two-layer GCN
// trained on document labels; its first-layer activations are the
// linguistic-behaviour word embeddings.

#include "ald/lexicon.hpp"
#include "ald/ops.hpp"
#include "ald/text.hpp"

#include <optional>

namespace ald {

struct CorpusDoc {
    std::string doc_id;
    TokenSeq seq;
    std::string label;
    std::string user_id; // empty when the source provides none
};

struct Corpus {
    std::vector<CorpusDoc> docs;

    void validate_ids() const {
        if (docs.empty()) throw std::invalid_argument("corpus: empty");
        std::set<std::string> ids;
        for (const CorpusDoc& d : docs)
            if (!ids.insert(d.doc_id).second)
                throw std::invalid_argument("corpus: duplicate doc_id '" + d.doc_id + "'");
    }

    // graph construction additionally needs at least two documents
    void validate() const {
        validate_ids();
        if (docs.size() < 2) throw std::invalid_argument("corpus: at least 2 documents required");
    }
};

struct VocabIndex {
    std::vector<std::string> doc_ids; // node indices [0, n_docs)
    std::vector<std::string> words;   // node indices [n_docs, n_docs + n_words)
    std::map<std::string, int> doc_node;
    std::map<std::string, int> word_node;

    int n_docs() const { return static_cast<int>(doc_ids.size()); }
    int n_words() const { return static_cast<int>(words.size()); }
    int n_nodes() const { return n_docs() + n_words(); }
};

struct GraphMatrices {
    int n = 0;
    std::vector<double> adj;      // symmetric, self-loops weight 1
    std::vector<double> adj_norm; // D^{-1/2} A D^{-1/2}

    double a(int i, int j) const { return adj[static_cast<size_t>(i) * n + j]; }
    double a_norm(int i, int j) const { return adj_norm[static_cast<size_t>(i) * n + j]; }
};

namespace detail {

// Per-corpus counts backing TF-IDF and sliding-window PMI. Windows are every
// contiguous span of length min(window, doc length), stride 1, never crossing
// document boundaries; padded positions are ignored.
struct CorpusCounts {
    int window = 0;
    std::map<std::string, std::map<std::string, int>> term_count; // doc_id -> word -> tf
    std::map<std::string, int> doc_freq;                          // word -> #docs containing it
    std::map<std::string, long long> total_count;                 // word -> corpus frequency
    long long n_windows = 0;
    std::map<std::string, long long> window_count;                // word -> #windows containing it
    std::map<WordPair, long long> pair_window_count;              // unordered pair -> #windows with both

    static std::vector<std::string> real_tokens(const TokenSeq& seq) {
        std::vector<std::string> out;
        for (int i = 0; i < seq.size(); ++i)
            if (!seq.padded[i] && !seq.tokens[i].empty()) out.push_back(seq.tokens[i]);
        return out;
    }

    static CorpusCounts build(const Corpus& corpus, int window) {
        if (window < 1) throw std::invalid_argument("pmi: window must be >= 1");
        CorpusCounts c;
        c.window = window;
        for (const CorpusDoc& doc : corpus.docs) {
            const std::vector<std::string> toks = real_tokens(doc.seq);
            auto& tf = c.term_count[doc.doc_id];
            for (const std::string& t : toks) {
                ++tf[t];
                ++c.total_count[t];
            }
            for (const auto& [w, n] : tf) ++c.doc_freq[w];

            if (toks.empty()) continue;
            const int len = static_cast<int>(toks.size());
            const int span = std::min(window, len);
            const int first = 0, last = len - span;
            for (int s = first; s <= last; ++s) {
                ++c.n_windows;
                std::set<std::string> seen(toks.begin() + s, toks.begin() + s + span);
                for (const std::string& w : seen) ++c.window_count[w];
                for (auto it = seen.begin(); it != seen.end(); ++it)
                    for (auto jt = std::next(it); jt != seen.end(); ++jt)
                        ++c.pair_window_count[WordPair(*it, *jt)];
            }
        }
        return c;
    }
};

} // namespace detail

// tf * ln(|docs| / df); zero-weight pairs produce no edge (returned as 0)
inline double tfidf(const Corpus& corpus, const std::string& doc_id, const std::string& word) {
    corpus.validate_ids();
    const detail::CorpusCounts c = detail::CorpusCounts::build(corpus, 1);
    auto doc_it = c.term_count.find(doc_id);
    if (doc_it == c.term_count.end()) throw std::invalid_argument("tfidf: unknown document '" + doc_id + "'");
    auto df_it = c.doc_freq.find(word);
    if (df_it == c.doc_freq.end()) throw std::invalid_argument("tfidf: unknown word '" + word + "'");
    auto tf_it = doc_it->second.find(word);
    const double tf = tf_it == doc_it->second.end() ? 0.0 : tf_it->second;
    const double idf = std::log(static_cast<double>(corpus.docs.size()) / df_it->second);
    return tf * idf;
}

// Positive pointwise mutual information over sliding windows; absent when the
// words never co-occur or PMI <= 0, and for identical words.
inline std::optional<double> pmi(const Corpus& corpus, const std::string& word_i, const std::string& word_j,
                                 int window = 20) {
    corpus.validate_ids();
    if (word_i == word_j) return std::nullopt;
    const detail::CorpusCounts c = detail::CorpusCounts::build(corpus, window);
    auto pair_it = c.pair_window_count.find(WordPair(word_i, word_j));
    if (pair_it == c.pair_window_count.end()) return std::nullopt;
    const double p_ij = static_cast<double>(pair_it->second) / c.n_windows;
    const double p_i = static_cast<double>(c.window_count.at(word_i)) / c.n_windows;
    const double p_j = static_cast<double>(c.window_count.at(word_j)) / c.n_windows;
    const double value = std::log(p_ij / (p_i * p_j));
    if (value > 0.0) return value;
    return std::nullopt;
}

inline std::pair<VocabIndex, GraphMatrices> build_graph(const Corpus& corpus, int window = 20, int min_count = 1) {
    corpus.validate();
    const detail::CorpusCounts c = detail::CorpusCounts::build(corpus, window);

    VocabIndex vocab;
    for (const CorpusDoc& d : corpus.docs) {
        vocab.doc_node[d.doc_id] = vocab.n_docs();
        vocab.doc_ids.push_back(d.doc_id);
    }
    for (const auto& [w, count] : c.total_count)
        if (count >= min_count) {
            vocab.word_node[w] = vocab.n_docs() + vocab.n_words();
            vocab.words.push_back(w);
        }
    if (vocab.words.empty()) throw std::runtime_error("build_graph: empty vocabulary after min_count filtering");

    GraphMatrices g;
    g.n = vocab.n_nodes();
    g.adj.assign(static_cast<size_t>(g.n) * g.n, 0.0);
    auto set_sym = [&g](int i, int j, double v) {
        g.adj[static_cast<size_t>(i) * g.n + j] = v;
        g.adj[static_cast<size_t>(j) * g.n + i] = v;
    };
    for (int i = 0; i < g.n; ++i) g.adj[static_cast<size_t>(i) * g.n + i] = 1.0;

    const double n_docs = static_cast<double>(corpus.docs.size());
    for (const auto& [doc_id, tf_map] : c.term_count) {
        const int di = vocab.doc_node.at(doc_id);
        for (const auto& [word, tf] : tf_map) {
            auto wn = vocab.word_node.find(word);
            if (wn == vocab.word_node.end()) continue;
            const double w = tf * std::log(n_docs / c.doc_freq.at(word));
            if (w != 0.0) set_sym(di, wn->second, w);
        }
    }
    for (const auto& [pair, count] : c.pair_window_count) {
        auto ia = vocab.word_node.find(pair.a);
        auto ib = vocab.word_node.find(pair.b);
        if (ia == vocab.word_node.end() || ib == vocab.word_node.end()) continue;
        const double p_ij = static_cast<double>(count) / c.n_windows;
        const double p_a = static_cast<double>(c.window_count.at(pair.a)) / c.n_windows;
        const double p_b = static_cast<double>(c.window_count.at(pair.b)) / c.n_windows;
        const double value = std::log(p_ij / (p_a * p_b));
        if (value > 0.0) set_sym(ia->second, ib->second, value);
    }

    // D^{-1/2} A D^{-1/2}, filled symmetrically so the result is bit-symmetric
    std::vector<double> inv_sqrt_deg(g.n);
    for (int i = 0; i < g.n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < g.n; ++j) deg += g.a(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    g.adj_norm.assign(static_cast<size_t>(g.n) * g.n, 0.0);
    for (int i = 0; i < g.n; ++i)
        for (int j = i; j < g.n; ++j) {
            const double v = inv_sqrt_deg[i] * g.a(i, j) * inv_sqrt_deg[j];
            g.adj_norm[static_cast<size_t>(i) * g.n + j] = v;
            g.adj_norm[static_cast<size_t>(j) * g.n + i] = v;
        }
    return {std::move(vocab), std::move(g)};
}

struct GcnModel {
    Tensor w1; // [feature_dim x embed_dim]
    Tensor w2; // [embed_dim x n_labels]
};

inline GcnModel gcn_init(int feature_dim, int embed_dim, int n_labels, Rng& rng) {
    GcnModel m;
    m.w1 = glorot_uniform({feature_dim, embed_dim}, rng, feature_dim, embed_dim);
    m.w2 = glorot_uniform({embed_dim, n_labels}, rng, embed_dim, n_labels);
    return m;
}

// H1 = relu(A_norm X W1); Z = row-softmax(A_norm H1 W2)
inline std::pair<Tensor, Tensor> gcn_forward(const GraphMatrices& g, const Tensor& features, const GcnModel& model) {
    if (features.rows() != g.n)
        throw std::invalid_argument("gcn_forward: features " + shape_str(features.shape()) + " for " +
                                    std::to_string(g.n) + " nodes");
    Tensor a_norm = Tensor::from_data({g.n, g.n}, g.adj_norm);
    Tensor h1 = relu(matmul(matmul(a_norm, features), model.w1));
    Tensor z = softmax(matmul(matmul(a_norm, h1), model.w2));
    return {h1, z};
}

struct NodeEmbeddingTable {
    EmbeddingTable word_vectors; // split view over word nodes
    EmbeddingTable doc_vectors;  // split view over document nodes
};

struct GcnConfig {
    int window = 20;
    int min_count = 1;
    int embed_dim = 200; // linguistic-behaviour embedding width
    int epochs = 200;
    double lr = 0.1;
    std::uint64_t seed = 1;
};

struct GcnResult {
    NodeEmbeddingTable table;
    std::vector<double> losses;
    double train_accuracy = 0.0;
    std::string label_source; // "user_id" or "class_label"
    int embed_dim = 0;
};

// Full-batch gradient descent on cross-entropy over document nodes. Labels
// are user ids when every document carries one, class labels otherwise.
inline GcnResult train_gcn(const Corpus& corpus, const GcnConfig& cfg = {}) {
    corpus.validate();
    bool all_users = true;
    for (const CorpusDoc& d : corpus.docs)
        if (d.user_id.empty()) {
            all_users = false;
            break;
        }
    std::map<std::string, int> label_ids;
    std::vector<int> doc_labels;
    for (const CorpusDoc& d : corpus.docs) {
        const std::string& raw = all_users ? d.user_id : d.label;
        auto [it, inserted] = label_ids.emplace(raw, static_cast<int>(label_ids.size()));
        doc_labels.push_back(it->second);
    }
    if (label_ids.size() < 2) throw std::invalid_argument("train_gcn: needs at least 2 distinct labels");

    auto [vocab, graph] = build_graph(corpus, cfg.window, cfg.min_count);
    const int n = graph.n;
    Rng rng(cfg.seed);
    GcnModel model = gcn_init(n, cfg.embed_dim, static_cast<int>(label_ids.size()), rng);

    std::vector<int> doc_rows(vocab.n_docs());
    for (int i = 0; i < vocab.n_docs(); ++i) doc_rows[i] = i;

    Tensor a_norm = Tensor::from_data({n, n}, graph.adj_norm);
    GcnResult result;
    result.label_source = all_users ? "user_id" : "class_label";
    result.embed_dim = cfg.embed_dim;

    // node features are the identity, so A_norm X = A_norm
    auto forward_logits = [&] {
        Tensor h1 = relu(matmul(a_norm, model.w1));
        Tensor logits = matmul(matmul(a_norm, h1), model.w2);
        return std::make_pair(h1, logits);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        model.w1.zero_grad();
        model.w2.zero_grad();
        auto [h1, logits] = forward_logits();
        Tensor doc_logits = rows_lookup(logits, doc_rows);
        Tensor loss = cross_entropy_softmax(doc_logits, doc_labels);
        if (!std::isfinite(loss.item()))
            throw std::runtime_error("train_gcn: non-finite loss at epoch " + std::to_string(epoch));
        result.losses.push_back(loss.item());
        loss.backward();
        for (Tensor* p : {&model.w1, &model.w2})
            for (size_t k = 0; k < p->numel(); ++k) p->data()[k] -= cfg.lr * p->node->grad[k];
    }

    NoGradGuard ng;
    auto [h1, logits] = forward_logits();
    Tensor doc_logits = rows_lookup(logits, doc_rows);
    int correct = 0;
    for (int i = 0; i < vocab.n_docs(); ++i) {
        int best = 0;
        for (int jc = 1; jc < doc_logits.cols(); ++jc)
            if (doc_logits.at(i, jc) > doc_logits.at(i, best)) best = jc;
        if (best == doc_labels[i]) ++correct;
    }
    result.train_accuracy = static_cast<double>(correct) / vocab.n_docs();

    result.table.word_vectors = EmbeddingTable(cfg.embed_dim);
    result.table.doc_vectors = EmbeddingTable(cfg.embed_dim);
    for (int w = 0; w < vocab.n_words(); ++w) {
        const int row = vocab.n_docs() + w;
        std::vector<double> v(h1.data().begin() + static_cast<size_t>(row) * cfg.embed_dim,
                              h1.data().begin() + static_cast<size_t>(row + 1) * cfg.embed_dim);
        result.table.word_vectors.set(vocab.words[w], std::move(v));
    }
    for (int d = 0; d < vocab.n_docs(); ++d) {
        std::vector<double> v(h1.data().begin() + static_cast<size_t>(d) * cfg.embed_dim,
                              h1.data().begin() + static_cast<size_t>(d + 1) * cfg.embed_dim);
        result.table.doc_vectors.set(vocab.doc_ids[d], std::move(v));
    }
    return result;
}

// Per-token behaviour embedding G_e; OOV and padded positions are zero rows.
inline Tensor lookup_sequence(const TokenSeq& seq, const NodeEmbeddingTable& table, int embed_dim) {
    if (seq.size() == 0) throw std::invalid_argument("lookup_sequence: empty sequence");
    const int n = seq.size();
    std::vector<double> out(static_cast<size_t>(n) * embed_dim, 0.0);
    for (int i = 0; i < n; ++i) {
        if (seq.padded[i]) continue;
        if (const std::vector<double>* v = table.word_vectors.find(seq.tokens[i]))
            std::copy(v->begin(), v->end(), out.begin() + static_cast<size_t>(i) * embed_dim);
    }
    return Tensor::from_data({n, embed_dim}, std::move(out));
}

// optional debug export: "src<TAB>dst<TAB>weight" per edge, upper triangle
inline void export_edges(const VocabIndex& vocab, const GraphMatrices& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_edges: cannot write " + path);
    out << std::setprecision(17);
    auto node_name = [&vocab](int i) {
        return i < vocab.n_docs() ? vocab.doc_ids[i] : vocab.words[static_cast<size_t>(i - vocab.n_docs())];
    };
    for (int i = 0; i < g.n; ++i)
        for (int j = i; j < g.n; ++j)
            if (g.a(i, j) != 0.0) out << node_name(i) << '\t' << node_name(j) << '\t' << g.a(i, j) << '\n';
}

} // namespace ald
