#pragma once

// The four abuse-aspect embedders behind one interface: directed (D) and
// implicit (I) are deterministic lexicon/feature extractors; generalised (G)
// reads a gender-debiased table and explicit (E) a dictionary-pair table,
// both trained here at desk scale.

#include "ald/lexicon.hpp"
#include "ald/tensor.hpp"

namespace ald {

namespace detail {

// stable 64-bit string hash (FNV-1a), used for the deterministic filler
// dimensions of the directed embedding
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline double hash_feature(const std::string& token, std::uint64_t seed, int j) {
    const std::uint64_t h = fnv1a(token, seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(j) + 1);
    return (static_cast<double>(h >> 11) * 0x1.0p-53) - 0.5;
}

inline bool all_caps(const std::string& raw) {
    if (raw.size() < 2) return false;
    bool has_alpha = false;
    for (unsigned char c : raw) {
        if (std::isalpha(c)) {
            has_alpha = true;
            if (!std::isupper(c)) return false;
        }
    }
    return has_alpha;
}

inline bool has_elongation(const std::string& token) {
    int run = 1;
    for (size_t i = 1; i < token.size(); ++i) {
        run = token[i] == token[i - 1] ? run + 1 : 1;
        if (run >= 3) return true;
    }
    return false;
}

inline bool is_punct_run(const std::string& token) {
    if (token.empty()) return false;
    for (char c : token)
        if (c != '!' && c != '?') return false;
    return true;
}

} // namespace detail

// Per-token lexicon features for directed abuse: gazetteer hit,
// second-person pronoun, all-caps, @mention, then seeded hash dims.
inline Tensor embed_directed(const TokenSeq& seq, const LexiconSet& lex, int d_directed = 16,
                             std::uint64_t hash_seed = 1) {
    if (d_directed < 4) throw std::invalid_argument("embed_directed: dimension must be >= 4");
    if (seq.size() == 0) throw std::invalid_argument("embed_directed: empty sequence");
    const int n = seq.size();
    std::vector<double> out(static_cast<size_t>(n) * d_directed, 0.0);
    for (int i = 0; i < n; ++i) {
        if (seq.padded[i]) continue;
        double* row = out.data() + static_cast<size_t>(i) * d_directed;
        const std::string& tok = seq.tokens[i];
        row[0] = lex.gazetteer.count(tok) ? 1.0 : 0.0;
        row[1] = detail::second_person_pronouns().count(tok) ? 1.0 : 0.0;
        row[2] = detail::all_caps(seq.raw_tokens[i]) ? 1.0 : 0.0;
        row[3] = !tok.empty() && tok[0] == '@' ? 1.0 : 0.0;
        for (int j = 4; j < d_directed; ++j) row[j] = detail::hash_feature(tok, hash_seed, j);
    }
    return Tensor::from_data({n, d_directed}, std::move(out));
}

// Row-per-token lookup shared by the generalised, explicit and graph
// embeddings; OOV and padded positions read as zero rows.
inline Tensor embed_lookup(const char* op, const TokenSeq& seq, const EmbeddingTable& table, int expect_dim) {
    if (seq.size() == 0) throw std::invalid_argument(std::string(op) + ": empty sequence");
    if (table.dim() != expect_dim)
        throw std::invalid_argument(std::string(op) + ": table dimension " + std::to_string(table.dim()) +
                                    " does not match configured " + std::to_string(expect_dim));
    const int n = seq.size(), d = expect_dim;
    std::vector<double> out(static_cast<size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        if (seq.padded[i]) continue;
        if (const std::vector<double>* v = table.find(seq.tokens[i]))
            std::copy(v->begin(), v->end(), out.begin() + static_cast<size_t>(i) * d);
    }
    return Tensor::from_data({n, d}, std::move(out));
}

inline Tensor embed_generalised(const TokenSeq& seq, const EmbeddingTable& table, int d_generalised = 16) {
    return embed_lookup("embed_generalised", seq, table, d_generalised);
}

inline Tensor embed_explicit(const TokenSeq& seq, const EmbeddingTable& table, int d_explicit = 16) {
    return embed_lookup("embed_explicit", seq, table, d_explicit);
}

// Sequence-level implicit-abuse features, one row regardless of length:
// elongated words, !/? runs, sarcasm markers, positive word near negation.
inline Tensor embed_implicit(const TokenSeq& seq, const LexiconSet& lex, int d_implicit = 16) {
    if (d_implicit < 4) throw std::invalid_argument("embed_implicit: dimension must be >= 4");
    if (seq.size() == 0) throw std::invalid_argument("embed_implicit: empty sequence");
    std::vector<double> out(static_cast<size_t>(d_implicit), 0.0);
    const int n = seq.size();
    for (int i = 0; i < n; ++i) {
        if (seq.padded[i]) continue;
        const std::string& tok = seq.tokens[i];
        if (detail::has_elongation(tok)) out[0] += 1.0;
        if (detail::is_punct_run(tok)) out[1] += 1.0;
        if (lex.sarcasm_markers.count(tok)) out[2] += 1.0;
        if (detail::positive_words().count(tok)) {
            for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j) {
                if (j != i && !seq.padded[j] && detail::negation_words().count(seq.tokens[j])) {
                    out[3] += 1.0;
                    break;
                }
            }
        }
    }
    return Tensor::from_data({1, d_implicit}, std::move(out));
}

// ---- gender-debias trainer -------------------------------------------------

struct DebiasConfig {
    int steps = 200;
    double lr = 0.1;
    double anchor_lambda = 0.01; // semantic-anchor strength
};

namespace detail {

inline std::vector<double> mean_vector(const EmbeddingTable& table, const std::set<std::string>& words, int dim) {
    std::vector<double> mean(dim, 0.0);
    for (const std::string& w : words) {
        const std::vector<double>& v = table.at(w);
        for (int j = 0; j < dim; ++j) mean[j] += v[j];
    }
    for (double& m : mean) m /= static_cast<double>(words.size());
    return mean;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

} // namespace detail

// Unit gender direction g = normalize(mean(V_m) - mean(V_f)) over the seed sets.
inline std::vector<double> gender_direction(const EmbeddingTable& table, const LexiconSet& lex) {
    if (lex.v_masculine.empty() || lex.v_feminine.empty())
        throw std::invalid_argument("train_debias: masculine and feminine seed sets must be non-empty");
    const int dim = table.dim();
    std::vector<double> g = detail::mean_vector(table, lex.v_masculine, dim);
    const std::vector<double> f = detail::mean_vector(table, lex.v_feminine, dim);
    for (int j = 0; j < dim; ++j) g[j] -= f[j];
    const double n = detail::norm(g);
    if (n < 1e-12) throw std::runtime_error("train_debias: degenerate gender direction (zero seed difference)");
    for (double& v : g) v /= n;
    return g;
}

// Gradient descent on
//   L = sum_{V_m} (v.g - 1)^2 + sum_{V_f} (v.g + 1)^2
//     + sum_{V_n} (v.g)^2 + sum_{V_s} (v.g)^2 + lambda * sum_all |v - v_init|^2
// with g recomputed from the current table each step.
inline EmbeddingTable train_debias(const EmbeddingTable& init, const LexiconSet& lex, const DebiasConfig& cfg = {}) {
    lex.validate_gender_sets();
    if (lex.v_masculine.empty() || lex.v_feminine.empty())
        throw std::invalid_argument("train_debias: masculine and feminine seed sets must be non-empty");
    const int dim = init.dim();
    std::vector<std::pair<const std::set<std::string>*, double>> groups = {
        {&lex.v_masculine, 1.0}, {&lex.v_feminine, -1.0}, {&lex.v_neutral, 0.0}, {&lex.v_stereotype, 0.0}};
    for (auto& [words, target] : groups)
        for (const std::string& w : *words)
            if (!init.contains(w))
                throw std::invalid_argument("train_debias: word '" + w + "' missing from initial table");

    EmbeddingTable table = init;
    for (int step = 0; step < cfg.steps; ++step) {
        const std::vector<double> g = gender_direction(table, lex);
        double loss = 0.0;
        std::map<std::string, std::vector<double>> grads;
        for (auto& [words, target] : groups) {
            for (const std::string& w : *words) {
                const std::vector<double>& v = table.at(w);
                const double proj = detail::dot(v, g) - target;
                loss += proj * proj;
                std::vector<double>& dv = grads.emplace(w, std::vector<double>(dim, 0.0)).first->second;
                for (int j = 0; j < dim; ++j) dv[j] += 2.0 * proj * g[j];
            }
        }
        for (const auto& [w, v0] : init.all()) {
            const std::vector<double>& v = table.at(w);
            std::vector<double>& dv = grads.emplace(w, std::vector<double>(dim, 0.0)).first->second;
            for (int j = 0; j < dim; ++j) {
                const double d = v[j] - v0[j];
                loss += cfg.anchor_lambda * d * d;
                dv[j] += 2.0 * cfg.anchor_lambda * d;
            }
        }
        if (!std::isfinite(loss)) throw std::runtime_error("train_debias: non-finite loss at step " + std::to_string(step));
        for (const auto& [w, dv] : grads) {
            std::vector<double>& v = table.at(w);
            for (int j = 0; j < dim; ++j) v[j] -= cfg.lr * dv[j];
        }
    }
    return table;
}

// ---- dictionary-pair extraction and embedding trainer ----------------------

// Strong pair: each headword appears in the other's definition; weak pair:
// exactly one inclusion. Pairs range over headwords only; self-pairs excluded.
inline WordPairSet extract_dict_pairs(const DefinitionDictionary& dict) {
    WordPairSet pairs;
    std::map<std::string, std::set<std::string>> def_words;
    for (const auto& [head, def] : dict.entries) def_words[head] = {def.begin(), def.end()};
    for (auto ia = dict.entries.begin(); ia != dict.entries.end(); ++ia)
        for (auto ib = std::next(ia); ib != dict.entries.end(); ++ib) {
            const bool a_in_b = def_words[ib->first].count(ia->first) != 0;
            const bool b_in_a = def_words[ia->first].count(ib->first) != 0;
            if (a_in_b && b_in_a) pairs.strong.insert(WordPair(ia->first, ib->first));
            else if (a_in_b || b_in_a) pairs.weak.insert(WordPair(ia->first, ib->first));
        }
    return pairs;
}

struct DictEmbedConfig {
    int dim = 16;
    int steps = 300;
    double lr = 0.05;
    std::uint64_t seed = 7;
    double beta_strong = 1.0;
    double beta_weak = 0.5;
    double beta_negative = 0.5;
    int negatives_per_word = 2;
};

// Cosine objective: attract strong pairs harder than weak ones and push
// sampled non-pairs towards orthogonality (hinge at cos = 0).
inline EmbeddingTable train_dict_embeddings(const WordPairSet& pairs, const std::set<std::string>& vocab,
                                            const DictEmbedConfig& cfg = {}) {
    if (cfg.beta_strong <= cfg.beta_weak)
        throw std::invalid_argument("train_dict_embeddings: beta_strong must exceed beta_weak");
    for (const auto* set : {&pairs.strong, &pairs.weak})
        for (const WordPair& p : *set)
            if (!vocab.count(p.a) || !vocab.count(p.b))
                throw std::invalid_argument("train_dict_embeddings: pair member '" +
                                            (vocab.count(p.a) ? p.b : p.a) + "' not in vocabulary");

    const std::vector<std::string> words(vocab.begin(), vocab.end());
    Rng rng(cfg.seed);
    EmbeddingTable table(cfg.dim);
    for (const std::string& w : words) {
        std::vector<double> v(cfg.dim);
        for (double& x : v) x = rand_uniform(rng, -0.5, 0.5);
        table.set(w, v);
    }

    auto cos_grad = [&](const std::string& wa, const std::string& wb, double weight, bool attract,
                        std::map<std::string, std::vector<double>>& grads) {
        const std::vector<double>& a = table.at(wa);
        const std::vector<double>& b = table.at(wb);
        const double na = detail::norm(a), nb = detail::norm(b);
        if (na < 1e-12 || nb < 1e-12) return;
        const double c = detail::dot(a, b) / (na * nb);
        if (!attract && c <= 0.0) return; // hinge: repel only while similar
        // d cos / d a = b/(|a||b|) - cos * a/|a|^2
        const double sign = attract ? -1.0 : 1.0; // attraction minimizes (1 - cos)
        std::vector<double>& da = grads.emplace(wa, std::vector<double>(cfg.dim, 0.0)).first->second;
        std::vector<double>& db = grads.emplace(wb, std::vector<double>(cfg.dim, 0.0)).first->second;
        for (int j = 0; j < cfg.dim; ++j) {
            da[j] += sign * weight * (b[j] / (na * nb) - c * a[j] / (na * na));
            db[j] += sign * weight * (a[j] / (na * nb) - c * b[j] / (nb * nb));
        }
    };

    for (int step = 0; step < cfg.steps; ++step) {
        std::map<std::string, std::vector<double>> grads;
        for (const WordPair& p : pairs.strong) cos_grad(p.a, p.b, cfg.beta_strong, true, grads);
        for (const WordPair& p : pairs.weak) cos_grad(p.a, p.b, cfg.beta_weak, true, grads);
        if (cfg.negatives_per_word > 0 && words.size() > 1) {
            for (const std::string& w : words) {
                for (int s = 0; s < cfg.negatives_per_word; ++s) {
                    const std::string& u = words[static_cast<size_t>(rand_int(rng, static_cast<int>(words.size())))];
                    if (u == w) continue;
                    const WordPair cand(w, u);
                    if (pairs.strong.count(cand) || pairs.weak.count(cand)) continue;
                    cos_grad(w, u, cfg.beta_negative, false, grads);
                }
            }
        }
        for (const auto& [w, dv] : grads) {
            std::vector<double>& v = table.at(w);
            for (int j = 0; j < cfg.dim; ++j) {
                v[j] -= cfg.lr * dv[j];
                if (!std::isfinite(v[j]))
                    throw std::runtime_error("train_dict_embeddings: non-finite value at step " + std::to_string(step));
            }
        }
    }
    return table;
}

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = detail::norm(a), nb = detail::norm(b);
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return detail::dot(a, b) / (na * nb);
}

} // namespace ald
