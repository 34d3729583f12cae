#pragma once

// Binary checkpoint: model configuration, label map, lexicons, frozen
// embedding tables and every named parameter tensor, byte-exact on round trip.

#include "ald/train.hpp"

namespace ald {

constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
public:
    explicit ByteWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw std::runtime_error("checkpoint: cannot write " + path);
    }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void doubles(const std::vector<double>& v) {
        u64(v.size());
        raw(v.data(), v.size() * sizeof(double));
    }
    void raw(const void* p, size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw std::runtime_error("checkpoint: write failure on " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw std::runtime_error("checkpoint: cannot read " + path);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > (1u << 24)) corrupt("oversized string");
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }
    std::vector<double> doubles() {
        const std::uint64_t n = u64();
        if (n > (1ull << 32)) corrupt("oversized array");
        std::vector<double> v(n);
        raw(v.data(), n * sizeof(double));
        return v;
    }
    void raw(void* p, size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in_.gcount()) != n) corrupt("truncated");
        offset_ += n;
    }
    [[noreturn]] void corrupt(const std::string& what) const {
        throw std::runtime_error("checkpoint: corrupt file " + path_ + " (" + what + " at offset " +
                                 std::to_string(offset_) + ")");
    }
    size_t offset() const { return offset_; }

private:
    std::ifstream in_;
    std::string path_;
    size_t offset_ = 0;
};

inline void write_wordset(ByteWriter& w, const std::set<std::string>& set) {
    w.u64(set.size());
    for (const std::string& s : set) w.str(s);
}

inline std::set<std::string> read_wordset(ByteReader& r) {
    const std::uint64_t n = r.u64();
    if (n > (1ull << 24)) r.corrupt("oversized word set");
    std::set<std::string> set;
    for (std::uint64_t i = 0; i < n; ++i) set.insert(r.str());
    return set;
}

inline void write_table(ByteWriter& w, const EmbeddingTable& t) {
    w.u32(static_cast<std::uint32_t>(t.dim()));
    w.u64(t.size());
    for (const auto& [word, vec] : t.all()) {
        w.str(word);
        w.doubles(vec);
    }
}

inline EmbeddingTable read_table(ByteReader& r) {
    const int dim = static_cast<int>(r.u32());
    const std::uint64_t n = r.u64();
    if (n > (1ull << 24)) r.corrupt("oversized table");
    EmbeddingTable t(dim);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string word = r.str();
        std::vector<double> vec = r.doubles();
        if (dim != 0 && static_cast<int>(vec.size()) != dim) r.corrupt("table dimension mismatch");
        t.set(word, std::move(vec));
    }
    return t;
}

} // namespace detail

struct Checkpoint {
    ModelConfig config;
    std::vector<std::string> label_names;
    FeatureExtractor extractor; // lexicons plus frozen tables
    Model model;
};

inline Checkpoint checkpoint_from(const TrainResult& result) {
    Checkpoint ckpt;
    ckpt.config = result.model.config;
    ckpt.label_names = result.label_names;
    ckpt.extractor = result.extractor;
    ckpt.model = result.model;
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    detail::ByteWriter w(path);
    w.raw("ALDC", 4);
    w.u32(kCheckpointVersion);

    const ModelConfig& c = ckpt.config;
    w.u32(static_cast<std::uint32_t>(c.encoder.num_encoders));
    w.u32(static_cast<std::uint32_t>(c.encoder.num_heads));
    w.u32(static_cast<std::uint32_t>(c.encoder.hidden_dim));
    w.u32(static_cast<std::uint32_t>(c.encoder.d_model));
    w.f64(c.encoder.dropout_rate);
    w.u32(static_cast<std::uint32_t>(c.encoder.max_seq_len));
    w.u32(static_cast<std::uint32_t>(c.n_classes));
    w.str(cross_mode_name(c.mode));
    w.u32(c.use_graph ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(c.fusion_repeats));
    w.u32(static_cast<std::uint32_t>(c.mlp_hidden));
    w.u32((c.use_directed ? 1 : 0) | (c.use_generalised ? 2 : 0) | (c.use_explicit ? 4 : 0) |
          (c.use_implicit ? 8 : 0));
    w.u32(static_cast<std::uint32_t>(c.d_directed));
    w.u32(static_cast<std::uint32_t>(c.d_generalised));
    w.u32(static_cast<std::uint32_t>(c.d_explicit));
    w.u32(static_cast<std::uint32_t>(c.d_implicit));
    w.u32(static_cast<std::uint32_t>(c.graph_dim));

    w.u64(ckpt.label_names.size());
    for (const std::string& l : ckpt.label_names) w.str(l);

    const LexiconSet& lex = ckpt.extractor.lexicons;
    detail::write_wordset(w, lex.gazetteer);
    detail::write_wordset(w, lex.v_masculine);
    detail::write_wordset(w, lex.v_feminine);
    detail::write_wordset(w, lex.v_neutral);
    detail::write_wordset(w, lex.v_stereotype);
    detail::write_wordset(w, lex.profanity);
    detail::write_wordset(w, lex.sarcasm_markers);
    w.u64(ckpt.extractor.directed_hash_seed);
    detail::write_table(w, ckpt.extractor.generalised_table);
    detail::write_table(w, ckpt.extractor.explicit_table);
    detail::write_table(w, ckpt.extractor.graph_table.word_vectors);

    const detail::NamedParams params = ckpt.model.params();
    w.u64(params.size());
    for (const auto& [name, p] : params) {
        w.str(name);
        w.u32(static_cast<std::uint32_t>(p.shape().size()));
        for (int d : p.shape()) w.u32(static_cast<std::uint32_t>(d));
        w.doubles(p.data());
    }
}

inline Checkpoint load_checkpoint(const std::string& path) {
    detail::ByteReader r(path);
    char magic[4];
    r.raw(magic, 4);
    if (std::string(magic, 4) != "ALDC") r.corrupt("bad magic");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: version " + std::to_string(version) + " unsupported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");

    Checkpoint ckpt;
    ModelConfig& c = ckpt.config;
    c.encoder.num_encoders = static_cast<int>(r.u32());
    c.encoder.num_heads = static_cast<int>(r.u32());
    c.encoder.hidden_dim = static_cast<int>(r.u32());
    c.encoder.d_model = static_cast<int>(r.u32());
    c.encoder.dropout_rate = r.f64();
    c.encoder.max_seq_len = static_cast<int>(r.u32());
    c.n_classes = static_cast<int>(r.u32());
    c.mode = cross_mode_from(r.str());
    c.use_graph = r.u32() != 0;
    c.fusion_repeats = static_cast<int>(r.u32());
    c.mlp_hidden = static_cast<int>(r.u32());
    const std::uint32_t aspects = r.u32();
    c.use_directed = (aspects & 1) != 0;
    c.use_generalised = (aspects & 2) != 0;
    c.use_explicit = (aspects & 4) != 0;
    c.use_implicit = (aspects & 8) != 0;
    c.d_directed = static_cast<int>(r.u32());
    c.d_generalised = static_cast<int>(r.u32());
    c.d_explicit = static_cast<int>(r.u32());
    c.d_implicit = static_cast<int>(r.u32());
    c.graph_dim = static_cast<int>(r.u32());

    const std::uint64_t n_labels = r.u64();
    if (n_labels > (1ull << 20)) r.corrupt("oversized label map");
    for (std::uint64_t i = 0; i < n_labels; ++i) ckpt.label_names.push_back(r.str());

    LexiconSet& lex = ckpt.extractor.lexicons;
    lex.gazetteer = detail::read_wordset(r);
    lex.v_masculine = detail::read_wordset(r);
    lex.v_feminine = detail::read_wordset(r);
    lex.v_neutral = detail::read_wordset(r);
    lex.v_stereotype = detail::read_wordset(r);
    lex.profanity = detail::read_wordset(r);
    lex.sarcasm_markers = detail::read_wordset(r);
    ckpt.extractor.directed_hash_seed = r.u64();
    ckpt.extractor.generalised_table = detail::read_table(r);
    ckpt.extractor.explicit_table = detail::read_table(r);
    ckpt.extractor.graph_table.word_vectors = detail::read_table(r);

    Rng rng(0); // weights are overwritten below
    ckpt.model = Model::init(c, rng);
    detail::NamedParams params = ckpt.model.params();
    const std::uint64_t n_params = r.u64();
    if (n_params != params.size())
        throw std::runtime_error("checkpoint: " + std::to_string(n_params) + " parameter tensors, model expects " +
                                 std::to_string(params.size()));
    for (auto& [name, p] : params) {
        const std::string stored = r.str();
        if (stored != name)
            throw std::runtime_error("checkpoint: parameter '" + stored + "' does not match expected '" + name + "'");
        const std::uint32_t ndims = r.u32();
        Shape shape(ndims);
        for (std::uint32_t d = 0; d < ndims; ++d) shape[d] = static_cast<int>(r.u32());
        if (shape != p.shape()) r.corrupt("parameter shape mismatch for " + name);
        std::vector<double> data = r.doubles();
        if (data.size() != p.numel()) r.corrupt("parameter size mismatch for " + name);
        p.data() = std::move(data);
    }
    return ckpt;
}

} // namespace ald
