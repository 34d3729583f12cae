// Command-line front end: synthetic corpus generation, graph building,
// training, evaluation, ablation grids and gradient checking.

#include <CLI11.hpp>

#include "ald/ablate.hpp"
#include "ald/checkpoint.hpp"
#include "ald/gradcheck.hpp"

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ald;

namespace {

struct CommonOpts {
    std::string config_file;
    std::string preset;
    std::string lexicon_dir;
    std::string dictionary_file;
    std::string mode = "cb";
    std::string aspects = "d,g,e,i";
    std::uint64_t seed = 1;
    bool graph = true;
    int fusion_repeats = 1;
    std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "key = value configuration file");
    cmd->add_option("--preset", o.preset, "named lr/epoch schedule (waseem, hateval, offeval, davids, founta, fnuc, stormw)");
    cmd->add_option("--mode", o.mode, "cross wiring: cb, cm or cbm")->check(CLI::IsMember({"cb", "cm", "cbm"}));
    cmd->add_option("--aspects", o.aspects, "comma list from d,g,e,i");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_flag("--graph,!--no-graph", o.graph, "use the behaviour graph branch");
    cmd->add_option("--fusion-repeats", o.fusion_repeats, "conv blocks per fusion branch")
        ->check(CLI::IsMember({1, 3}));
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--lexicons", o.lexicon_dir, "directory of lexicon files overriding the built-ins");
    cmd->add_option("--dictionary", o.dictionary_file, "headword<TAB>definition file for the explicit embedding");
}

LexiconSet resolve_lexicons(const CommonOpts& o) {
    return o.lexicon_dir.empty() ? default_lexicons() : load_lexicons(o.lexicon_dir);
}

DefinitionDictionary resolve_dictionary(const CommonOpts& o) {
    return o.dictionary_file.empty() ? default_definition_dictionary() : load_dictionary(o.dictionary_file);
}

// --config applies first so explicit flags win
TrainConfig resolve_config(const CommonOpts& o, const CLI::App* cmd) {
    TrainConfig cfg;
    if (!o.preset.empty()) apply_preset(cfg, o.preset);
    if (!o.config_file.empty()) apply_config_file(cfg, o.config_file);
    if (cmd->count("--mode") || o.config_file.empty()) cfg.model.mode = cross_mode_from(o.mode);
    if (cmd->count("--aspects")) apply_aspects_string(cfg.model, o.aspects);
    if (cmd->count("--graph") || cmd->count("--no-graph")) cfg.model.use_graph = o.graph;
    if (cmd->count("--fusion-repeats")) cfg.model.fusion_repeats = o.fusion_repeats;
    if (cmd->count("--seed")) cfg.seed = o.seed;
    return cfg;
}

Dataset load_any(const std::string& path, std::string format) {
    if (format.empty()) {
        const std::string ext = fs::path(path).extension().string();
        format = ext == ".tsv" ? "tsv" : ext == ".jsonl" ? "jsonl" : "csv";
    }
    return load_dataset(path, format);
}

int cmd_gen_synth(const CommonOpts& o, int classes, int per_class) {
    fs::create_directories(o.out_dir);
    Dataset ds = generate_synthetic(o.seed, classes, per_class, resolve_lexicons(o));
    const std::string path = (fs::path(o.out_dir) / "synthetic.csv").string();
    save_dataset_csv(ds, path);
    std::cout << "wrote " << ds.records.size() << " records to " << path << "\n";
    return 0;
}

int cmd_build_graph(const CommonOpts& o, const TrainConfig& cfg, const std::string& data, const std::string& format) {
    fs::create_directories(o.out_dir);
    Dataset ds = load_any(data, format);
    Corpus corpus;
    for (size_t i = 0; i < ds.records.size(); ++i)
        corpus.docs.push_back(CorpusDoc{"doc" + std::to_string(i), tokenize_full(ds.records[i].text),
                                        ds.records[i].label, ds.records[i].user_id});
    auto [vocab, graph] = build_graph(corpus, cfg.gcn.window, cfg.gcn.min_count);
    const std::string edges = (fs::path(o.out_dir) / "graph_edges.tsv").string();
    export_edges(vocab, graph, edges);

    GcnConfig gcfg = cfg.gcn;
    gcfg.embed_dim = cfg.model.graph_dim;
    gcfg.seed = cfg.seed * 31 + 3;
    GcnResult result = train_gcn(corpus, gcfg);
    const std::string table = (fs::path(o.out_dir) / "graph_embeddings.txt").string();
    result.table.word_vectors.save(table);

    std::cout << config_echo(cfg, result.label_source);
    std::cout << "nodes " << graph.n << " (docs " << vocab.n_docs() << ", words " << vocab.n_words() << ")\n";
    std::cout << "gcn_train_accuracy " << result.train_accuracy << "\n";
    std::cout << "wrote " << edges << " and " << table << "\n";
    return 0;
}

int cmd_train(const CommonOpts& o, const TrainConfig& cfg, const std::string& data, const std::string& format) {
    fs::create_directories(o.out_dir);
    Dataset ds = load_any(data, format);
    TrainResult result = train(cfg, ds, &std::cout, resolve_lexicons(o), resolve_dictionary(o));
    std::cout << config_echo(cfg, result.gcn_label_source);
    std::cout << "final_train_accuracy " << result.final_train_accuracy << "\n";

    const std::string ckpt_path = (fs::path(o.out_dir) / "model.ckpt").string();
    save_checkpoint(checkpoint_from(result), ckpt_path);
    std::cout << "wrote " << ckpt_path << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data, const std::string& format) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    Dataset ds = load_any(data, format);
    if (ds.label_names.size() != ckpt.label_names.size())
        throw std::runtime_error("eval: dataset has " + std::to_string(ds.label_names.size()) +
                                 " labels, checkpoint expects " + std::to_string(ckpt.label_names.size()));
    std::map<std::string, int> ckpt_ids;
    for (size_t i = 0; i < ckpt.label_names.size(); ++i) ckpt_ids[ckpt.label_names[i]] = static_cast<int>(i);

    std::vector<int> truth, pred;
    ForwardState fs_eval;
    NoGradGuard ng;
    for (const DatasetRecord& r : ds.records) {
        auto it = ckpt_ids.find(r.label);
        if (it == ckpt_ids.end()) throw std::runtime_error("eval: label '" + r.label + "' unknown to checkpoint");
        truth.push_back(it->second);
        ModelInputs in = ckpt.extractor.extract_text(ckpt.config, r.text);
        Tensor z = ckpt.model.forward(in, fs_eval).head.z;
        int best = 0;
        for (int j = 1; j < z.cols(); ++j)
            if (z.at(0, j) > z.at(0, best)) best = j;
        pred.push_back(best);
    }
    std::cout << format_metrics(compute_metrics(truth, pred, ckpt.label_names));
    return 0;
}

int cmd_ablate(const CommonOpts& o, const TrainConfig& cfg, const std::string& data, const std::string& format,
               const std::string& grid, int workers) {
    fs::create_directories(o.out_dir);
    Dataset ds = load_any(data, format);
    std::vector<AblationCell> cells = run_ablation(grid, cfg, ds, workers, resolve_lexicons(o), resolve_dictionary(o));
    std::cout << format_ablation_table(grid, cells);
    const std::string rows = format_ablation_records(grid, cells);
    std::cout << rows;
    std::ofstream out(fs::path(o.out_dir) / ("ablation_" + grid + ".txt"));
    out << rows;
    for (const AblationCell& c : cells)
        if (!c.error.empty()) return 1;
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    // primitive-level checks, then the full model at toy dimensions
    Rng rng(seed);
    auto rt = [&rng](const Shape& s, bool rg = true) {
        std::vector<double> v(shape_numel(s));
        for (double& x : v) x = rand_uniform(rng, -1.0, 1.0);
        return Tensor::from_data(s, std::move(v), rg);
    };
    bool all_pass = true;
    auto report = [&all_pass](const std::string& name, const GradCheckReport& rep) {
        std::cout << (rep.pass ? "pass" : "FAIL") << "  " << name << "  max_rel_err " << rep.max_rel_err
                  << "  excluded " << rep.excluded_entries << "\n";
        all_pass = all_pass && rep.pass;
    };

    {
        Tensor a = rt({3, 4}), b = rt({3, 4}), probe = rt({3, 4}, false);
        report("add", finite_diff_check([&] { return sum(mul(probe, add(a, b))); }, {{"a", a}, {"b", b}}));
        report("mul", finite_diff_check([&] { return sum(mul(probe, mul(a, b))); }, {{"a", a}, {"b", b}}));
        Tensor m1 = rt({3, 5}), m2 = rt({5, 2});
        report("matmul", finite_diff_check([&] { return sum(matmul(m1, m2)); }, {{"m1", m1}, {"m2", m2}}));
        report("matmul_sorted",
               finite_diff_check([&] { return sum(matmul_sorted(m1, m2)); }, {{"m1", m1}, {"m2", m2}}));
        report("transpose", finite_diff_check([&] { return sum(mul(probe, transpose(transpose(a)))); }, {{"a", a}}));
        report("scale", finite_diff_check([&] { return sum(scale(a, -1.7)); }, {{"a", a}}));
        report("relu", finite_diff_check([&] { return sum(mul(probe, relu(a))); }, {{"a", a}}));
        report("softmax", finite_diff_check([&] { return sum(mul(probe, softmax(a))); }, {{"a", a}}));
        Tensor gain = rt({1, 4}), bias = rt({1, 4});
        report("layer_norm", finite_diff_check([&] { return sum(mul(probe, layer_norm(a, gain, bias))); },
                                               {{"a", a}, {"gain", gain}, {"bias", bias}}));
        Tensor cx = rt({6, 3}), cw = rt({3, 3, 2}), cb = rt({1, 2}), cprobe = rt({6, 2}, false);
        report("conv1d", finite_diff_check([&] { return sum(mul(cprobe, conv1d(cx, cw, cb))); },
                                           {{"x", cx}, {"w", cw}, {"b", cb}}));
        report("maxpool_tokens", finite_diff_check([&] { return sum(maxpool_tokens(a)); }, {{"a", a}}));
        report("concat_cols", finite_diff_check([&] { return sum(concat_cols(a, b)); }, {{"a", a}, {"b", b}}));
        Tensor row = rt({1, 4});
        report("broadcast_rows", finite_diff_check([&] { return sum(mul(probe, broadcast_rows(row, 3))); },
                                                   {{"row", row}}));
        report("flatten", finite_diff_check([&] { return sum(flatten(a)); }, {{"a", a}}));
        report("slice_cols", finite_diff_check([&] { return sum(slice_cols(a, 1, 2)); }, {{"a", a}}));
        Tensor table = rt({5, 3});
        Tensor rprobe = rt({4, 3}, false);
        const std::vector<int> idx{0, 3, 3, -1};
        report("rows_lookup", finite_diff_check([&] { return sum(mul(rprobe, rows_lookup(table, idx))); },
                                                {{"table", table}}));
        Tensor logits = rt({4, 3});
        report("cross_entropy_softmax",
               finite_diff_check([&] { return cross_entropy_softmax(logits, {0, 2, 1, 2}); }, {{"logits", logits}}));
    }
    {
        // full model: N=4, d_model=8, all aspects, CB, graph branch on
        ModelConfig mc;
        mc.encoder.num_encoders = 2;
        mc.encoder.num_heads = 2;
        mc.encoder.hidden_dim = 12;
        mc.encoder.d_model = 8;
        mc.encoder.dropout_rate = 0.0;
        mc.encoder.max_seq_len = 4;
        mc.n_classes = 2;
        mc.mode = CrossMode::CB;
        mc.use_graph = true;
        mc.mlp_hidden = 8;
        mc.d_directed = mc.d_generalised = mc.d_explicit = mc.d_implicit = 4;
        mc.graph_dim = 8;
        Model model = Model::init(mc, rng);
        ModelInputs in;
        in.pair = AspectPair{rt({4, 8}, false), rt({4, 8}, false), {false, false, false, true}};
        in.behaviour = rt({4, 8}, false);
        ForwardState fs;
        auto loss = [&] { return cross_entropy_softmax(model.forward(in, fs).head.logits, {1}); };
        report("full_model", finite_diff_check(loss, model.params()));
    }
    std::cout << (all_pass ? "gradcheck: all checks passed\n" : "gradcheck: FAILURES present\n");
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"abusive-language detection pipeline"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string data_path, data_format, ckpt_path, grid = "aspects";
    int classes = 4, per_class = 50, workers = 0;

    CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic labelled corpus");
    add_common(gen, opts);
    gen->add_option("--classes", classes, "number of classes (2-4)");
    gen->add_option("--per-class", per_class, "records per class");

    CLI::App* graph_cmd = app.add_subcommand("build-graph", "build the word-document graph and train the GCN");
    add_common(graph_cmd, opts);
    graph_cmd->add_option("--data", data_path, "dataset path")->required();
    graph_cmd->add_option("--format", data_format, "csv, tsv or jsonl");

    CLI::App* train_cmd = app.add_subcommand("train", "train the classifier");
    add_common(train_cmd, opts);
    train_cmd->add_option("--data", data_path, "dataset path")->required();
    train_cmd->add_option("--format", data_format, "csv, tsv or jsonl");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
    eval_cmd->add_option("--data", data_path, "dataset path")->required();
    eval_cmd->add_option("--format", data_format, "csv, tsv or jsonl");

    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run an ablation grid");
    add_common(ablate_cmd, opts);
    ablate_cmd->add_option("--data", data_path, "dataset path")->required();
    ablate_cmd->add_option("--format", data_format, "csv, tsv or jsonl");
    ablate_cmd->add_option("--grid", grid, "aspects or modes")->check(CLI::IsMember({"aspects", "modes"}));
    ablate_cmd->add_option("--workers", workers, "parallel cells (0 = auto)");

    CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks over primitives and the full model");
    gc_cmd->add_option("--seed", opts.seed, "run seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_synth(opts, classes, per_class);
        if (graph_cmd->parsed()) return cmd_build_graph(opts, resolve_config(opts, graph_cmd), data_path, data_format);
        if (train_cmd->parsed()) return cmd_train(opts, resolve_config(opts, train_cmd), data_path, data_format);
        if (eval_cmd->parsed()) return cmd_eval(ckpt_path, data_path, data_format);
        if (ablate_cmd->parsed())
            return cmd_ablate(opts, resolve_config(opts, ablate_cmd), data_path, data_format, grid, workers);
        if (gc_cmd->parsed()) return cmd_gradcheck(opts.seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
