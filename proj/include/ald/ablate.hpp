#pragma once

// Ablation grids: the nine aspect combinations (each keeping at least one
// target and one content aspect, run as CB without the graph) and the six
// wiring settings (CB/CBM crossed with no-graph, graph N=1, graph N=3).
// Cells run on worker threads with per-cell derived seeds; results are
// ordered by grid index.

#include "ald/config.hpp"

#include <future>
#include <thread>

namespace ald {

struct AblationCell {
    int index = 0;
    std::string name;
    TrainConfig config;
    double weighted_f1 = 0.0;
    double train_accuracy = 0.0;
    std::string error; // non-empty when the cell failed
};

inline std::vector<AblationCell> aspects_grid(const TrainConfig& base) {
    const char* combos[9] = {"d,e", "d,i", "d,e,i", "g,e", "g,i", "g,e,i", "d,g,e", "d,g,i", "d,g,e,i"};
    std::vector<AblationCell> cells;
    for (int i = 0; i < 9; ++i) {
        AblationCell cell;
        cell.index = i;
        cell.name = combos[i];
        cell.config = base;
        cell.config.model.mode = CrossMode::CB;
        cell.config.model.use_graph = false;
        apply_aspects_string(cell.config.model, combos[i]);
        cell.config.seed = base.seed + static_cast<std::uint64_t>(i) * 1000 + 1;
        cells.push_back(std::move(cell));
    }
    return cells;
}

inline std::vector<AblationCell> modes_grid(const TrainConfig& base) {
    struct Setting {
        CrossMode mode;
        bool graph;
        int repeats;
    };
    const Setting settings[6] = {{CrossMode::CB, false, 1},  {CrossMode::CB, true, 1},  {CrossMode::CB, true, 3},
                                 {CrossMode::CBM, false, 1}, {CrossMode::CBM, true, 1}, {CrossMode::CBM, true, 3}};
    std::vector<AblationCell> cells;
    for (int i = 0; i < 6; ++i) {
        AblationCell cell;
        cell.index = i;
        cell.config = base;
        cell.config.model.mode = settings[i].mode;
        cell.config.model.use_graph = settings[i].graph;
        cell.config.model.fusion_repeats = settings[i].repeats;
        cell.config.model.use_directed = cell.config.model.use_generalised = true;
        cell.config.model.use_explicit = cell.config.model.use_implicit = true;
        cell.config.seed = base.seed + static_cast<std::uint64_t>(i) * 1000 + 1;
        std::string name = cross_mode_name(settings[i].mode);
        name += settings[i].graph ? ", G, N=" + std::to_string(settings[i].repeats) : ", no G";
        cell.name = name;
        cells.push_back(std::move(cell));
    }
    return cells;
}

inline std::vector<AblationCell> build_grid(const std::string& grid, const TrainConfig& base) {
    if (grid == "aspects") return aspects_grid(base);
    if (grid == "modes") return modes_grid(base);
    throw std::invalid_argument("ablate: unknown grid '" + grid + "' (aspects or modes)");
}

// Trains and scores every cell; held-out weighted F1 comes from the
// validation split of each cell's own run.
inline std::vector<AblationCell> run_ablation(const std::string& grid, const TrainConfig& base, const Dataset& ds,
                                              int max_workers = 0, const LexiconSet& lex = default_lexicons(),
                                              const DefinitionDictionary& dict = default_definition_dictionary()) {
    std::vector<AblationCell> cells = build_grid(grid, base);
    if (max_workers <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        max_workers = hw == 0 ? 2 : static_cast<int>(hw);
    }
    auto run_cell = [&ds, &lex, &dict](AblationCell& cell) {
        try {
            TrainResult result = train(cell.config, ds, nullptr, lex, dict);
            cell.train_accuracy = result.final_train_accuracy;
            cell.weighted_f1 = result.log.empty() ? 0.0 : result.log.back().val_weighted_f1;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    };
    for (size_t start = 0; start < cells.size(); start += static_cast<size_t>(max_workers)) {
        const size_t end = std::min(cells.size(), start + static_cast<size_t>(max_workers));
        std::vector<std::future<void>> batch;
        for (size_t i = start; i < end; ++i)
            batch.push_back(std::async(std::launch::async, run_cell, std::ref(cells[i])));
        for (auto& f : batch) f.get();
    }
    return cells;
}

inline std::string format_ablation_table(const std::string& grid, const std::vector<AblationCell>& cells) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-4s %-14s %-8s %-6s %-14s %12s %12s\n", "cell", "setting", "mode", "graph",
                  "aspects", "weighted_f1", "train_acc");
    out += buf;
    for (const AblationCell& c : cells) {
        if (c.error.empty())
            std::snprintf(buf, sizeof buf, "%-4d %-14s %-8s %-6d %-14s %12.4f %12.4f\n", c.index, c.name.c_str(),
                          cross_mode_name(c.config.model.mode), c.config.model.use_graph ? 1 : 0,
                          c.config.model.aspects_string().c_str(), c.weighted_f1, c.train_accuracy);
        else
            std::snprintf(buf, sizeof buf, "%-4d %-14s error: %s\n", c.index, c.name.c_str(), c.error.c_str());
        out += buf;
    }
    (void)grid;
    return out;
}

// one self-describing record per line for downstream tooling
inline std::string format_ablation_records(const std::string& grid, const std::vector<AblationCell>& cells) {
    std::string out;
    for (const AblationCell& c : cells) {
        std::ostringstream os;
        os << "ablate-row grid=" << grid << " cell=" << c.index << " mode=" << cross_mode_name(c.config.model.mode)
           << " graph=" << (c.config.model.use_graph ? 1 : 0)
           << " fusion_repeats=" << c.config.model.fusion_repeats << " aspects=" << c.config.model.aspects_string();
        if (c.error.empty())
            os << " weighted_f1=" << c.weighted_f1 << " train_accuracy=" << c.train_accuracy;
        else
            os << " error=\"" << c.error << "\"";
        os << "\n";
        out += os.str();
    }
    return out;
}

} // namespace ald
