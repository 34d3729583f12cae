#pragma once

// Dataset ingestion (csv / tsv / jsonl with text,label[,user_id]) and the
// deterministic synthetic corpus generator used for desk-scale experiments.

#include "ald/lexicon.hpp"
#include "ald/tensor.hpp"

#include <json.hpp>

namespace ald {

struct DatasetRecord {
    std::string text;
    std::string label;
    std::string user_id; // empty when absent
};

struct Dataset {
    std::vector<DatasetRecord> records;
    std::vector<std::string> label_names; // first-occurrence order
    std::map<std::string, int> label_ids;

    int label_id(const std::string& label) const {
        auto it = label_ids.find(label);
        if (it == label_ids.end()) throw std::invalid_argument("dataset: unknown label '" + label + "'");
        return it->second;
    }

    void index_labels() {
        label_names.clear();
        label_ids.clear();
        for (const DatasetRecord& r : records) {
            if (label_ids.emplace(r.label, static_cast<int>(label_names.size())).second)
                label_names.push_back(r.label);
        }
    }
};

namespace detail {

// RFC-4180 style row split with quoted fields
inline std::vector<std::string> split_delimited(const std::string& line, char delim, size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw std::runtime_error("dataset: unterminated quote at line " + std::to_string(line_no));
    fields.push_back(std::move(field));
    return fields;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

} // namespace detail

inline Dataset load_dataset(const std::string& path, const std::string& format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset: cannot read " + path);
    Dataset ds;
    std::string line;
    size_t line_no = 0;

    if (format == "jsonl") {
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::strip_cr(line);
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error("dataset: bad json at line " + std::to_string(line_no) + ": " + e.what());
            }
            if (!j.contains("text") || !j.contains("label"))
                throw std::runtime_error("dataset: missing text or label at line " + std::to_string(line_no));
            DatasetRecord r;
            r.text = j["text"].get<std::string>();
            r.label = j["label"].get<std::string>();
            if (j.contains("user_id") && !j["user_id"].is_null()) r.user_id = j["user_id"].get<std::string>();
            if (r.text.empty()) throw std::runtime_error("dataset: empty text at line " + std::to_string(line_no));
            ds.records.push_back(std::move(r));
        }
    } else if (format == "csv" || format == "tsv") {
        const char delim = format == "csv" ? ',' : '\t';
        if (!std::getline(in, line)) throw std::runtime_error("dataset: empty file " + path);
        ++line_no;
        const std::vector<std::string> header = detail::split_delimited(detail::strip_cr(line), delim, line_no);
        int text_col = -1, label_col = -1, user_col = -1;
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "text") text_col = static_cast<int>(i);
            else if (header[i] == "label") label_col = static_cast<int>(i);
            else if (header[i] == "user_id") user_col = static_cast<int>(i);
        }
        if (text_col < 0 || label_col < 0)
            throw std::runtime_error("dataset: header of " + path + " must name text and label columns");
        while (std::getline(in, line)) {
            ++line_no;
            line = detail::strip_cr(line);
            if (line.empty()) continue;
            const std::vector<std::string> fields = detail::split_delimited(line, delim, line_no);
            const int need = std::max(text_col, label_col) + 1;
            if (static_cast<int>(fields.size()) < need)
                throw std::runtime_error("dataset: malformed row at line " + std::to_string(line_no) + " of " + path);
            DatasetRecord r;
            r.text = fields[text_col];
            r.label = fields[label_col];
            if (user_col >= 0 && user_col < static_cast<int>(fields.size())) r.user_id = fields[user_col];
            if (r.text.empty()) throw std::runtime_error("dataset: empty text at line " + std::to_string(line_no));
            if (r.label.empty()) throw std::runtime_error("dataset: empty label at line " + std::to_string(line_no));
            ds.records.push_back(std::move(r));
        }
    } else {
        throw std::invalid_argument("dataset: unknown format '" + format + "' (csv, tsv or jsonl)");
    }
    if (ds.records.empty()) throw std::runtime_error("dataset: no records in " + path);
    ds.index_labels();
    return ds;
}

inline void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dataset: cannot write " + path);
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q.push_back(c);
        }
        return q + "\"";
    };
    out << "text,label,user_id\n";
    for (const DatasetRecord& r : ds.records)
        out << quote(r.text) << ',' << quote(r.label) << ',' << quote(r.user_id) << '\n';
}

// 90:10 style split; both halves keep the parent label map
struct DatasetSplit {
    std::vector<int> train_indices;
    std::vector<int> val_indices;
};

inline DatasetSplit split_dataset(const Dataset& ds, double val_fraction, std::uint64_t seed) {
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw std::invalid_argument("split: validation fraction must be in [0, 1)");
    std::vector<int> idx(ds.records.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    Rng rng(seed);
    shuffle_inplace(idx, rng);
    const size_t n_val = static_cast<size_t>(val_fraction * static_cast<double>(idx.size()));
    DatasetSplit split;
    split.val_indices.assign(idx.begin(), idx.begin() + n_val);
    split.train_indices.assign(idx.begin() + n_val, idx.end());
    return split;
}

// Synthetic corpus over four class archetypes: directed-at-entity abuse,
// explicit profanity, implicit sarcasm, neutral chatter. Every class posts
// through its own small set of synthetic users.
inline Dataset generate_synthetic(std::uint64_t seed, int classes, int per_class,
                                  const LexiconSet& lex = default_lexicons()) {
    if (classes < 2) throw std::invalid_argument("generate_synthetic: classes must be >= 2");
    if (classes > 4) throw std::invalid_argument("generate_synthetic: at most 4 class archetypes available");
    if (per_class < 1) throw std::invalid_argument("generate_synthetic: per_class must be >= 1");
    if (lex.gazetteer.empty() || lex.profanity.empty())
        throw std::invalid_argument("generate_synthetic: gazetteer and profanity lexicons must be non-empty");

    if (classes >= 3 && lex.sarcasm_markers.empty())
        throw std::invalid_argument("generate_synthetic: sarcasm markers required for the implicit class");

    Rng rng(seed);
    const std::vector<std::string> entities(lex.gazetteer.begin(), lex.gazetteer.end());
    const std::vector<std::string> profanities(lex.profanity.begin(), lex.profanity.end());
    const std::vector<std::string> markers(lex.sarcasm_markers.begin(), lex.sarcasm_markers.end());
    const std::vector<std::string> positives(detail::positive_words().begin(), detail::positive_words().end());
    const std::vector<std::string> insults = {"useless", "pathetic", "worthless", "awful", "dreadful", "hopeless"};
    const std::vector<std::string> neutral_subjects = {"the meeting", "the garden", "my commute", "the weather",
                                                       "the library", "this recipe", "the schedule", "our trip"};
    const std::vector<std::string> neutral_verbs = {"starts", "continues", "improved", "changed", "ended", "went well"};
    const std::vector<std::string> fillers = {"today", "again", "honestly", "frankly", "folks", "everyone"};

    auto pick = [&rng](const std::vector<std::string>& v) { return v[static_cast<size_t>(rand_int(rng, static_cast<int>(v.size())))]; };

    Dataset ds;
    for (int c = 0; c < classes; ++c) {
        const std::string class_name = c == 0   ? "directed"
                                       : c == 1 ? "explicit"
                                       : c == 2 ? "implicit"
                                                : "neutral";
        for (int i = 0; i < per_class; ++i) {
            DatasetRecord r;
            r.label = class_name;
            r.user_id = class_name + "_user" + std::to_string(rand_int(rng, 3));
            switch (c) {
                case 0: // directed: @entity plus second-person framing
                    r.text = "@" + pick(entities) + " you are " + pick(insults) + " " + pick(fillers);
                    break;
                case 1: // explicit: guaranteed profanity token
                    r.text = "what a " + pick(profanities) + " take " + pick(fillers) + " total " +
                             pick(profanities);
                    break;
                case 2: // implicit: sarcasm markers, elongation, positive-near-negation
                    switch (rand_int(rng, 3)) {
                        case 0: r.text = "you are sooo " + pick(positives) + " " + pick(fillers) + " !!!"; break;
                        case 1: r.text = pick(markers) + " the most " + pick(positives) + " idea ever ?!"; break;
                        default: r.text = "not very " + pick(positives) + " of you " + pick(fillers); break;
                    }
                    break;
                default: // neutral
                    r.text = pick(neutral_subjects) + " " + pick(neutral_verbs) + " " + pick(fillers);
                    break;
            }
            ds.records.push_back(std::move(r));
        }
    }
    ds.index_labels();
    return ds;
}

} // namespace ald
