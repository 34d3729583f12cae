#pragma once

// Lexicons, dictionaries and word-embedding tables, with their plain-text
// file formats: one entry per line; dictionaries "headword<TAB>definition";
// tables "word v1 .. vd".

#include "ald/text.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace ald {

struct LexiconSet {
    std::set<std::string> gazetteer;
    std::set<std::string> v_masculine;
    std::set<std::string> v_feminine;
    std::set<std::string> v_neutral;
    std::set<std::string> v_stereotype;
    std::set<std::string> profanity;
    std::set<std::string> sarcasm_markers;

    // the four gender sets must be mutually exclusive
    void validate_gender_sets() const {
        const std::set<std::string>* sets[4] = {&v_masculine, &v_feminine, &v_neutral, &v_stereotype};
        const char* names[4] = {"masculine", "feminine", "neutral", "stereotype"};
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                for (const std::string& w : *sets[i])
                    if (sets[j]->count(w))
                        throw std::invalid_argument("lexicon: word '" + w + "' in both " + names[i] + " and " +
                                                    names[j] + " sets");
    }
};

struct DefinitionDictionary {
    // headword -> definition tokens (pipeline tokenizer, lowercased)
    std::map<std::string, std::vector<std::string>> entries;
};

struct WordPair {
    std::string a, b; // normalized a < b
    WordPair(std::string x, std::string y) {
        if (x <= y) { a = std::move(x); b = std::move(y); }
        else        { a = std::move(y); b = std::move(x); }
    }
    bool operator<(const WordPair& o) const { return a != o.a ? a < o.a : b < o.b; }
    bool operator==(const WordPair& o) const { return a == o.a && b == o.b; }
};

struct WordPairSet {
    std::set<WordPair> strong;
    std::set<WordPair> weak;
};

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    bool contains(const std::string& word) const { return vectors_.count(word) != 0; }
    size_t size() const { return vectors_.size(); }

    void set(const std::string& word, std::vector<double> v) {
        if (dim_ == 0) dim_ = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != dim_)
            throw std::invalid_argument("embedding table: vector for '" + word + "' has dimension " +
                                        std::to_string(v.size()) + ", table dimension is " + std::to_string(dim_));
        vectors_[word] = std::move(v);
    }

    // OOV policy: absent words read as the zero vector
    const std::vector<double>* find(const std::string& word) const {
        auto it = vectors_.find(word);
        return it == vectors_.end() ? nullptr : &it->second;
    }

    const std::vector<double>& at(const std::string& word) const {
        auto it = vectors_.find(word);
        if (it == vectors_.end()) throw std::out_of_range("embedding table: no vector for '" + word + "'");
        return it->second;
    }

    std::vector<double>& at(const std::string& word) {
        auto it = vectors_.find(word);
        if (it == vectors_.end()) throw std::out_of_range("embedding table: no vector for '" + word + "'");
        return it->second;
    }

    const std::map<std::string, std::vector<double>>& all() const { return vectors_; }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("embedding table: cannot write " + path);
        out << std::setprecision(17);
        for (const auto& [word, vec] : vectors_) {
            out << word;
            for (double v : vec) out << ' ' << v;
            out << '\n';
        }
    }

    static EmbeddingTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("embedding table: cannot read " + path);
        EmbeddingTable table;
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string word;
            ls >> word;
            std::vector<double> vec;
            double v;
            while (ls >> v) vec.push_back(v);
            if (vec.empty())
                throw std::runtime_error("embedding table: no values at " + path + ":" + std::to_string(line_no));
            table.set(word, std::move(vec));
        }
        return table;
    }

private:
    int dim_ = 0;
    std::map<std::string, std::vector<double>> vectors_;
};

inline std::set<std::string> load_wordset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("lexicon: cannot read " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) words.insert(detail::to_lower(line));
    }
    return words;
}

inline void save_wordset(const std::set<std::string>& words, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("lexicon: cannot write " + path);
    for (const std::string& w : words) out << w << '\n';
}

inline DefinitionDictionary load_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dictionary: cannot read " + path);
    DefinitionDictionary dict;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("dictionary: missing tab at " + path + ":" + std::to_string(line_no));
        const std::string head = detail::to_lower(line.substr(0, tab));
        if (dict.entries.count(head))
            throw std::runtime_error("dictionary: duplicate headword '" + head + "' at " + path + ":" +
                                     std::to_string(line_no));
        dict.entries[head] = tokenize_full(line.substr(tab + 1)).tokens;
    }
    return dict;
}

// Built-in desk-scale lexicons; every set can be overridden from files.
inline LexiconSet default_lexicons() {
    LexiconSet lex;
    lex.gazetteer = {"obama",  "biden",   "trump",  "clinton", "blm",    "antifa", "nato",
                     "acme",   "omnicorp", "initech", "globex", "jonesy", "maybel", "foxnews"};
    lex.v_masculine = {"he", "him", "his", "man", "men", "boy", "father", "king", "actor", "waiter"};
    lex.v_feminine = {"she", "her", "hers", "woman", "women", "girl", "mother", "queen", "actress", "waitress"};
    lex.v_neutral = {"person", "people", "human", "citizen", "reader", "writer", "player", "driver"};
    lex.v_stereotype = {"nurse", "engineer", "babysitter", "boss", "secretary", "doctor"};
    lex.profanity = {"damn",  "crap",  "jerk",  "idiot", "moron", "loser",
                     "trash", "scum",  "fool",  "clown", "creep", "pig"};
    lex.sarcasm_markers = {"totally", "obviously", "surely", "clearly", "riiight", "suuure", "/s"};
    return lex;
}

// Overlays files from a directory onto the built-in sets; absent files keep
// the defaults. Expected names: gazetteer.txt, masculine.txt, feminine.txt,
// neutral.txt, stereotype.txt, profanity.txt, sarcasm_markers.txt.
inline LexiconSet load_lexicons(const std::string& dir) {
    LexiconSet lex = default_lexicons();
    const std::pair<const char*, std::set<std::string> LexiconSet::*> files[] = {
        {"gazetteer.txt", &LexiconSet::gazetteer},        {"masculine.txt", &LexiconSet::v_masculine},
        {"feminine.txt", &LexiconSet::v_feminine},        {"neutral.txt", &LexiconSet::v_neutral},
        {"stereotype.txt", &LexiconSet::v_stereotype},    {"profanity.txt", &LexiconSet::profanity},
        {"sarcasm_markers.txt", &LexiconSet::sarcasm_markers},
    };
    bool any = false;
    for (const auto& [name, member] : files) {
        const std::string path = dir + "/" + name;
        if (std::ifstream(path).good()) {
            lex.*member = load_wordset(path);
            any = true;
        }
    }
    if (!any) throw std::runtime_error("lexicon: no lexicon files found under " + dir);
    return lex;
}

// Desk-scale dictionary for the explicit-abuse embedding trainer: insult
// words defined largely in terms of one another, plus everyday anchors.
inline DefinitionDictionary default_definition_dictionary() {
    DefinitionDictionary dict;
    auto add = [&dict](const char* head, const char* def) {
        dict.entries[head] = tokenize_full(def).tokens;
    };
    add("idiot", "a stupid fool");
    add("fool", "a silly idiot");
    add("moron", "a very stupid idiot");
    add("stupid", "lacking sense silly");
    add("silly", "stupid or foolish");
    add("jerk", "a rude mean creep");
    add("creep", "an unpleasant jerk");
    add("loser", "a failure or jerk");
    add("trash", "worthless garbage junk");
    add("garbage", "waste or trash");
    add("junk", "useless trash or garbage");
    add("scum", "worthless filth like trash");
    add("filth", "dirty matter scum");
    add("clown", "a silly fool who jokes");
    add("pig", "a greedy dirty animal");
    add("damn", "a curse expressing anger");
    add("crap", "worthless junk nonsense");
    add("nonsense", "silly meaningless crap");
    add("mean", "unkind and rude");
    add("rude", "impolite and mean");
    add("nice", "kind and pleasant");
    add("kind", "nice and gentle");
    add("sweet", "pleasant kind or nice");
    add("gentle", "mild and kind");
    add("animal", "a living creature");
    add("curse", "a rude damn word");
    add("failure", "lack of success");
    add("dirty", "covered in filth");
    add("waste", "useless garbage");
    add("useless", "having no value junk");
    return dict;
}

namespace detail {

inline const std::set<std::string>& second_person_pronouns() {
    static const std::set<std::string> words = {"you", "your", "yours", "yourself", "yourselves", "u", "ur"};
    return words;
}

inline const std::set<std::string>& positive_words() {
    static const std::set<std::string> words = {"sweet", "nice",  "great",   "good",  "lovely", "wonderful",
                                                "smart", "genius", "brilliant", "kind", "classy", "charming"};
    return words;
}

inline const std::set<std::string>& negation_words() {
    static const std::set<std::string> words = {"not", "never", "no", "hardly", "barely", "nobody", "nothing"};
    return words;
}

} // namespace detail

} // namespace ald
