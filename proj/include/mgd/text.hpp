#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgd/common.hpp"
#include "mgd/rng.hpp"

// Closed-vocabulary tokenizer. The vocabulary is fixed at compile time and
// also committed to data/vocab.json (index == token id); load_vocab_file can
// verify the two agree.

namespace mgd {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kSeqLen = 16;

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> v = [] {
        std::vector<std::string> words = {"<pad>", "<bos>", "<eos>", "<unk>"};
        for (int i = 0; i <= 20; ++i) words.push_back(std::to_string(i));
        for (const char* w : {"a", "area", "with", "buildings", "road", "roads", "open", "land", "and", "water", "in",
                              "region", "rural", "suburban", "dense", "tropical", "savanna", "coastal", "desert",
                              "temperate", "boreal"})
            words.push_back(w);
        return words;
    }();
    return v;
}

inline int vocab_size() { return int(vocabulary().size()); }

inline int word_id(const std::string& w) {
    const auto& v = vocabulary();
    for (size_t i = 4; i < v.size(); ++i)
        if (v[i] == w) return int(i);
    return kUnk;
}

inline std::vector<int> tokenize(const std::string& raw) {
    std::vector<int> ids;
    ids.push_back(kBos);
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            ids.push_back(word_id(word));
            word.clear();
        }
    };
    for (char ch : raw) {
        if (std::isalnum(static_cast<unsigned char>(ch)))
            word.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
        else
            flush();
    }
    flush();
    if (int(ids.size()) > kSeqLen - 1) ids.resize(kSeqLen - 1);
    ids.push_back(kEos);
    while (int(ids.size()) < kSeqLen) ids.push_back(kPad);
    return ids;
}

inline std::string detokenize(const std::vector<int>& ids) {
    std::string out;
    const auto& v = vocabulary();
    for (int id : ids) {
        if (id == kBos || id == kPad) continue;
        if (id == kEos) break;
        if (!out.empty()) out.push_back(' ');
        out += id >= 0 && id < int(v.size()) ? v[size_t(id)] : v[kUnk];
    }
    return out;
}

struct Prompt {
    std::string raw;
    std::vector<int> tokens;
    bool masked = false;

    static Prompt of(const std::string& text) { return Prompt{text, tokenize(text), false}; }

    static Prompt empty() {
        Prompt p;
        p.raw = "";
        p.tokens = tokenize("");
        p.masked = true;
        return p;
    }
};

// With probability p the prompt collapses to the canonical empty form.
// Masking an already-masked prompt is a no-op, so masking is idempotent.
inline Prompt mask_prompt(const Prompt& prompt, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw ConfigError("mask_prompt: p must be in [0,1]");
    if (prompt.masked) return prompt;
    if (rng.uniform() < p) return Prompt::empty();
    return prompt;
}

inline void write_vocab_file(const std::string& path) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& w : vocabulary()) j.push_back(w);
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << "\n";
}

inline std::vector<std::string> load_vocab_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MissingArtifact("no vocabulary file at " + path);
    nlohmann::json j;
    f >> j;
    std::vector<std::string> words;
    for (const auto& e : j) words.push_back(e.get<std::string>());
    return words;
}

}  // namespace mgd
