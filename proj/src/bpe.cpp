#include "dicttrans/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

#include "dicttrans/hex.hpp"
#include "dicttrans/unicode.hpp"

namespace dicttrans {

size_t BpeTokenizer::PairHash::operator()(const std::pair<std::string, std::string>& p) const {
    size_t h1 = std::hash<std::string>{}(p.first);
    size_t h2 = std::hash<std::string>{}(p.second);
    return h1 ^ (h2 * 0x9E3779B97F4A7C15ULL + (h1 << 6) + (h1 >> 2));
}

BpeTokenizer::BpeTokenizer() {
    vocab_.reserve(256);
    for (int b = 0; b < 256; ++b) add_token(std::string(1, static_cast<char>(b)));
}

void BpeTokenizer::add_token(TokenBytes bytes) {
    int id = static_cast<int>(vocab_.size());
    token_to_id_.emplace(bytes, id);
    vocab_.push_back(std::move(bytes));
}

void BpeTokenizer::rebuild_merge_ranks() {
    merge_rank_.clear();
    for (size_t r = 0; r < merges_.size(); ++r) {
        merge_rank_[{merges_[r].left, merges_[r].right}] = static_cast<int>(r);
    }
}

bool BpeTokenizer::contains(std::string_view bytes) const {
    return token_to_id_.find(std::string(bytes)) != token_to_id_.end();
}

int BpeTokenizer::token_id(std::string_view bytes) const {
    auto it = token_to_id_.find(std::string(bytes));
    return it == token_to_id_.end() ? -1 : it->second;
}

std::vector<std::string_view> BpeTokenizer::pretokenize(std::string_view text) {
    std::vector<std::string_view> out;
    size_t pos = 0;
    size_t run_start = 0;
    bool run_is_space = false;
    bool have_run = false;
    while (pos < text.size()) {
        size_t cp_start = pos;
        uint32_t cp = unicode::decode_utf8(text, pos);
        bool space = unicode::is_whitespace(cp);
        if (!have_run || space != run_is_space) {
            if (have_run) out.push_back(text.substr(run_start, cp_start - run_start));
            run_start = cp_start;
            run_is_space = space;
            have_run = true;
        }
    }
    if (have_run) out.push_back(text.substr(run_start));
    return out;
}

void BpeTokenizer::tokenize_pretoken(std::string_view word, std::vector<TokenBytes>& out) const {
    const size_t n = word.size();
    if (n == 0) return;
    if (n == 1) {
        out.emplace_back(word);
        return;
    }

    // Doubly linked list over byte-level symbols; agenda of candidate merges
    // ordered by (rank, byte position).
    struct Sym {
        size_t start;
        size_t len;
        int prev;
        int next;
        bool alive;
    };
    std::vector<Sym> syms(n);
    for (size_t i = 0; i < n; ++i) {
        syms[i] = {i, 1, static_cast<int>(i) - 1,
                   i + 1 < n ? static_cast<int>(i) + 1 : -1, true};
    }

    auto sym_bytes = [&](int i) { return word.substr(syms[i].start, syms[i].len); };
    auto pair_rank = [&](int l, int r) -> int {
        auto it = merge_rank_.find({std::string(sym_bytes(l)), std::string(sym_bytes(r))});
        return it == merge_rank_.end() ? -1 : it->second;
    };

    using Cand = std::tuple<int, size_t, int>;  // rank, start byte, left index
    std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> agenda;
    for (size_t i = 0; i + 1 < n; ++i) {
        int rank = pair_rank(static_cast<int>(i), static_cast<int>(i) + 1);
        if (rank >= 0) agenda.push({rank, i, static_cast<int>(i)});
    }

    while (!agenda.empty()) {
        auto [rank, start, li] = agenda.top();
        agenda.pop();
        if (!syms[li].alive) continue;
        int ri = syms[li].next;
        if (ri < 0 || !syms[ri].alive) continue;
        if (pair_rank(li, ri) != rank) continue;  // stale entry

        syms[li].len += syms[ri].len;
        syms[ri].alive = false;
        syms[li].next = syms[ri].next;
        if (syms[li].next >= 0) syms[syms[li].next].prev = li;

        if (syms[li].prev >= 0) {
            int r2 = pair_rank(syms[li].prev, li);
            if (r2 >= 0) agenda.push({r2, syms[syms[li].prev].start, syms[li].prev});
        }
        if (syms[li].next >= 0) {
            int r2 = pair_rank(li, syms[li].next);
            if (r2 >= 0) agenda.push({r2, syms[li].start, li});
        }
    }

    for (int i = 0; i >= 0; i = syms[i].next) out.emplace_back(sym_bytes(i));
}

std::vector<TokenBytes> BpeTokenizer::tokenize(std::string_view text) const {
    std::vector<TokenBytes> out;
    for (std::string_view pre : pretokenize(text)) tokenize_pretoken(pre, out);
    return out;
}

size_t BpeTokenizer::count_subwords(const std::vector<std::string>& corpus) const {
    size_t total = 0;
    std::vector<TokenBytes> toks;
    for (const std::string& doc : corpus) {
        for (std::string_view pre : pretokenize(doc)) {
            size_t pos = 0;
            bool all_space = true;
            while (pos < pre.size()) {
                if (!unicode::is_whitespace(unicode::decode_utf8(pre, pos))) {
                    all_space = false;
                    break;
                }
            }
            if (all_space) continue;
            toks.clear();
            tokenize_pretoken(pre, toks);
            total += toks.size();
        }
    }
    return total;
}

BpeTokenizer BpeTokenizer::train(const std::vector<std::string>& corpus, const TrainOptions& opts) {
    if (opts.vocab_budget < 256) throw std::runtime_error("vocab_budget must be at least 256");

    BpeTokenizer tok;

    // Distinct pre-tokens with counts; each starts as its byte symbols.
    std::map<std::string, size_t> word_counts;
    for (const std::string& doc : corpus) {
        for (std::string_view pre : pretokenize(doc)) word_counts[std::string(pre)] += 1;
    }

    struct Word {
        std::vector<TokenBytes> syms;
        size_t count;
    };
    std::vector<Word> words;
    words.reserve(word_counts.size());
    for (auto& [w, c] : word_counts) {
        Word word;
        word.count = c;
        word.syms.reserve(w.size());
        for (char b : w) word.syms.emplace_back(1, b);
        words.push_back(std::move(word));
    }

    using Pair = std::pair<std::string, std::string>;
    std::unordered_map<Pair, size_t, PairHash> pair_counts;
    std::unordered_map<Pair, std::set<size_t>, PairHash> pair_words;

    for (size_t wi = 0; wi < words.size(); ++wi) {
        const Word& w = words[wi];
        for (size_t i = 0; i + 1 < w.syms.size(); ++i) {
            Pair p{w.syms[i], w.syms[i + 1]};
            pair_counts[p] += w.count;
            pair_words[p].insert(wi);
        }
    }

    // Candidates ordered by count descending, then (left, right) ascending.
    struct CandLess {
        bool operator()(const std::tuple<size_t, std::string, std::string>& a,
                        const std::tuple<size_t, std::string, std::string>& b) const {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
            return std::get<2>(a) < std::get<2>(b);
        }
    };
    std::set<std::tuple<size_t, std::string, std::string>, CandLess> candidates;
    for (const auto& [p, c] : pair_counts) {
        if (c >= opts.min_frequency) candidates.insert({c, p.first, p.second});
    }

    while (tok.vocab_size() < opts.vocab_budget && !candidates.empty()) {
        auto [best_count, left, right] = *candidates.begin();
        Pair best{left, right};
        TokenBytes merged = left + right;

        // A pair can resurface whose result already exists (e.g. learned from
        // a different split); skip it rather than duplicating the token.
        if (!tok.contains(merged)) {
            tok.merge_rank_[best] = static_cast<int>(tok.merges_.size());
            tok.merges_.push_back({left, right});
            tok.add_token(merged);
        } else if (tok.merge_rank_.find(best) == tok.merge_rank_.end()) {
            tok.merge_rank_[best] = static_cast<int>(tok.merges_.size());
            tok.merges_.push_back({left, right});
        }

        std::set<size_t> affected = pair_words[best];
        for (size_t wi : affected) {
            Word& w = words[wi];
            // Drop this word's old pair contributions.
            for (size_t i = 0; i + 1 < w.syms.size(); ++i) {
                Pair p{w.syms[i], w.syms[i + 1]};
                auto it = pair_counts.find(p);
                if (it == pair_counts.end()) continue;
                candidates.erase({it->second, p.first, p.second});
                it->second -= w.count;
                if (it->second >= opts.min_frequency) {
                    candidates.insert({it->second, p.first, p.second});
                }
            }
            // Left-to-right replacement of the merged pair.
            std::vector<TokenBytes> next;
            next.reserve(w.syms.size());
            for (size_t i = 0; i < w.syms.size();) {
                if (i + 1 < w.syms.size() && w.syms[i] == left && w.syms[i + 1] == right) {
                    next.push_back(merged);
                    i += 2;
                } else {
                    next.push_back(w.syms[i]);
                    ++i;
                }
            }
            w.syms = std::move(next);
            // Add the new contributions back.
            for (size_t i = 0; i + 1 < w.syms.size(); ++i) {
                Pair p{w.syms[i], w.syms[i + 1]};
                auto it = pair_counts.find(p);
                size_t old = it == pair_counts.end() ? 0 : it->second;
                if (old >= opts.min_frequency) candidates.erase({old, p.first, p.second});
                size_t now = old + w.count;
                pair_counts[p] = now;
                pair_words[p].insert(wi);
                if (now >= opts.min_frequency) candidates.insert({now, p.first, p.second});
            }
        }
        candidates.erase({pair_counts[best], best.first, best.second});
        pair_counts.erase(best);
        pair_words.erase(best);
    }
    return tok;
}

BpeTokenizer BpeTokenizer::remove_tokens(const std::set<TokenBytes>& doomed) const {
    for (const TokenBytes& t : doomed) {
        if (t.size() <= 1) {
            throw std::runtime_error("cannot remove base byte token '" + hex_encode(t) + "'");
        }
        if (!contains(t)) {
            throw std::runtime_error("cannot remove absent token '" + hex_encode(t) + "'");
        }
    }
    BpeTokenizer out;
    out.vocab_.clear();
    out.token_to_id_.clear();
    for (const TokenBytes& t : vocab_) {
        if (doomed.find(t) == doomed.end()) out.add_token(t);
    }
    for (const MergeRule& m : merges_) {
        if (doomed.count(m.left) || doomed.count(m.right) || doomed.count(m.result())) continue;
        out.merges_.push_back(m);
    }
    out.rebuild_merge_ranks();
    return out;
}

std::string BpeTokenizer::serialize() const {
    nlohmann::json j;
    j["version"] = 1;
    nlohmann::json vocab = nlohmann::json::array();
    for (const TokenBytes& t : vocab_) vocab.push_back(hex_encode(t));
    j["vocab"] = std::move(vocab);
    nlohmann::json merges = nlohmann::json::array();
    for (const MergeRule& m : merges_) {
        merges.push_back({hex_encode(m.left), hex_encode(m.right)});
    }
    j["merges"] = std::move(merges);
    return j.dump(2) + "\n";
}

BpeTokenizer BpeTokenizer::deserialize(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("tokenizer file: ") + e.what());
    }
    if (!j.contains("version") || j["version"] != 1) {
        throw std::runtime_error("tokenizer file: missing or unsupported version");
    }
    if (!j.contains("vocab") || !j["vocab"].is_array()) {
        throw std::runtime_error("tokenizer file: missing vocab array");
    }
    if (!j.contains("merges") || !j["merges"].is_array()) {
        throw std::runtime_error("tokenizer file: missing merges array");
    }

    BpeTokenizer tok;
    tok.vocab_.clear();
    tok.token_to_id_.clear();
    for (const auto& v : j["vocab"]) {
        if (!v.is_string()) throw std::runtime_error("tokenizer file: vocab entry is not a string");
        TokenBytes bytes = hex_decode(v.get<std::string>());
        if (bytes.empty()) throw std::runtime_error("tokenizer file: empty vocab entry");
        if (tok.contains(bytes)) {
            throw std::runtime_error("tokenizer file: duplicate vocab entry " + hex_encode(bytes));
        }
        tok.add_token(std::move(bytes));
    }
    std::vector<bool> have_byte(256, false);
    for (const TokenBytes& t : tok.vocab_) {
        if (t.size() == 1) have_byte[static_cast<unsigned char>(t[0])] = true;
    }
    for (int b = 0; b < 256; ++b) {
        if (!have_byte[b]) {
            throw std::runtime_error("tokenizer file: missing base byte token 0x" +
                                     hex_encode(std::string(1, static_cast<char>(b))));
        }
    }
    for (const auto& m : j["merges"]) {
        if (!m.is_array() || m.size() != 2 || !m[0].is_string() || !m[1].is_string()) {
            throw std::runtime_error("tokenizer file: merge entry is not a [left, right] pair");
        }
        MergeRule rule{hex_decode(m[0].get<std::string>()), hex_decode(m[1].get<std::string>())};
        if (!tok.contains(rule.left) || !tok.contains(rule.right) || !tok.contains(rule.result())) {
            throw std::runtime_error("tokenizer file: merge references unknown token [" +
                                     hex_encode(rule.left) + ", " + hex_encode(rule.right) + "]");
        }
        tok.merges_.push_back(std::move(rule));
    }
    tok.rebuild_merge_ranks();
    return tok;
}

void BpeTokenizer::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write tokenizer file: " + path);
    out << serialize();
}

BpeTokenizer BpeTokenizer::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tokenizer file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

}  // namespace dicttrans
