#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dicttrans {

// Token contents are raw byte sequences; ids are dense 0..vocab_size-1 with
// the 256 single-byte tokens always present.
using TokenBytes = std::string;

struct MergeRule {
    TokenBytes left;
    TokenBytes right;

    TokenBytes result() const { return left + right; }
    bool operator==(const MergeRule&) const = default;
};

// Byte-level BPE tokenizer. Immutable after construction; remove_tokens
// returns a new tokenizer. Tokenization is total: any byte sequence maps to
// tokens whose concatenation reproduces the input exactly.
class BpeTokenizer {
public:
    struct TrainOptions {
        size_t vocab_budget = 50265;
        size_t min_frequency = 2;
    };

    // Base tokenizer: the 256 single-byte tokens, no merges.
    BpeTokenizer();

    static BpeTokenizer train(const std::vector<std::string>& corpus, const TrainOptions& opts);

    // Splits on Unicode whitespace; whitespace runs become their own
    // pre-tokens so that concatenation reproduces the input.
    static std::vector<std::string_view> pretokenize(std::string_view text);

    std::vector<TokenBytes> tokenize(std::string_view text) const;

    // Removing a token drops it from the vocab together with every merge rule
    // whose left, right, or result is that token. Single-byte tokens are not
    // removable.
    BpeTokenizer remove_tokens(const std::set<TokenBytes>& doomed) const;

    size_t vocab_size() const { return vocab_.size(); }
    const std::vector<TokenBytes>& vocab() const { return vocab_; }
    const std::vector<MergeRule>& merges() const { return merges_; }
    bool contains(std::string_view bytes) const;
    // -1 if absent.
    int token_id(std::string_view bytes) const;

    // Total tokens over the corpus, excluding pure-whitespace pre-tokens.
    size_t count_subwords(const std::vector<std::string>& corpus) const;

    std::string serialize() const;
    static BpeTokenizer deserialize(const std::string& text);
    void save(const std::string& path) const;
    static BpeTokenizer load(const std::string& path);

private:
    struct PairHash {
        size_t operator()(const std::pair<std::string, std::string>& p) const;
    };

    void add_token(TokenBytes bytes);
    void rebuild_merge_ranks();
    // Applies merges to one non-whitespace pre-token.
    void tokenize_pretoken(std::string_view word, std::vector<TokenBytes>& out) const;

    std::vector<TokenBytes> vocab_;
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<MergeRule> merges_;  // rank = index
    std::unordered_map<std::pair<std::string, std::string>, int, PairHash> merge_rank_;
};

}  // namespace dicttrans
