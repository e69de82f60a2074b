#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dicttrans/bpe.hpp"

namespace dicttrans {

// Tokenized dictionary pair: src = definition tokens, tgt = entry tokens.
// Both sides non-empty; pairs with an empty side are dropped upstream.
struct SentencePair {
    std::vector<TokenBytes> src;
    std::vector<TokenBytes> tgt;
};

struct AlignmentLink {
    int tgt_index;
    int src_index;
    bool operator==(const AlignmentLink&) const = default;
};

enum class EmMode {
    kModel1,  // uniform alignment prior over NULL + source positions
    kDiag,    // fast_align-style diagonal prior with null probability p0
};

struct AlignerConfig {
    int model1_iterations = 2;
    int diag_iterations = 5;
    double lambda = 4.0;  // diagonal tension
    double p0 = 0.08;     // null-alignment probability
    double floor_prob = 1e-9;
    int threads = 1;
};

// Lexical translation table p(tgt type | src type) plus the alignment-prior
// parameters. Immutable once trained; Viterbi queries are read-only.
class AlignmentModel {
public:
    double lambda = 4.0;
    double p0 = 0.08;
    double floor_prob = 1e-9;
    bool diag_prior = false;

    // Corpus log-likelihood before each EM update, one entry per iteration.
    std::vector<double> iteration_log_likelihood;

    // p(tgt|src); src_type empty = the NULL word. Unknown types get
    // floor_prob, known types with no table entry get 0.
    double prob(const TokenBytes& src_type, const TokenBytes& tgt_type) const;

    // Rows as byte strings, for inspection and tests. NULL row key is "".
    std::map<TokenBytes, std::map<TokenBytes, double>> table() const;

private:
    friend AlignmentModel em_train(const std::vector<SentencePair>&, int, EmMode,
                                   const AlignerConfig&);
    friend AlignmentModel train_aligner(const std::vector<SentencePair>&, const AlignerConfig&);
    friend class EmRunner;

    static constexpr int kNullSrc = 0;

    int src_type_id(const TokenBytes& bytes) const;
    int tgt_type_id(const TokenBytes& bytes) const;

    std::vector<TokenBytes> src_types_;  // index 0 is the NULL word ""
    std::vector<TokenBytes> tgt_types_;
    std::unordered_map<std::string, int> src_ids_;
    std::unordered_map<std::string, int> tgt_ids_;
    // ttable_[s] maps tgt type id -> p(t|s); rows sum to 1 after an M-step.
    std::vector<std::unordered_map<int, double>> ttable_;
};

// Runs `iterations` EM updates in a single mode.
AlignmentModel em_train(const std::vector<SentencePair>& corpus, int iterations, EmMode mode,
                        const AlignerConfig& cfg = {});

// Full schedule: model1 warm start followed by diagonal-prior EM
// (default 2 + 5 = 7 iterations).
AlignmentModel train_aligner(const std::vector<SentencePair>& corpus, const AlignerConfig& cfg = {});

// Per-target-position argmax alignment. NULL selections emit no link; ties go
// to NULL first, then the smaller source index.
std::vector<AlignmentLink> viterbi(const AlignmentModel& model, const SentencePair& pair);

// Viterbi over the corpus, counting each emitted link occurrence, keyed by
// (tgt byte string, src byte string).
std::map<std::pair<TokenBytes, TokenBytes>, uint64_t> link_counts(
    const AlignmentModel& model, const std::vector<SentencePair>& corpus);

// Pharaoh format: one line per pair, "tgtIdx-srcIdx" entries.
std::string format_pharaoh(const AlignmentModel& model, const std::vector<SentencePair>& corpus);

}  // namespace dicttrans
