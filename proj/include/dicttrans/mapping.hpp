#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dicttrans/align.hpp"
#include "dicttrans/bpe.hpp"
#include "dicttrans/dictionary.hpp"

namespace dicttrans {

// Cumulative one-to-many target-to-source subword mapping. Keys of `entries`
// and `mapped_at` always coincide; every count is >= 1.
struct SubwordMap {
    std::map<TokenBytes, std::map<TokenBytes, uint64_t>> entries;
    std::map<TokenBytes, int> mapped_at;  // 1-based iteration index
};

struct IterationDelta {
    int iteration = 0;
    std::map<TokenBytes, std::map<TokenBytes, uint64_t>> new_mappings;
    std::set<TokenBytes> removed;
};

struct TransferReport {
    std::vector<uint64_t> per_iteration;  // new mapped types, index 0 = iteration 1
    uint64_t vocab_size = 0;              // original target vocab size
    uint64_t mapped_total = 0;
    double coverage = 0.0;
    bool truncated = false;
    uint64_t skipped_pairs = 0;  // pairs with an empty tokenized side
};

struct MappingConfig {
    AlignerConfig aligner;
    bool removal = true;
    int max_loops = 20;
};

struct MappingResult {
    SubwordMap map;
    TransferReport report;
    std::vector<IterationDelta> deltas;
    BpeTokenizer final_tgt_tokenizer;
};

// The iterate-until-fixpoint driver: tokenize entries/definitions, align,
// map new target types, remove them from the target tokenizer, repeat until
// no new type is mapped. With removal off a single loop runs.
MappingResult run_mapping(const BpeTokenizer& src_tok, const BpeTokenizer& tgt_tok,
                          const DictionaryCorpus& dict, const MappingConfig& cfg);

// Tokens of the original (pre-removal) target vocabulary that never received
// a source mapping.
std::set<TokenBytes> unmapped_tokens(const SubwordMap& map, const BpeTokenizer& original_tgt_tok);

// Rebuilds a report from a finished map; `loops_run` pads the trailing
// zero-iteration entries the driver observed.
TransferReport make_report(const SubwordMap& map, const BpeTokenizer& original_tgt_tok,
                           size_t loops_run = 0, bool truncated = false);

// Coverage and per-iteration tables as aligned-column text.
std::string render_report(const TransferReport& report);

// Mapping file round-trip (versioned text format; hex token bytes plus a
// printable rendering per row).
std::string serialize_mapping(const SubwordMap& map, const TransferReport& report);
void save_mapping(const SubwordMap& map, const TransferReport& report, const std::string& path);
std::pair<SubwordMap, TransferReport> parse_mapping(const std::string& text);
std::pair<SubwordMap, TransferReport> load_mapping(const std::string& path);

}  // namespace dicttrans
