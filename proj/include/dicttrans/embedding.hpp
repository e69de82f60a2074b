#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dicttrans/bpe.hpp"
#include "dicttrans/mapping.hpp"

namespace dicttrans {

// Dense row-major vocab_size x dim matrix; row order follows token ids.
struct EmbeddingMatrix {
    uint32_t dim = 0;
    std::vector<float> data;

    size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const float> row(size_t i) const { return {data.data() + i * dim, dim}; }
    std::span<float> row(size_t i) { return {data.data() + i * dim, dim}; }
};

enum class Provenance : uint8_t { kCopied, kAveraged, kUnk, kRandom };

const char* provenance_name(Provenance p);

struct InitPolicy {
    std::optional<TokenBytes> unk_token;
    uint64_t rng_seed = 42;
    std::vector<TokenBytes> special_tokens;
    // Copy rows for tokens whose bytes decode to all-digit/punctuation text
    // and exist verbatim in the source vocab.
    bool copy_digits_punct = true;
};

struct InitResult {
    EmbeddingMatrix matrix;
    std::vector<Provenance> provenance;  // one per target token id
};

// c(s|t): counts normalized to weights summing to 1.
std::map<TokenBytes, double> relative_counts(const std::map<TokenBytes, uint64_t>& map_entry);

// Builds the target matrix: copy rows for specials and digit/punctuation
// tokens shared with the source vocab, weighted-average rows for mapped
// tokens, UNK or seeded moment-matched Gaussian rows for the rest.
InitResult init_target_matrix(const EmbeddingMatrix& src_emb, const BpeTokenizer& src_tok,
                              const BpeTokenizer& tgt_tok, const SubwordMap& map,
                              const InitPolicy& policy);

// Binary format: magic "DTEM", u16 LE version, u32 LE vocab_size, u32 LE dim,
// then vocab_size*dim float32 LE row-major. Text format: "vocab_size dim"
// header line, one space-separated row per line. load sniffs the magic.
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& m, const std::string& path, bool binary = true);

EmbeddingMatrix parse_embeddings_text(const std::string& text, const std::string& origin = "<memory>");
std::string format_embeddings_text(const EmbeddingMatrix& m);

// TSV manifest: id, hex token bytes, provenance. One row per target token.
std::string format_manifest(const BpeTokenizer& tgt_tok, const std::vector<Provenance>& provenance);

}  // namespace dicttrans
