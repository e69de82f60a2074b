#include "dicttrans/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dicttrans/hex.hpp"
#include "dicttrans/unicode.hpp"

namespace dicttrans {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::kCopied: return "copied";
        case Provenance::kAveraged: return "averaged";
        case Provenance::kUnk: return "unk";
        case Provenance::kRandom: return "random";
    }
    return "?";
}

std::map<TokenBytes, double> relative_counts(const std::map<TokenBytes, uint64_t>& map_entry) {
    if (map_entry.empty()) throw std::runtime_error("relative_counts: empty mapping entry");
    uint64_t total = 0;
    for (const auto& [s, c] : map_entry) {
        if (c == 0) throw std::runtime_error("relative_counts: zero count");
        total += c;
    }
    std::map<TokenBytes, double> weights;
    for (const auto& [s, c] : map_entry) {
        weights[s] = static_cast<double>(c) / static_cast<double>(total);
    }
    return weights;
}

namespace {

struct SourceMoments {
    std::vector<double> mean;
    std::vector<double> stddev;
};

SourceMoments column_moments(const EmbeddingMatrix& m) {
    SourceMoments out;
    out.mean.assign(m.dim, 0.0);
    out.stddev.assign(m.dim, 0.0);
    size_t n = m.rows();
    if (n == 0) return out;
    for (size_t r = 0; r < n; ++r) {
        auto row = m.row(r);
        for (uint32_t d = 0; d < m.dim; ++d) out.mean[d] += row[d];
    }
    for (uint32_t d = 0; d < m.dim; ++d) out.mean[d] /= static_cast<double>(n);
    for (size_t r = 0; r < n; ++r) {
        auto row = m.row(r);
        for (uint32_t d = 0; d < m.dim; ++d) {
            double diff = row[d] - out.mean[d];
            out.stddev[d] += diff * diff;
        }
    }
    for (uint32_t d = 0; d < m.dim; ++d) {
        out.stddev[d] = std::sqrt(out.stddev[d] / static_cast<double>(n));
    }
    return out;
}

void fill_random_row(std::span<float> row, const SourceMoments& moments, uint64_t seed,
                     uint64_t token_id) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(token_id), static_cast<uint32_t>(token_id >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (size_t d = 0; d < row.size(); ++d) {
        row[d] = static_cast<float>(moments.mean[d] + moments.stddev[d] * normal(rng));
    }
}

}  // namespace

InitResult init_target_matrix(const EmbeddingMatrix& src_emb, const BpeTokenizer& src_tok,
                              const BpeTokenizer& tgt_tok, const SubwordMap& map,
                              const InitPolicy& policy) {
    if (src_emb.rows() != src_tok.vocab_size()) {
        throw std::runtime_error("source embedding rows (" + std::to_string(src_emb.rows()) +
                                 ") do not match source vocab size (" +
                                 std::to_string(src_tok.vocab_size()) + ")");
    }
    for (const TokenBytes& sp : policy.special_tokens) {
        if (!src_tok.contains(sp)) {
            throw std::runtime_error("special token '" + printable_bytes(sp) +
                                     "' missing from source vocab");
        }
    }
    int unk_id = -1;
    if (policy.unk_token) {
        unk_id = src_tok.token_id(*policy.unk_token);
        if (unk_id < 0) {
            throw std::runtime_error("UNK token '" + printable_bytes(*policy.unk_token) +
                                     "' missing from source vocab");
        }
    }

    std::set<TokenBytes> specials(policy.special_tokens.begin(), policy.special_tokens.end());
    SourceMoments moments = column_moments(src_emb);

    InitResult result;
    result.matrix.dim = src_emb.dim;
    result.matrix.data.assign(tgt_tok.vocab_size() * src_emb.dim, 0.0f);
    result.provenance.assign(tgt_tok.vocab_size(), Provenance::kRandom);

    const auto& vocab = tgt_tok.vocab();
    for (size_t id = 0; id < vocab.size(); ++id) {
        const TokenBytes& tok = vocab[id];
        auto out = result.matrix.row(id);

        int copy_src = -1;
        if (specials.count(tok)) {
            copy_src = src_tok.token_id(tok);
        } else if (policy.copy_digits_punct && unicode::all_digit_or_punct(tok)) {
            copy_src = src_tok.token_id(tok);  // -1 when absent: fall through
        }
        if (copy_src >= 0) {
            auto src_row = src_emb.row(copy_src);
            std::copy(src_row.begin(), src_row.end(), out.begin());
            result.provenance[id] = Provenance::kCopied;
            continue;
        }

        bool averaged = false;
        auto it = map.entries.find(tok);
        if (it != map.entries.end()) {
            // Keep only sources present in the source vocab, renormalizing
            // over the survivors. std::map iteration gives the fixed
            // byte-sorted summation order.
            std::map<TokenBytes, uint64_t> present;
            for (const auto& [s, c] : it->second) {
                if (src_tok.contains(s)) present.emplace(s, c);
            }
            if (!present.empty()) {
                auto weights = relative_counts(present);
                std::vector<double> acc(src_emb.dim, 0.0);
                std::vector<double> lo(src_emb.dim, std::numeric_limits<double>::infinity());
                std::vector<double> hi(src_emb.dim, -std::numeric_limits<double>::infinity());
                for (const auto& [s, w] : weights) {
                    auto src_row = src_emb.row(src_tok.token_id(s));
                    for (uint32_t d = 0; d < src_emb.dim; ++d) {
                        double x = src_row[d];
                        acc[d] += w * x;
                        lo[d] = std::min(lo[d], x);
                        hi[d] = std::max(hi[d], x);
                    }
                }
                for (uint32_t d = 0; d < src_emb.dim; ++d) {
                    // Convex combination; clamp away any last-ulp rounding.
                    out[d] = static_cast<float>(std::clamp(acc[d], lo[d], hi[d]));
                }
                result.provenance[id] = Provenance::kAveraged;
                averaged = true;
            }
        }
        if (averaged) continue;

        if (unk_id >= 0) {
            auto src_row = src_emb.row(unk_id);
            std::copy(src_row.begin(), src_row.end(), out.begin());
            result.provenance[id] = Provenance::kUnk;
        } else {
            fill_random_row(out, moments, policy.rng_seed, id);
            result.provenance[id] = Provenance::kRandom;
        }
    }
    return result;
}

namespace {

constexpr char kMagic[4] = {'D', 'T', 'E', 'M'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

std::string format_embeddings_text(const EmbeddingMatrix& m) {
    std::ostringstream out;
    out << m.rows() << ' ' << m.dim << '\n';
    out.precision(9);
    for (size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (uint32_t d = 0; d < m.dim; ++d) {
            if (d) out << ' ';
            out << row[d];
        }
        out << '\n';
    }
    return out.str();
}

EmbeddingMatrix parse_embeddings_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty embedding file");
    size_t rows;
    uint32_t dim;
    {
        std::istringstream header(line);
        if (!(header >> rows >> dim) || dim == 0) {
            throw std::runtime_error(origin + ":1: bad embedding header");
        }
    }
    EmbeddingMatrix m;
    m.dim = dim;
    m.data.reserve(rows * dim);
    size_t lineno = 1;
    for (size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) {
            throw std::runtime_error(origin + ": expected " + std::to_string(rows) +
                                     " rows, file ends after " + std::to_string(r));
        }
        ++lineno;
        std::istringstream ls(line);
        for (uint32_t d = 0; d < dim; ++d) {
            float v;
            if (!(ls >> v)) {
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": row has fewer than " + std::to_string(dim) +
                                         " values");
            }
            m.data.push_back(v);
        }
        float extra;
        if (ls >> extra) {
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": row has more than " + std::to_string(dim) + " values");
        }
    }
    return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write embedding file: " + path);
    if (!binary) {
        out << format_embeddings_text(m);
        return;
    }
    out.write(kMagic, 4);
    write_le<uint16_t>(out, kVersion);
    write_le<uint32_t>(out, static_cast<uint32_t>(m.rows()));
    write_le<uint32_t>(out, m.dim);
    for (float v : m.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_le<uint32_t>(out, bits);
    }
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) {
        uint16_t version = read_le<uint16_t>(in);
        if (version != kVersion) {
            throw std::runtime_error(path + ": unsupported embedding file version " +
                                     std::to_string(version));
        }
        uint32_t rows = read_le<uint32_t>(in);
        uint32_t dim = read_le<uint32_t>(in);
        if (!in || dim == 0) throw std::runtime_error(path + ": bad embedding header");
        EmbeddingMatrix m;
        m.dim = dim;
        m.data.resize(static_cast<size_t>(rows) * dim);
        for (size_t i = 0; i < m.data.size(); ++i) {
            uint32_t bits = read_le<uint32_t>(in);
            if (!in) {
                throw std::runtime_error(path + ": header promises " + std::to_string(rows) +
                                         " rows but the file is shorter");
            }
            std::memcpy(&m.data[i], &bits, 4);
        }
        char extra;
        if (in.read(&extra, 1)) {
            throw std::runtime_error(path + ": trailing bytes after matrix data");
        }
        return m;
    }
    // Not the binary magic: parse as text.
    in.clear();
    in.seekg(0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_embeddings_text(buf.str(), path);
}

std::string format_manifest(const BpeTokenizer& tgt_tok,
                            const std::vector<Provenance>& provenance) {
    if (provenance.size() != tgt_tok.vocab_size()) {
        throw std::runtime_error("manifest: provenance size does not match vocab size");
    }
    std::ostringstream out;
    const auto& vocab = tgt_tok.vocab();
    for (size_t id = 0; id < vocab.size(); ++id) {
        out << id << '\t' << hex_encode(vocab[id]) << '\t' << provenance_name(provenance[id])
            << '\n';
    }
    return out.str();
}

}  // namespace dicttrans
