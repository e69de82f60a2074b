#include "dicttrans/mapping.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "dicttrans/hex.hpp"
#include "dicttrans/unicode.hpp"

namespace dicttrans {

namespace {

bool is_pure_whitespace(const TokenBytes& tok) {
    size_t pos = 0;
    while (pos < tok.size()) {
        if (!unicode::is_whitespace(unicode::decode_utf8(tok, pos))) return false;
    }
    return !tok.empty();
}

// Tokenizes the dictionary into alignment pairs, dropping whitespace tokens
// (they carry no lexical content) and pairs left empty on either side.
std::vector<SentencePair> build_corpus(const BpeTokenizer& src_tok, const BpeTokenizer& tgt_tok,
                                       const DictionaryCorpus& dict, uint64_t& skipped) {
    std::vector<SentencePair> corpus;
    corpus.reserve(dict.pairs.size());
    skipped = 0;
    for (const EntryPair& p : dict.pairs) {
        SentencePair sp;
        for (TokenBytes& t : src_tok.tokenize(p.definition)) {
            if (!is_pure_whitespace(t)) sp.src.push_back(std::move(t));
        }
        for (TokenBytes& t : tgt_tok.tokenize(p.entry)) {
            if (!is_pure_whitespace(t)) sp.tgt.push_back(std::move(t));
        }
        if (sp.src.empty() || sp.tgt.empty()) {
            ++skipped;
            continue;
        }
        corpus.push_back(std::move(sp));
    }
    return corpus;
}

}  // namespace

MappingResult run_mapping(const BpeTokenizer& src_tok, const BpeTokenizer& tgt_tok,
                          const DictionaryCorpus& dict, const MappingConfig& cfg) {
    if (dict.pairs.empty()) throw std::runtime_error("dictionary is empty");
    if (cfg.max_loops < 1) throw std::runtime_error("max_loops must be >= 1");

    MappingResult result;
    BpeTokenizer current = tgt_tok;
    bool truncated = false;
    for (int loop = 1; loop <= cfg.max_loops; ++loop) {
        uint64_t skipped = 0;
        std::vector<SentencePair> corpus = build_corpus(src_tok, current, dict, skipped);
        result.report.skipped_pairs = skipped;
        if (corpus.empty()) {
            result.report.per_iteration.push_back(0);
            break;
        }

        AlignmentModel model = train_aligner(corpus, cfg.aligner);
        auto counts = link_counts(model, corpus);

        IterationDelta delta;
        delta.iteration = loop;
        for (const auto& [key, count] : counts) {
            const auto& [tgt_type, src_type] = key;
            if (result.map.entries.find(tgt_type) != result.map.entries.end()) continue;
            delta.new_mappings[tgt_type][src_type] += count;
        }

        result.report.per_iteration.push_back(delta.new_mappings.size());
        if (delta.new_mappings.empty()) break;

        for (const auto& [tgt_type, srcs] : delta.new_mappings) {
            auto& entry = result.map.entries[tgt_type];
            for (const auto& [src_type, count] : srcs) entry[src_type] += count;
            result.map.mapped_at[tgt_type] = loop;
        }

        if (cfg.removal) {
            std::set<TokenBytes> doomed;
            for (const auto& [tgt_type, srcs] : delta.new_mappings) {
                if (tgt_type.size() > 1 && current.contains(tgt_type)) doomed.insert(tgt_type);
            }
            delta.removed = doomed;
            if (!doomed.empty()) current = current.remove_tokens(doomed);
        }
        result.deltas.push_back(std::move(delta));

        if (!cfg.removal) break;  // ablation: single productive loop
        if (loop == cfg.max_loops) truncated = true;
    }

    result.final_tgt_tokenizer = current;
    TransferReport base = make_report(result.map, tgt_tok, result.report.per_iteration.size(),
                                      truncated);
    base.skipped_pairs = result.report.skipped_pairs;
    result.report = std::move(base);
    return result;
}

std::set<TokenBytes> unmapped_tokens(const SubwordMap& map, const BpeTokenizer& original_tgt_tok) {
    std::set<TokenBytes> out;
    for (const TokenBytes& t : original_tgt_tok.vocab()) {
        if (map.entries.find(t) == map.entries.end()) out.insert(t);
    }
    return out;
}

TransferReport make_report(const SubwordMap& map, const BpeTokenizer& original_tgt_tok,
                           size_t loops_run, bool truncated) {
    TransferReport report;
    report.vocab_size = original_tgt_tok.vocab_size();
    report.mapped_total = map.entries.size();
    report.coverage =
        report.vocab_size == 0 ? 0.0
                               : static_cast<double>(report.mapped_total) / report.vocab_size;
    report.truncated = truncated;

    int max_iter = 0;
    for (const auto& [t, iter] : map.mapped_at) max_iter = std::max(max_iter, iter);
    size_t loops = std::max<size_t>(loops_run, static_cast<size_t>(max_iter));
    report.per_iteration.assign(loops, 0);
    for (const auto& [t, iter] : map.mapped_at) report.per_iteration[iter - 1] += 1;
    return report;
}

std::string render_report(const TransferReport& report) {
    std::ostringstream out;
    out << "Vocabulary        Mapped            Coverage\n";
    out << std::left << std::setw(18) << report.vocab_size << std::setw(18)
        << report.mapped_total << std::fixed << std::setprecision(2) << report.coverage * 100.0
        << " %\n\n";
    out << "Iteration         New mapped\n";
    for (size_t i = 0; i < report.per_iteration.size(); ++i) {
        out << std::left << std::setw(18) << (i + 1) << report.per_iteration[i] << "\n";
    }
    if (report.truncated) out << "(truncated: max_loops reached before fixpoint)\n";
    if (report.skipped_pairs > 0) {
        out << "(skipped " << report.skipped_pairs << " pairs with an empty tokenized side)\n";
    }
    return out.str();
}

std::string serialize_mapping(const SubwordMap& map, const TransferReport& report) {
    std::ostringstream out;
    out << "dicttrans-mapping v1\n";
    out << "vocab_size " << report.vocab_size << "\n";
    out << "truncated " << (report.truncated ? 1 : 0) << "\n";
    out << "per_iteration";
    for (uint64_t c : report.per_iteration) out << ' ' << c;
    out << "\n";
    out << "tokens " << map.entries.size() << "\n";
    for (const auto& [tgt, srcs] : map.entries) {
        out << hex_encode(tgt) << '\t' << printable_bytes(tgt) << '\t'
            << map.mapped_at.at(tgt) << '\t';
        bool first = true;
        for (const auto& [src, count] : srcs) {
            if (!first) out << ',';
            out << hex_encode(src) << ':' << count;
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

void save_mapping(const SubwordMap& map, const TransferReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write mapping file: " + path);
    out << serialize_mapping(map, report);
}

std::pair<SubwordMap, TransferReport> parse_mapping(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) {
            throw std::runtime_error("mapping file: truncated at line " + std::to_string(lineno + 1));
        }
        ++lineno;
    };

    next_line();
    if (line != "dicttrans-mapping v1") {
        throw std::runtime_error("mapping file: bad magic line");
    }

    SubwordMap map;
    TransferReport report;
    next_line();
    {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key >> report.vocab_size) || key != "vocab_size") {
            throw std::runtime_error("mapping file: expected vocab_size at line " +
                                     std::to_string(lineno));
        }
    }
    next_line();
    {
        std::istringstream ls(line);
        std::string key;
        int flag;
        if (!(ls >> key >> flag) || key != "truncated") {
            throw std::runtime_error("mapping file: expected truncated at line " +
                                     std::to_string(lineno));
        }
        report.truncated = flag != 0;
    }
    next_line();
    {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key != "per_iteration") {
            throw std::runtime_error("mapping file: expected per_iteration at line " +
                                     std::to_string(lineno));
        }
        uint64_t c;
        while (ls >> c) report.per_iteration.push_back(c);
    }
    uint64_t token_rows = 0;
    next_line();
    {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key >> token_rows) || key != "tokens") {
            throw std::runtime_error("mapping file: expected tokens at line " +
                                     std::to_string(lineno));
        }
    }

    for (uint64_t row = 0; row < token_rows; ++row) {
        next_line();
        std::istringstream ls(line);
        std::string tgt_hex, printable, srcs_field;
        int iter;
        if (!std::getline(ls, tgt_hex, '\t') || !std::getline(ls, printable, '\t')) {
            throw std::runtime_error("mapping file: malformed token row at line " +
                                     std::to_string(lineno));
        }
        std::string iter_field;
        if (!std::getline(ls, iter_field, '\t') || !std::getline(ls, srcs_field)) {
            throw std::runtime_error("mapping file: malformed token row at line " +
                                     std::to_string(lineno));
        }
        try {
            iter = std::stoi(iter_field);
        } catch (const std::exception&) {
            throw std::runtime_error("mapping file: bad iteration index at line " +
                                     std::to_string(lineno));
        }
        TokenBytes tgt = hex_decode(tgt_hex);
        auto& entry = map.entries[tgt];
        std::istringstream ss(srcs_field);
        std::string item;
        while (std::getline(ss, item, ',')) {
            size_t colon = item.rfind(':');
            if (colon == std::string::npos) {
                throw std::runtime_error("mapping file: malformed source count at line " +
                                         std::to_string(lineno));
            }
            uint64_t count = std::stoull(item.substr(colon + 1));
            if (count == 0) {
                throw std::runtime_error("mapping file: zero count at line " +
                                         std::to_string(lineno));
            }
            entry[hex_decode(item.substr(0, colon))] += count;
        }
        if (entry.empty()) {
            throw std::runtime_error("mapping file: token row without sources at line " +
                                     std::to_string(lineno));
        }
        map.mapped_at[tgt] = iter;
    }

    report.mapped_total = map.entries.size();
    report.coverage = report.vocab_size == 0
                          ? 0.0
                          : static_cast<double>(report.mapped_total) / report.vocab_size;
    return {std::move(map), std::move(report)};
}

std::pair<SubwordMap, TransferReport> load_mapping(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open mapping file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mapping(buf.str());
}

}  // namespace dicttrans
