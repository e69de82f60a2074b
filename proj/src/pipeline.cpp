#include "dicttrans/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dicttrans/hex.hpp"
#include "dicttrans/unicode.hpp"

namespace dicttrans {

BpeTokenizer train_target_tokenizer(const DictionaryCorpus& corpus, size_t vocab_budget,
                                    size_t min_frequency) {
    std::vector<std::string> entries;
    entries.reserve(corpus.pairs.size());
    for (const EntryPair& p : corpus.pairs) entries.push_back(p.entry);
    BpeTokenizer::TrainOptions opts;
    opts.vocab_budget = vocab_budget;
    opts.min_frequency = min_frequency;
    return BpeTokenizer::train(entries, opts);
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace

TransferArtifacts run_transfer(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    DictionaryCorpus dict;
    try {
        dict = normalize(parse_dictionary(cfg.dictionary_path, cfg.dictionary_format),
                         cfg.lowercase);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("dictionary stage: ") + e.what());
    }

    BpeTokenizer src_tok;
    EmbeddingMatrix src_emb;
    try {
        src_tok = BpeTokenizer::load(cfg.source_tokenizer_path);
        src_emb = load_embeddings(cfg.source_embeddings_path);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("source-model stage: ") + e.what());
    }

    TransferArtifacts artifacts;
    BpeTokenizer tgt_tok;
    try {
        size_t budget = cfg.vocab_budget == 0 ? src_tok.vocab_size() : cfg.vocab_budget;
        tgt_tok = train_target_tokenizer(dict, budget, cfg.min_frequency);
        artifacts.tokenizer_path = (fs::path(cfg.out_dir) / "target_tokenizer.json").string();
        tgt_tok.save(artifacts.tokenizer_path);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("tokenizer stage: ") + e.what());
    }

    MappingResult mapping;
    try {
        mapping = run_mapping(src_tok, tgt_tok, dict, cfg.mapping);
        artifacts.mapping_path = (fs::path(cfg.out_dir) / "mapping.txt").string();
        save_mapping(mapping.map, mapping.report, artifacts.mapping_path);
        artifacts.report_path = (fs::path(cfg.out_dir) / "report.txt").string();
        write_file(artifacts.report_path, render_report(mapping.report));
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("mapping stage: ") + e.what());
    }

    try {
        InitResult init = init_target_matrix(src_emb, src_tok, tgt_tok, mapping.map, cfg.policy);
        artifacts.embeddings_path = (fs::path(cfg.out_dir) / "target_embeddings.dtem").string();
        save_embeddings(init.matrix, artifacts.embeddings_path);
        artifacts.manifest_path = (fs::path(cfg.out_dir) / "manifest.tsv").string();
        write_file(artifacts.manifest_path, format_manifest(tgt_tok, init.provenance));
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("embedding stage: ") + e.what());
    }

    artifacts.report = mapping.report;
    return artifacts;
}

namespace {

// The conventional byte-level BPE serialization remaps bytes onto printable
// characters: printable latin-1 stays put, the rest shift to U+0100 and up.
std::map<uint32_t, unsigned char> unicode_to_byte_table() {
    std::map<uint32_t, unsigned char> table;
    std::vector<bool> direct(256, false);
    auto keep = [&](int lo, int hi) {
        for (int b = lo; b <= hi; ++b) direct[b] = true;
    };
    keep(0x21, 0x7E);
    keep(0xA1, 0xAC);
    keep(0xAE, 0xFF);
    uint32_t next = 256;
    for (int b = 0; b < 256; ++b) {
        if (direct[b]) {
            table[static_cast<uint32_t>(b)] = static_cast<unsigned char>(b);
        } else {
            table[next++] = static_cast<unsigned char>(b);
        }
    }
    return table;
}

std::string decode_remapped(const std::string& token, const std::map<uint32_t, unsigned char>& table) {
    std::string bytes;
    size_t pos = 0;
    while (pos < token.size()) {
        uint32_t cp = unicode::decode_utf8(token, pos);
        auto it = table.find(cp);
        if (it == table.end()) {
            throw std::runtime_error("token '" + token + "' contains a character outside the "
                                     "byte-remap alphabet");
        }
        bytes.push_back(static_cast<char>(it->second));
    }
    return bytes;
}

}  // namespace

BpeTokenizer convert_external_tokenizer(const std::string& vocab_json_path,
                                        const std::string& merges_txt_path) {
    std::ifstream vin(vocab_json_path, std::ios::binary);
    if (!vin) throw std::runtime_error("cannot open vocab file: " + vocab_json_path);
    nlohmann::json vocab_json;
    try {
        vin >> vocab_json;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(vocab_json_path + ": " + e.what());
    }
    if (!vocab_json.is_object()) {
        throw std::runtime_error(vocab_json_path + ": expected a token-to-id object");
    }

    auto table = unicode_to_byte_table();
    std::map<int, std::string> by_id;
    for (const auto& [token, id] : vocab_json.items()) {
        if (!id.is_number_integer()) {
            throw std::runtime_error(vocab_json_path + ": id for '" + token + "' is not an integer");
        }
        by_id[id.get<int>()] = decode_remapped(token, table);
    }

    nlohmann::json out;
    out["version"] = 1;
    nlohmann::json vocab = nlohmann::json::array();
    for (const auto& [id, bytes] : by_id) vocab.push_back(hex_encode(bytes));
    out["vocab"] = std::move(vocab);

    nlohmann::json merges = nlohmann::json::array();
    std::ifstream min(merges_txt_path, std::ios::binary);
    if (!min) throw std::runtime_error("cannot open merges file: " + merges_txt_path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(min, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;  // header / comments
        size_t sp = line.find(' ');
        if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos) {
            throw std::runtime_error(merges_txt_path + ":" + std::to_string(lineno) +
                                     ": expected 'left right'");
        }
        merges.push_back({hex_encode(decode_remapped(line.substr(0, sp), table)),
                          hex_encode(decode_remapped(line.substr(sp + 1), table))});
    }
    out["merges"] = std::move(merges);

    return BpeTokenizer::deserialize(out.dump());
}

}  // namespace dicttrans
