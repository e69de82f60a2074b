#pragma once

#include <string>

#include "dicttrans/dictionary.hpp"
#include "dicttrans/embedding.hpp"
#include "dicttrans/mapping.hpp"

namespace dicttrans {

struct PipelineConfig {
    std::string dictionary_path;
    DictionaryFormat dictionary_format = DictionaryFormat::kTab;
    bool lowercase = false;

    std::string source_tokenizer_path;
    std::string source_embeddings_path;

    size_t vocab_budget = 0;  // 0 = use the source tokenizer's vocab size
    size_t min_frequency = 2;

    MappingConfig mapping;
    InitPolicy policy;

    std::string out_dir = ".";
};

struct TransferArtifacts {
    std::string tokenizer_path;
    std::string mapping_path;
    std::string report_path;
    std::string embeddings_path;
    std::string manifest_path;
    TransferReport report;
};

// Trains the target tokenizer on dictionary entries only.
BpeTokenizer train_target_tokenizer(const DictionaryCorpus& corpus, size_t vocab_budget,
                                    size_t min_frequency);

// Full pipeline: train tokenizer, run the mapping loop, initialize the target
// embedding matrix, write all artifacts into cfg.out_dir.
TransferArtifacts run_transfer(const PipelineConfig& cfg);

// Converts the common external vocab.json + merges.txt byte-level BPE
// serialization (printable byte-to-character remapping) into this project's
// tokenizer format.
BpeTokenizer convert_external_tokenizer(const std::string& vocab_json_path,
                                        const std::string& merges_txt_path);

}  // namespace dicttrans
