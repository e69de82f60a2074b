#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dicttrans/pipeline.hpp"
#include "dicttrans/unicode.hpp"

namespace {

using namespace dicttrans;

int env_threads(int fallback) {
    const char* env = std::getenv("DICT_TRANSFER_THREADS");
    if (!env || !*env) return fallback;
    try {
        int n = std::stoi(env);
        if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid DICT_TRANSFER_THREADS='" << env << "'\n";
    return fallback;
}

struct CommonDictOpts {
    std::string dictionary;
    std::string format = "tab";
    bool lowercase = false;
};

void add_dict_options(CLI::App* cmd, CommonDictOpts& opts) {
    cmd->add_option("--dictionary", opts.dictionary, "Dictionary file (entry/definition pairs)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--format", opts.format, "Dictionary format")
        ->check(CLI::IsMember({"tab", "space-pair"}))
        ->capture_default_str();
    cmd->add_flag("--lowercase", opts.lowercase, "Lowercase entries and definitions");
}

DictionaryCorpus load_dict(const CommonDictOpts& opts) {
    return normalize(parse_dictionary(opts.dictionary, parse_format_name(opts.format)),
                     opts.lowercase);
}

size_t whitespace_word_count(const std::string& text) {
    size_t words = 0;
    bool in_word = false;
    size_t pos = 0;
    while (pos < text.size()) {
        uint32_t cp = unicode::decode_utf8(text, pos);
        if (unicode::is_whitespace(cp)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dictionary-based cross-lingual vocabulary transfer"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file; command-line flags win");
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);

    // train-tokenizer
    CommonDictOpts tt_dict;
    size_t tt_budget = 0;
    size_t tt_min_freq = 2;
    std::string tt_src_tok;
    std::string tt_output = "target_tokenizer.json";
    auto* tt = app.add_subcommand("train-tokenizer",
                                  "Train a byte-level BPE tokenizer on dictionary entries");
    add_dict_options(tt, tt_dict);
    tt->add_option("--vocab-budget", tt_budget,
                   "Vocabulary budget (>= 256; default: source tokenizer's vocab size)")
        ->check(CLI::Range(static_cast<size_t>(256), std::numeric_limits<size_t>::max()));
    tt->add_option("--min-frequency", tt_min_freq, "Minimum pair frequency for a merge")
        ->capture_default_str();
    tt->add_option("--source-tokenizer", tt_src_tok, "Source tokenizer (sets the default budget)")
        ->check(CLI::ExistingFile);
    tt->add_option("--output", tt_output, "Output tokenizer file")->capture_default_str();

    // transfer
    CommonDictOpts tr_dict;
    PipelineConfig cfg;
    bool no_removal = false;
    std::string unk_token;
    std::vector<std::string> specials;
    auto* tr = app.add_subcommand("transfer", "Run the full vocabulary-transfer pipeline");
    add_dict_options(tr, tr_dict);
    tr->add_option("--source-tokenizer", cfg.source_tokenizer_path, "Source tokenizer file")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--source-embeddings", cfg.source_embeddings_path, "Source embedding matrix")
        ->required()
        ->check(CLI::ExistingFile);
    tr->add_option("--vocab-budget", cfg.vocab_budget,
                   "Target vocab budget (0 = source vocab size)")
        ->check(CLI::Range(static_cast<size_t>(0), std::numeric_limits<size_t>::max()));
    tr->add_option("--min-frequency", cfg.min_frequency, "Minimum pair frequency for a merge")
        ->capture_default_str();
    tr->add_option("--model1-iterations", cfg.mapping.aligner.model1_iterations,
                   "Model 1 warm-start EM iterations")
        ->capture_default_str();
    tr->add_option("--diag-iterations", cfg.mapping.aligner.diag_iterations,
                   "Diagonal-prior EM iterations")
        ->capture_default_str();
    tr->add_option("--lambda", cfg.mapping.aligner.lambda, "Diagonal tension")
        ->capture_default_str();
    tr->add_option("--p0", cfg.mapping.aligner.p0, "Null-alignment probability")
        ->check(CLI::Range(0.0, 0.999999))
        ->capture_default_str();
    tr->add_flag("--no-removal", no_removal, "Skip the removal step (single mapping iteration)");
    tr->add_option("--max-loops", cfg.mapping.max_loops, "Mapping loop guard")
        ->capture_default_str();
    tr->add_option("--unk-token", unk_token,
                   "Source UNK token for unmapped subwords (unset: seeded random rows)");
    tr->add_option("--special-token", specials, "Special tokens to copy verbatim (repeatable)");
    tr->add_option("--seed", cfg.policy.rng_seed, "RNG seed for random fallback rows")
        ->capture_default_str();
    tr->add_option("--threads", cfg.mapping.aligner.threads, "Worker threads for the E-step")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    tr->add_option("--out-dir", cfg.out_dir, "Artifact output directory")->capture_default_str();

    // count
    std::string count_corpus, count_tokenizer;
    auto* ct = app.add_subcommand("count", "Count subwords over a corpus (one document per line)");
    ct->add_option("--corpus", count_corpus, "UTF-8 text corpus")
        ->required()
        ->check(CLI::ExistingFile);
    ct->add_option("--tokenizer", count_tokenizer, "Tokenizer file")
        ->required()
        ->check(CLI::ExistingFile);

    // report
    std::string report_mapping;
    auto* rp = app.add_subcommand("report", "Re-render coverage tables from a mapping file");
    rp->add_option("--mapping", report_mapping, "Mapping file")
        ->required()
        ->check(CLI::ExistingFile);

    // convert-tokenizer
    std::string conv_vocab, conv_merges, conv_output = "converted_tokenizer.json";
    auto* cv = app.add_subcommand("convert-tokenizer",
                                  "Convert an external vocab.json + merges.txt tokenizer");
    cv->add_option("--vocab", conv_vocab, "vocab.json (token -> id)")
        ->required()
        ->check(CLI::ExistingFile);
    cv->add_option("--merges", conv_merges, "merges.txt (one 'left right' per line)")
        ->required()
        ->check(CLI::ExistingFile);
    cv->add_option("--output", conv_output, "Output tokenizer file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (tt->parsed()) {
            size_t budget = tt_budget;
            if (budget == 0) {
                if (tt_src_tok.empty()) {
                    std::cerr << "error: provide --vocab-budget or --source-tokenizer\n";
                    return 2;
                }
                budget = BpeTokenizer::load(tt_src_tok).vocab_size();
            }
            DictionaryCorpus dict = load_dict(tt_dict);
            BpeTokenizer tok = train_target_tokenizer(dict, budget, tt_min_freq);
            tok.save(tt_output);
            std::cout << "wrote " << tt_output << " (vocab " << tok.vocab_size() << ", "
                      << tok.merges().size() << " merges)\n";
        } else if (tr->parsed()) {
            cfg.dictionary_path = tr_dict.dictionary;
            cfg.dictionary_format = parse_format_name(tr_dict.format);
            cfg.lowercase = tr_dict.lowercase;
            cfg.mapping.removal = !no_removal;
            cfg.mapping.aligner.threads = env_threads(cfg.mapping.aligner.threads);
            if (!unk_token.empty()) cfg.policy.unk_token = unk_token;
            for (const std::string& s : specials) cfg.policy.special_tokens.push_back(s);
            TransferArtifacts artifacts = run_transfer(cfg);
            std::cout << render_report(artifacts.report);
            std::cout << "\nartifacts:\n"
                      << "  " << artifacts.tokenizer_path << "\n"
                      << "  " << artifacts.mapping_path << "\n"
                      << "  " << artifacts.report_path << "\n"
                      << "  " << artifacts.embeddings_path << "\n"
                      << "  " << artifacts.manifest_path << "\n";
        } else if (ct->parsed()) {
            BpeTokenizer tok = BpeTokenizer::load(count_tokenizer);
            std::vector<std::string> lines = read_lines(count_corpus);
            size_t subwords = tok.count_subwords(lines);
            size_t words = 0;
            for (const std::string& line : lines) words += whitespace_word_count(line);
            std::cout << "subwords " << subwords << "\n";
            std::cout << "words " << words << "\n";
            if (words == 0) {
                std::cout << "subwords_per_word n/a\n";
            } else {
                std::cout << "subwords_per_word "
                          << static_cast<double>(subwords) / static_cast<double>(words) << "\n";
            }
        } else if (rp->parsed()) {
            auto [map, report] = load_mapping(report_mapping);
            std::cout << render_report(report);
        } else if (cv->parsed()) {
            BpeTokenizer tok = convert_external_tokenizer(conv_vocab, conv_merges);
            tok.save(conv_output);
            std::cout << "wrote " << conv_output << " (vocab " << tok.vocab_size() << ", "
                      << tok.merges().size() << " merges)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
