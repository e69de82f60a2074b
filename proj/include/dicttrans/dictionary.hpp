#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dicttrans {

// One dictionary line: target-language headword plus its source-language
// gloss. Both sides may contain spaces.
struct EntryPair {
    std::string entry;
    std::string definition;
};

enum class DictionaryFormat {
    kTab,        // entry<TAB>definition
    kSpacePair,  // entry definition..., first space run separates
};

struct DictionaryCorpus {
    std::vector<EntryPair> pairs;
    DictionaryFormat format = DictionaryFormat::kTab;
    std::string origin_path;
};

struct CorpusStats {
    size_t entry_count = 0;
    size_t word_count = 0;  // whitespace-separated tokens across entries
};

DictionaryFormat parse_format_name(const std::string& name);

// Reads a dictionary file. One pair per non-blank line; lines without a
// separator or with an empty field are errors naming the line number, as is
// invalid UTF-8.
DictionaryCorpus parse_dictionary(const std::string& path, DictionaryFormat format);

// Parses from an in-memory buffer (used by the file loader and by tests).
DictionaryCorpus parse_dictionary_text(const std::string& text, DictionaryFormat format,
                                       const std::string& origin = "<memory>");

// NFC-normalizes both fields; optionally lowercases. Duplicates are kept,
// alignment counts are token-level.
DictionaryCorpus normalize(const DictionaryCorpus& corpus, bool lowercase = false);

CorpusStats corpus_stats(const DictionaryCorpus& corpus);

// Writes the corpus back out in tab format.
std::string serialize_tab(const DictionaryCorpus& corpus);

}  // namespace dicttrans
