#include "dicttrans/dictionary.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dicttrans/unicode.hpp"

namespace dicttrans {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void line_error(const std::string& origin, size_t lineno, const std::string& what) {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace

DictionaryFormat parse_format_name(const std::string& name) {
    if (name == "tab") return DictionaryFormat::kTab;
    if (name == "space-pair") return DictionaryFormat::kSpacePair;
    throw std::runtime_error("unknown dictionary format '" + name + "' (expected tab or space-pair)");
}

DictionaryCorpus parse_dictionary_text(const std::string& text, DictionaryFormat format,
                                       const std::string& origin) {
    DictionaryCorpus corpus;
    corpus.format = format;
    corpus.origin_path = origin;

    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (!unicode::is_valid_utf8(line)) line_error(origin, lineno, "invalid UTF-8");

        std::string entry, definition;
        if (format == DictionaryFormat::kTab) {
            size_t tab = line.find('\t');
            if (tab == std::string::npos) line_error(origin, lineno, "no TAB separator");
            entry = line.substr(0, tab);
            definition = line.substr(tab + 1);
        } else {
            size_t sp = line.find(' ');
            if (sp == std::string::npos) line_error(origin, lineno, "no space separator");
            entry = line.substr(0, sp);
            size_t rest = line.find_first_not_of(' ', sp);
            definition = rest == std::string::npos ? "" : line.substr(rest);
        }
        entry = trim(entry);
        definition = trim(definition);
        if (entry.empty()) line_error(origin, lineno, "empty entry field");
        if (definition.empty()) line_error(origin, lineno, "empty definition field");
        corpus.pairs.push_back({std::move(entry), std::move(definition)});
    }
    return corpus;
}

DictionaryCorpus parse_dictionary(const std::string& path, DictionaryFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dictionary file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dictionary_text(buf.str(), format, path);
}

DictionaryCorpus normalize(const DictionaryCorpus& corpus, bool lowercase) {
    DictionaryCorpus out;
    out.format = corpus.format;
    out.origin_path = corpus.origin_path;
    out.pairs.reserve(corpus.pairs.size());
    for (const EntryPair& p : corpus.pairs) {
        std::string e = unicode::nfc(p.entry);
        std::string d = unicode::nfc(p.definition);
        if (lowercase) {
            e = unicode::to_lower(e);
            d = unicode::to_lower(d);
        }
        out.pairs.push_back({std::move(e), std::move(d)});
    }
    return out;
}

CorpusStats corpus_stats(const DictionaryCorpus& corpus) {
    CorpusStats stats;
    stats.entry_count = corpus.pairs.size();
    for (const EntryPair& p : corpus.pairs) {
        bool in_word = false;
        size_t pos = 0;
        while (pos < p.entry.size()) {
            uint32_t cp = unicode::decode_utf8(p.entry, pos);
            if (unicode::is_whitespace(cp)) {
                in_word = false;
            } else if (!in_word) {
                in_word = true;
                ++stats.word_count;
            }
        }
    }
    return stats;
}

std::string serialize_tab(const DictionaryCorpus& corpus) {
    std::string out;
    for (const EntryPair& p : corpus.pairs) {
        out += p.entry;
        out += '\t';
        out += p.definition;
        out += '\n';
    }
    return out;
}

}  // namespace dicttrans
