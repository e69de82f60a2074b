#include <doctest.h>

#include <stdexcept>

#include <set>

#include "dicttrans/mapping.hpp"

using namespace dicttrans;

namespace {

// Target tokenizer with the single merge (a,b) -> "ab".
BpeTokenizer ab_tokenizer() {
    return BpeTokenizer::train({"ab", "ab"}, {.vocab_budget = 257});
}

DictionaryCorpus ab_dictionary() {
    return parse_dictionary_text("ab\tx\n", DictionaryFormat::kTab);
}

}  // namespace

TEST_CASE("nested dictionary maps, removes, and reaches the fixpoint") {
    MappingConfig cfg;
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), cfg);

    CHECK(res.report.per_iteration == std::vector<uint64_t>{1, 2, 0});
    CHECK(res.report.vocab_size == 257);
    CHECK(res.report.mapped_total == 3);
    CHECK_FALSE(res.report.truncated);

    CHECK(res.map.entries.at("ab").at("x") == 1);
    CHECK(res.map.entries.at("a").at("x") == 1);
    CHECK(res.map.entries.at("b").at("x") == 1);
    CHECK(res.map.mapped_at.at("ab") == 1);
    CHECK(res.map.mapped_at.at("a") == 2);
    CHECK(res.map.mapped_at.at("b") == 2);

    REQUIRE(res.deltas.size() == 2);
    CHECK(res.deltas[0].removed == std::set<TokenBytes>{"ab"});
    CHECK(res.deltas[1].removed.empty());  // byte tokens are never removed
    CHECK_FALSE(res.final_tgt_tokenizer.contains("ab"));
}

TEST_CASE("removed types never reappear in later tokenizations") {
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), {});
    BpeTokenizer tok = ab_tokenizer();
    std::set<TokenBytes> removed_so_far;
    for (const IterationDelta& delta : res.deltas) {
        for (const EntryPair& p : ab_dictionary().pairs) {
            for (const TokenBytes& t : tok.tokenize(p.entry)) {
                CHECK(removed_so_far.find(t) == removed_so_far.end());
            }
        }
        if (!delta.removed.empty()) tok = tok.remove_tokens(delta.removed);
        removed_so_far.insert(delta.removed.begin(), delta.removed.end());
    }
}

TEST_CASE("base-only target vocabulary converges in one productive iteration") {
    DictionaryCorpus dict = parse_dictionary_text("qq\tz\n", DictionaryFormat::kTab);
    MappingResult res = run_mapping(BpeTokenizer(), BpeTokenizer(), dict, {});
    REQUIRE(res.report.per_iteration.size() == 2);
    CHECK(res.report.per_iteration[0] > 0);
    CHECK(res.report.per_iteration[1] == 0);
}

TEST_CASE("map growth is monotone and iteration deltas are disjoint") {
    auto dict = parse_dictionary_text("ab\tx\nabab\txy\nb\ty\n", DictionaryFormat::kTab);
    BpeTokenizer tgt = BpeTokenizer::train({"abab", "abab", "ab", "ab"}, {.vocab_budget = 260});
    MappingResult res = run_mapping(BpeTokenizer(), tgt, dict, {});

    std::set<TokenBytes> seen;
    for (const IterationDelta& delta : res.deltas) {
        for (const auto& [t, srcs] : delta.new_mappings) {
            CHECK(seen.insert(t).second);  // never mapped before
            for (const auto& [s, c] : srcs) CHECK(c >= 1);
        }
    }
    CHECK(seen.size() == res.map.entries.size());
    // Termination bound: loop count <= non-byte vocab + 1.
    size_t non_byte = 0;
    for (const auto& t : tgt.vocab()) {
        if (t.size() > 1) ++non_byte;
    }
    CHECK(res.report.per_iteration.size() <= non_byte + 2);
}

TEST_CASE("removal disabled runs exactly one productive iteration") {
    MappingConfig cfg;
    cfg.removal = false;
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), cfg);
    REQUIRE(res.report.per_iteration.size() == 1);
    CHECK(res.report.per_iteration[0] == 1);
    CHECK(res.final_tgt_tokenizer.contains("ab"));

    // Its mapping equals iteration 1 of the removal-enabled run.
    MappingResult full = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), {});
    REQUIRE(!full.deltas.empty());
    CHECK(res.map.entries == full.deltas[0].new_mappings);
}

TEST_CASE("max_loops exhaustion flags the report as truncated") {
    MappingConfig cfg;
    cfg.max_loops = 1;
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), cfg);
    CHECK(res.report.truncated);
    CHECK(res.report.per_iteration == std::vector<uint64_t>{1});
}

TEST_CASE("unmapped_tokens works on the original vocabulary snapshot") {
    BpeTokenizer tgt = ab_tokenizer();
    MappingResult res = run_mapping(BpeTokenizer(), tgt, ab_dictionary(), {});
    auto unmapped = unmapped_tokens(res.map, tgt);
    // 257 original tokens, 3 mapped.
    CHECK(unmapped.size() == 254);
    CHECK(unmapped.count("ab") == 0);
    CHECK(unmapped.count("a") == 0);

    SubwordMap empty;
    CHECK(unmapped_tokens(empty, tgt).size() == 257);
}

TEST_CASE("unreachable tokens stay unmapped") {
    // "low" exists but its producing merge needs "lo"; removing "lo"
    // makes "low" unreachable, so the mapping loop can never map it.
    BpeTokenizer tok = BpeTokenizer::train({"low", "low", "lower"}, {.vocab_budget = 259});
    BpeTokenizer cut = tok.remove_tokens({"lo"});
    DictionaryCorpus dict = parse_dictionary_text("low\tshallow\n", DictionaryFormat::kTab);
    MappingResult res = run_mapping(BpeTokenizer(), cut, dict, {});
    auto unmapped = unmapped_tokens(res.map, cut);
    CHECK(unmapped.count("low") == 1);
}

TEST_CASE("empty dictionary is rejected") {
    DictionaryCorpus dict;
    CHECK_THROWS_AS(run_mapping(BpeTokenizer(), BpeTokenizer(), dict, {}), std::runtime_error);
}

TEST_CASE("make_report computes coverage") {
    SubwordMap map;
    BpeTokenizer tok = ab_tokenizer();
    TransferReport empty = make_report(map, tok);
    CHECK(empty.mapped_total == 0);
    CHECK(empty.coverage == 0.0);

    map.entries["ab"]["x"] = 1;
    map.mapped_at["ab"] = 1;
    TransferReport r = make_report(map, tok, 2);
    CHECK(r.mapped_total == 1);
    CHECK(r.coverage == doctest::Approx(1.0 / 257));
    CHECK(r.per_iteration == std::vector<uint64_t>{1, 0});
}

TEST_CASE("mapping file round-trips") {
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), {});
    std::string text = serialize_mapping(res.map, res.report);
    auto [map, report] = parse_mapping(text);
    CHECK(map.entries == res.map.entries);
    CHECK(map.mapped_at == res.map.mapped_at);
    CHECK(report.per_iteration == res.report.per_iteration);
    CHECK(report.vocab_size == res.report.vocab_size);
    CHECK(report.coverage == doctest::Approx(res.report.coverage));
}

TEST_CASE("mapping parser rejects malformed input") {
    CHECK_THROWS_WITH_AS(parse_mapping("garbage"), doctest::Contains("magic"),
                         std::runtime_error);
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), {});
    std::string text = serialize_mapping(res.map, res.report);
    // Drop the last token row: the header then promises more rows than exist.
    std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    CHECK_THROWS_WITH_AS(parse_mapping(truncated), doctest::Contains("truncated at line"),
                         std::runtime_error);
}

TEST_CASE("report rendering shows coverage with two decimals") {
    MappingResult res = run_mapping(BpeTokenizer(), ab_tokenizer(), ab_dictionary(), {});
    std::string rendered = render_report(res.report);
    CHECK(rendered.find("1.17 %") != std::string::npos);  // 3/257
    CHECK(rendered.find("257") != std::string::npos);
}
