#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dicttrans/embedding.hpp"

using namespace dicttrans;

namespace {

EmbeddingMatrix make_matrix(size_t rows, uint32_t dim, uint32_t seed) {
    EmbeddingMatrix m;
    m.dim = dim;
    m.data.resize(rows * dim);
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (float& v : m.data) v = dist(rng);
    return m;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("relative_counts normalizes to one") {
    auto w = relative_counts({{"s1", 3}, {"s2", 1}});
    CHECK(w.at("s1") == doctest::Approx(0.75));
    CHECK(w.at("s2") == doctest::Approx(0.25));

    CHECK(relative_counts({{"s", 7}}).at("s") == doctest::Approx(1.0));

    auto w3 = relative_counts({{"s1", 1}, {"s2", 1}, {"s3", 2}});
    CHECK(w3.at("s1") == doctest::Approx(0.25));
    CHECK(w3.at("s3") == doctest::Approx(0.5));

    CHECK_THROWS_AS(relative_counts({}), std::runtime_error);
}

TEST_CASE("single-source mapping copies the row bitwise") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 8, 1);
    SubwordMap map;
    map.entries["q"]["s"] = 5;
    map.mapped_at["q"] = 1;
    InitPolicy policy;
    policy.unk_token = "u";
    InitResult res = init_target_matrix(src, src_tok, tgt_tok, map, policy);

    int qid = tgt_tok.token_id("q");
    int sid = src_tok.token_id("s");
    auto out = res.matrix.row(qid);
    auto in = src.row(sid);
    for (size_t d = 0; d < 8; ++d) CHECK(out[d] == in[d]);
    CHECK(res.provenance[qid] == Provenance::kAveraged);
}

TEST_CASE("weighted average follows relative counts") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src;
    src.dim = 2;
    src.data.assign(src_tok.vocab_size() * 2, 0.0f);
    int s1 = src_tok.token_id("m");
    int s2 = src_tok.token_id("n");
    src.row(s1)[0] = 1.0f;  // e_s1 = (1, 0)
    src.row(s2)[1] = 1.0f;  // e_s2 = (0, 1)

    SubwordMap map;
    map.entries["q"] = {{"m", 3}, {"n", 1}};
    map.mapped_at["q"] = 1;
    InitPolicy policy;
    policy.unk_token = "u";
    InitResult res = init_target_matrix(src, src_tok, tgt_tok, map, policy);
    auto row = res.matrix.row(tgt_tok.token_id("q"));
    CHECK(row[0] == doctest::Approx(0.75));
    CHECK(row[1] == doctest::Approx(0.25));
}

TEST_CASE("unmapped tokens get the UNK row when configured") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 4, 2);
    InitPolicy policy;
    policy.unk_token = "u";
    SubwordMap map;
    InitResult res = init_target_matrix(src, src_tok, tgt_tok, map, policy);

    auto unk = src.row(src_tok.token_id("u"));
    int qid = tgt_tok.token_id("q");
    for (size_t d = 0; d < 4; ++d) CHECK(res.matrix.row(qid)[d] == unk[d]);
    CHECK(res.provenance[qid] == Provenance::kUnk);
}

TEST_CASE("without UNK unmapped rows are seeded and deterministic") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 4, 3);
    InitPolicy policy;
    policy.rng_seed = 99;
    SubwordMap map;
    InitResult a = init_target_matrix(src, src_tok, tgt_tok, map, policy);
    InitResult b = init_target_matrix(src, src_tok, tgt_tok, map, policy);
    CHECK(a.matrix.data == b.matrix.data);
    int qid = tgt_tok.token_id("q");
    CHECK(a.provenance[qid] == Provenance::kRandom);

    policy.rng_seed = 100;
    InitResult c = init_target_matrix(src, src_tok, tgt_tok, map, policy);
    CHECK(a.matrix.data != c.matrix.data);
}

TEST_CASE("digit and punctuation tokens are copied from the source") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 4, 4);
    SubwordMap map;
    map.entries["7"]["x"] = 1;  // mapping would average, but the copy rule wins
    map.mapped_at["7"] = 1;
    InitPolicy policy;
    policy.unk_token = "u";
    InitResult res = init_target_matrix(src, src_tok, tgt_tok, map, policy);

    for (const char* t : {"7", ".", ",", "!"}) {
        int id = tgt_tok.token_id(t);
        auto out = res.matrix.row(id);
        auto in = src.row(src_tok.token_id(t));
        for (size_t d = 0; d < 4; ++d) CHECK(out[d] == in[d]);
        CHECK(res.provenance[id] == Provenance::kCopied);
    }
    // Letters are not copied.
    CHECK(res.provenance[tgt_tok.token_id("a")] != Provenance::kCopied);
}

TEST_CASE("special tokens must exist in the source vocab") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 4, 5);
    InitPolicy policy;
    policy.special_tokens = {"<s>"};
    SubwordMap map;
    CHECK_THROWS_WITH_AS(init_target_matrix(src, src_tok, tgt_tok, map, policy),
                         doctest::Contains("special token"), std::runtime_error);
}

TEST_CASE("dimension mismatch is an error") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(10, 4, 6);  // wrong row count
    SubwordMap map;
    CHECK_THROWS_AS(init_target_matrix(src, src_tok, tgt_tok, map, {}), std::runtime_error);
}

TEST_CASE("averaged rows are convex combinations") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 6, 7);
    SubwordMap map;
    map.entries["q"] = {{"a", 2}, {"b", 5}, {"c", 1}};
    map.mapped_at["q"] = 1;
    InitPolicy policy;
    policy.unk_token = "u";
    InitResult res = init_target_matrix(src, src_tok, tgt_tok, map, policy);

    auto row = res.matrix.row(tgt_tok.token_id("q"));
    for (size_t d = 0; d < 6; ++d) {
        float lo = std::min({src.row(src_tok.token_id("a"))[d],
                             src.row(src_tok.token_id("b"))[d],
                             src.row(src_tok.token_id("c"))[d]});
        float hi = std::max({src.row(src_tok.token_id("a"))[d],
                             src.row(src_tok.token_id("b"))[d],
                             src.row(src_tok.token_id("c"))[d]});
        CHECK(row[d] >= lo);
        CHECK(row[d] <= hi);
    }
}

TEST_CASE("scaling all source rows scales averaged rows") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 6, 8);
    EmbeddingMatrix scaled = src;
    for (float& v : scaled.data) v *= 2.5f;

    SubwordMap map;
    map.entries["q"] = {{"a", 2}, {"b", 3}};
    map.mapped_at["q"] = 1;
    InitPolicy policy;
    policy.unk_token = "u";
    auto r1 = init_target_matrix(src, src_tok, tgt_tok, map, policy);
    auto r2 = init_target_matrix(scaled, src_tok, tgt_tok, map, policy);
    auto a = r1.matrix.row(tgt_tok.token_id("q"));
    auto b = r2.matrix.row(tgt_tok.token_id("q"));
    for (size_t d = 0; d < 6; ++d) {
        CHECK(b[d] == doctest::Approx(2.5f * a[d]).epsilon(1e-6));
    }
}

TEST_CASE("binary save/load round-trips bitwise") {
    EmbeddingMatrix m = make_matrix(10, 4, 9);
    std::string path = temp_path("dicttrans_test_emb.dtem");
    save_embeddings(m, path);
    EmbeddingMatrix back = load_embeddings(path);
    CHECK(back.dim == m.dim);
    CHECK(back.data == m.data);
    std::remove(path.c_str());
}

TEST_CASE("text save/load round-trips") {
    EmbeddingMatrix m = make_matrix(5, 3, 10);
    std::string path = temp_path("dicttrans_test_emb.txt");
    save_embeddings(m, path, false);
    EmbeddingMatrix back = load_embeddings(path);
    REQUIRE(back.data.size() == m.data.size());
    for (size_t i = 0; i < m.data.size(); ++i) {
        CHECK(back.data[i] == doctest::Approx(m.data[i]).epsilon(1e-6));
    }
    std::remove(path.c_str());
}

TEST_CASE("binary loader rejects short files") {
    EmbeddingMatrix m = make_matrix(10, 4, 11);
    std::string path = temp_path("dicttrans_test_emb_short.dtem");
    save_embeddings(m, path);
    // Chop off the last row.
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4 * sizeof(float));
    CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("shorter"),
                         std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("text parser rejects wrong arity naming the line") {
    CHECK_THROWS_WITH_AS(parse_embeddings_text("2 3\n1 2 3\n4 5\n"),
                         doctest::Contains(":3:"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_embeddings_text("2 3\n1 2 3 9\n4 5 6\n"),
                         doctest::Contains("more than"), std::runtime_error);
    CHECK_THROWS_AS(parse_embeddings_text("2 3\n1 2 3\n"), std::runtime_error);
}

TEST_CASE("manifest lists every token with its provenance") {
    BpeTokenizer src_tok, tgt_tok;
    EmbeddingMatrix src = make_matrix(src_tok.vocab_size(), 4, 12);
    SubwordMap map;
    map.entries["q"]["s"] = 1;
    map.mapped_at["q"] = 1;
    InitPolicy policy;
    policy.unk_token = "u";
    InitResult res = init_target_matrix(src, src_tok, tgt_tok, map, policy);

    std::string manifest = format_manifest(tgt_tok, res.provenance);
    size_t rows = 0;
    std::istringstream in(manifest);
    std::string line;
    size_t by_provenance[4] = {0, 0, 0, 0};
    while (std::getline(in, line)) {
        ++rows;
        if (line.find("copied") != std::string::npos) ++by_provenance[0];
        if (line.find("averaged") != std::string::npos) ++by_provenance[1];
        if (line.find("\tunk") != std::string::npos) ++by_provenance[2];
        if (line.find("random") != std::string::npos) ++by_provenance[3];
    }
    CHECK(rows == tgt_tok.vocab_size());
    CHECK(by_provenance[0] + by_provenance[1] + by_provenance[2] + by_provenance[3] == rows);
    CHECK(by_provenance[1] == 1);
    CHECK(by_provenance[3] == 0);  // UNK configured, no random rows
}
