// Generation-relevance statistics: the bag-of-embeddings semantic
// similarity (S.S.) and the sensitive-token mention fraction (S.S.^c).

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "fairgen/encoder.hpp"
#include "fairgen/mat.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/vocab.hpp"

using namespace fairgen;

namespace {

// Vocab {<unk>, <bos>, <eos>, a, b, c, d} with hand-set embedding rows, so
// every cosine below has a closed form.
struct EncoderFixture {
  Vocab vocab = Vocab::from_tokens({"<unk>", "<bos>", "<eos>", "a", "b", "c", "d"});
  Mat emb = Mat::zeros(7, 3);
  SentenceEncoder enc{&emb, &vocab};

  EncoderFixture() {
    emb(3, 0) = 1.0;              // a -> e_x
    emb(4, 1) = 1.0;              // b -> e_y
    emb(5, 0) = 1.0;              // c -> e_x (same direction as a)
    emb(6, 0) = 1.0;              // d -> diagonal in the xy plane
    emb(6, 1) = 1.0;
  }
};

}  // namespace

TEST_CASE("sentence encoding is the normalized bag of embeddings", "[relevance]") {
  EncoderFixture fx;
  const std::vector<double> e = fx.enc.encode({"a", "b"});
  const double inv = 1.0 / std::sqrt(2.0);
  CHECK(e[0] == Catch::Approx(inv).margin(1e-12));
  CHECK(e[1] == Catch::Approx(inv).margin(1e-12));
  CHECK(e[2] == Catch::Approx(0.0).margin(1e-15));

  // Unknown or reserved tokens contribute nothing.
  const std::vector<double> skip = fx.enc.encode({"zzz", "<bos>", "a"});
  CHECK(skip[0] == Catch::Approx(1.0).margin(1e-12));

  // All-unknown text encodes to the zero vector.
  const std::vector<double> zero = fx.enc.encode({"zzz", "qqq"});
  CHECK(l2_norm(zero.data(), 3) == 0.0);
}

TEST_CASE("identical continuations are all similar, orthogonal ones are not", "[relevance]") {
  EncoderFixture fx;
  // cos(a, a) = 1 > 0.4; cos(a, b) = 0 < 0.4.
  CHECK(semantic_similarity({"a"}, {{"a"}, {"a"}, {"a"}}, fx.enc) == 1.0);
  CHECK(semantic_similarity({"a"}, {{"b"}, {"b"}}, fx.enc) == 0.0);
  // Same direction through a different token still counts.
  CHECK(semantic_similarity({"a"}, {{"c"}}, fx.enc) == 1.0);
  // Mixed: cos(a, d) = 1/sqrt(2) > 0.4, so 2 of 3 clear the threshold.
  CHECK(semantic_similarity({"a"}, {{"d"}, {"b"}, {"a"}}, fx.enc) ==
        Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("the similarity threshold comparison is strict", "[relevance]") {
  EncoderFixture fx;
  // Set the threshold to cos(a, d) = 1/sqrt(2), reproduced bit-for-bit with
  // the encoder's own arithmetic; at that exact threshold the pair must NOT
  // count, while any threshold below it must.
  const std::vector<double> p = fx.enc.encode({"a"});
  const std::vector<double> c = fx.enc.encode({"d"});
  const double cosine =
      dot(p.data(), c.data(), 3) / (l2_norm(p.data(), 3) * l2_norm(c.data(), 3));
  CHECK(cosine == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
  CHECK(semantic_similarity({"a"}, {{"d"}}, fx.enc, cosine) == 0.0);
  CHECK(semantic_similarity({"a"}, {{"d"}}, fx.enc, cosine - 1e-9) == 1.0);
}

TEST_CASE("semantic similarity is non-increasing in the threshold", "[relevance]") {
  EncoderFixture fx;
  const std::vector<TokenSeq> conts = {{"a"}, {"b"}, {"d"}, {"a", "b"}, {"c", "d"}};
  double prev = 1.0;
  for (double th = -1.0; th <= 1.0; th += 0.05) {
    const double ss = semantic_similarity({"a", "d"}, conts, fx.enc, th);
    CHECK(ss <= prev + 1e-15);
    prev = ss;
  }
}

TEST_CASE("cosines are invariant under an orthonormal rotation of embeddings", "[relevance]") {
  // Rotate every embedding row by the same orthonormal matrix; all pairwise
  // cosines, and therefore S.S., are unchanged.
  EncoderFixture fx;
  const std::vector<TokenSeq> conts = {{"a"}, {"b"}, {"d"}, {"c", "b"}};
  const double before = semantic_similarity({"a", "b"}, conts, fx.enc, 0.4);

  // Rotation: 30 degrees in the xy plane times a z flip.
  const double th = 0.5235987755982988;
  Mat rot = Mat::zeros(3, 3);
  rot(0, 0) = std::cos(th);
  rot(0, 1) = -std::sin(th);
  rot(1, 0) = std::sin(th);
  rot(1, 1) = std::cos(th);
  rot(2, 2) = -1.0;
  Mat rotated = Mat::zeros(7, 3);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) rotated(r, c) += fx.emb(r, k) * rot(k, c);
  const SentenceEncoder enc2(&rotated, &fx.vocab);
  const double after = semantic_similarity({"a", "b"}, conts, enc2, 0.4);
  CHECK(before == Catch::Approx(after).margin(1e-12));
}

TEST_CASE("zero-vector embeddings never count as similar", "[relevance]") {
  EncoderFixture fx;
  // Unknown-only prefix -> zero vector -> nothing is similar.
  CHECK(semantic_similarity({"zzz"}, {{"a"}, {"b"}}, fx.enc) == 0.0);
  // Unknown-only continuation -> that continuation is not similar.
  CHECK(semantic_similarity({"a"}, {{"zzz"}, {"a"}}, fx.enc) == 0.5);
}

TEST_CASE("semantic similarity rejects an empty continuation set", "[relevance]") {
  EncoderFixture fx;
  try {
    semantic_similarity({"a"}, {}, fx.enc);
    FAIL("expected empty_continuations");
  } catch (const error& e) {
    REQUIRE(e.code() == errc::empty_continuations);
  }
}

TEST_CASE("mention fraction counts whole, case-sensitive tokens", "[relevance]") {
  const std::vector<TokenSeq> conts = {{"alice", "is", "here"},
                                       {"bob", "left"},
                                       {"alice", "and", "alice"},  // counted once
                                       {"malice", "grew"}};        // substring: no match
  CHECK(mention_fraction("alice", conts) == Catch::Approx(0.5).margin(1e-15));
  CHECK(mention_fraction("Alice", conts) == 0.0);
  CHECK(mention_fraction("alice", {{"alice"}}) == 1.0);
  CHECK(mention_fraction("zoe", conts) == 0.0);
}

TEST_CASE("mention fraction is order invariant", "[relevance]") {
  std::vector<TokenSeq> conts = {{"a"}, {"b"}, {"a", "b"}, {"c"}};
  const double base = mention_fraction("a", conts);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(conts);
    CHECK(mention_fraction("a", conts) == base);
  }
}

TEST_CASE("mention fraction rejects an empty continuation set", "[relevance]") {
  try {
    mention_fraction("a", {});
    FAIL("expected empty_continuations");
  } catch (const error& e) {
    REQUIRE(e.code() == errc::empty_continuations);
  }
}
