#include "doctest.h"

#include <algorithm>
#include <string>
#include <vector>

#include "rlab/rng.hpp"
#include "rlab/wer.hpp"

using namespace rlab;

namespace {

// Pure recursive edit distance, no memoization: an exhaustive-search oracle
// that shares no code with the DP implementation.
int64_t naive_distance(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       size_t i, size_t j) {
    if (i == a.size()) return static_cast<int64_t>(b.size() - j);
    if (j == b.size()) return static_cast<int64_t>(a.size() - i);
    const int64_t match = naive_distance(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    const int64_t del = naive_distance(a, b, i + 1, j) + 1;
    const int64_t ins = naive_distance(a, b, i, j + 1) + 1;
    return std::min({match, del, ins});
}

std::vector<std::string> random_words(Rng& rng, size_t max_len) {
    static const std::vector<std::string> pool = {"ja",   "nein", "haus", "baum", "tür",
                                                  "groß", "straße", "uhr",  "tag",  "rot"};
    std::vector<std::string> out(rng.next_below(max_len + 1));
    for (auto& w : out) w = pool[rng.next_below(pool.size())];
    return out;
}

std::string join(const std::vector<std::string>& words) {
    std::string s;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) s += ' ';
        s += words[i];
    }
    return s;
}

std::string random_text(Rng& rng) {
    static const std::vector<std::string> chars = {"a", "b", "Z", "ä", "Ö", "ß", " ", " ",
                                                   ",", ".", "!", "?", "-", "3", "\t", "x"};
    std::string s;
    const size_t len = rng.next_below(30);
    for (size_t i = 0; i < len; ++i) s += chars[rng.next_below(chars.size())];
    return s;
}

}  // namespace

TEST_SUITE("wer") {

TEST_CASE("normalization examples") {
    CHECK(normalize("Hallo, Welt!") == "hallo welt");
    CHECK(normalize("schon   da") == "schon da");
    CHECK(normalize("  Grüße aus Köln.  ") == "grüße aus köln");
    CHECK(normalize("ÄÖÜ bleiben") == "äöü bleiben");
    CHECK(normalize("Nr. 7 geht's los") == "nr 7 gehts los");
    NormalizerConfig ss;
    ss.sz_to_ss = true;
    CHECK(normalize("straße", ss) == "strasse");
    NormalizerConfig keep_case;
    keep_case.lowercase = false;
    CHECK(normalize("Hallo Welt", keep_case) == "Hallo Welt");
}

TEST_CASE("normalization is idempotent on 1000 random strings") {
    Rng rng = Rng::seeded(17);
    for (int i = 0; i < 1000; ++i) {
        const std::string text = random_text(rng);
        const std::string once = normalize(text);
        CHECK(normalize(once) == once);
    }
}

TEST_CASE("wer hand examples") {
    const WerBreakdown zero = wer("ein kleiner test", "ein kleiner test");
    CHECK(zero.wer == 0.0);
    CHECK(zero.hits == 3);

    const WerBreakdown sub = wer("a b c", "a x c");
    CHECK(sub.substitutions == 1);
    CHECK(sub.insertions == 0);
    CHECK(sub.deletions == 0);
    CHECK(sub.wer == doctest::Approx(1.0 / 3.0));

    // insertions can push WER above 1
    const WerBreakdown ins = wer("a", "a b c");
    CHECK(ins.wer == doctest::Approx(2.0));

    CHECK_THROWS_AS(wer("", "etwas"), UndefinedWerError);
    CHECK_THROWS_AS(wer("!!!", "etwas"), UndefinedWerError);
}

TEST_CASE("matches the exhaustive oracle on 500 random short pairs") {
    Rng rng = Rng::seeded(23);
    for (int k = 0; k < 500; ++k) {
        std::vector<std::string> ref = random_words(rng, 8);
        if (ref.empty()) ref.push_back("ja");
        const std::vector<std::string> hyp = random_words(rng, 8);
        const WerBreakdown b = wer_words(ref, hyp);
        const int64_t expected = naive_distance(ref, hyp, 0, 0);
        CHECK(b.edits() == expected);
        CHECK(b.wer == doctest::Approx(static_cast<double>(expected) / ref.size()));
        // breakdown identities
        CHECK(b.substitutions + b.deletions + b.hits == static_cast<int64_t>(ref.size()));
        CHECK(b.substitutions + b.insertions + b.hits == static_cast<int64_t>(hyp.size()));
    }
}

TEST_CASE("triangle inequality over random triples") {
    Rng rng = Rng::seeded(29);
    for (int k = 0; k < 200; ++k) {
        std::vector<std::string> a = random_words(rng, 6);
        std::vector<std::string> b = random_words(rng, 6);
        std::vector<std::string> c = random_words(rng, 6);
        const int64_t ab = wer_words(a, b).edits();
        const int64_t bc = wer_words(b, c).edits();
        const int64_t ac = wer_words(a, c).edits();
        CHECK(ac <= ab + bc);
    }
}

TEST_CASE("tie-breaking is deterministic and never changes the edit total") {
    // "a b" -> "b": one deletion is minimal
    const WerBreakdown del = wer("a b", "b");
    CHECK(del.deletions == 1);
    CHECK(del.edits() == 1);
    // substitution preferred over delete+insert pairs
    const WerBreakdown sub = wer("a", "b");
    CHECK(sub.substitutions == 1);
    CHECK(sub.edits() == 1);
    for (int rep = 0; rep < 3; ++rep) {
        const WerBreakdown again = wer("a b", "b");
        CHECK(again.substitutions == del.substitutions);
        CHECK(again.insertions == del.insertions);
        CHECK(again.deletions == del.deletions);
    }
}

}  // TEST_SUITE
