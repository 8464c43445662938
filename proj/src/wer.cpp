#include "rlab/wer.hpp"

#include <algorithm>

#include "rlab/text.hpp"

namespace rlab {

namespace {

bool is_space(uint32_t cp) { return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r'; }

bool is_digit(uint32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_letter(uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    switch (cp) {
        case 0xe4: case 0xf6: case 0xfc:  // ä ö ü
        case 0xc4: case 0xd6: case 0xdc:  // Ä Ö Ü
        case 0xdf:                        // ß
            return true;
        default:
            return false;
    }
}

uint32_t to_lower(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    switch (cp) {
        case 0xc4: return 0xe4;
        case 0xd6: return 0xf6;
        case 0xdc: return 0xfc;
        default: return cp;
    }
}

}  // namespace

std::string normalize(std::string_view text, const NormalizerConfig& cfg) {
    std::vector<uint32_t> cps = utf8_decode(text);
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    bool emitted = false;
    for (uint32_t cp : cps) {
        if (cfg.lowercase) cp = to_lower(cp);
        if (is_space(cp)) {
            if (cfg.collapse_whitespace) {
                pending_space = true;
            } else {
                utf8_append(out, cp);
            }
            continue;
        }
        if (cfg.strip_punctuation && !is_letter(cp) && !is_digit(cp)) continue;
        if (pending_space && emitted) out.push_back(' ');
        pending_space = false;
        emitted = true;
        if (cfg.sz_to_ss && cp == 0xdf) {
            out += "ss";
        } else {
            utf8_append(out, cp);
        }
    }
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

WerBreakdown wer_words(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    const size_t m = ref.size(), n = hyp.size();
    std::vector<int64_t> dist((m + 1) * (n + 1));
    auto d = [&](size_t i, size_t j) -> int64_t& { return dist[i * (n + 1) + j]; };
    for (size_t i = 0; i <= m; ++i) d(i, 0) = static_cast<int64_t>(i);
    for (size_t j = 0; j <= n; ++j) d(0, j) = static_cast<int64_t>(j);
    for (size_t i = 1; i <= m; ++i)
        for (size_t j = 1; j <= n; ++j)
            d(i, j) = std::min({d(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                                d(i - 1, j) + 1, d(i, j - 1) + 1});

    WerBreakdown b;
    b.ref_words = static_cast<int64_t>(m);
    size_t i = m, j = n;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && d(i, j) == d(i - 1, j - 1)) {
            ++b.hits;
            --i, --j;
        } else if (i > 0 && j > 0 && d(i, j) == d(i - 1, j - 1) + 1) {
            ++b.substitutions;
            --i, --j;
        } else if (i > 0 && d(i, j) == d(i - 1, j) + 1) {
            ++b.deletions;
            --i;
        } else {
            ++b.insertions;
            --j;
        }
    }
    b.wer = b.ref_words == 0 ? 0.0
                             : static_cast<double>(b.edits()) / static_cast<double>(b.ref_words);
    return b;
}

WerBreakdown wer(std::string_view reference, std::string_view hypothesis,
                 const NormalizerConfig& cfg) {
    const std::vector<std::string> ref = split_words(normalize(reference, cfg));
    if (ref.empty())
        throw UndefinedWerError("reference is empty after normalization; WER is undefined");
    return wer_words(ref, split_words(normalize(hypothesis, cfg)));
}

}  // namespace rlab
