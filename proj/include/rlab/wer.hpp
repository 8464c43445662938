#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rlab/error.hpp"

namespace rlab {

// Transcript normalization applied before scoring. Umlauts and eszett are
// real letters and survive stripping; idempotent by construction.
struct NormalizerConfig {
    bool lowercase = true;
    bool strip_punctuation = true;  // drop anything that is not letter/digit/space
    bool collapse_whitespace = true;
    bool sz_to_ss = false;
};

std::string normalize(std::string_view text, const NormalizerConfig& cfg = {});

std::vector<std::string> split_words(std::string_view text);

struct WerBreakdown {
    int64_t substitutions = 0;
    int64_t insertions = 0;
    int64_t deletions = 0;
    int64_t hits = 0;
    int64_t ref_words = 0;
    double wer = 0.0;

    int64_t edits() const { return substitutions + insertions + deletions; }
};

// Word-level minimal edit distance with a deterministic backtrace
// (substitution preferred over deletion over insertion on cost ties).
WerBreakdown wer_words(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// Normalizes both sides, then scores. Throws UndefinedWerError when the
// normalized reference is empty.
WerBreakdown wer(std::string_view reference, std::string_view hypothesis,
                 const NormalizerConfig& cfg = {});

}  // namespace rlab
