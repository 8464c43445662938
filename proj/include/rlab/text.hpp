#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rlab/error.hpp"

namespace rlab {

// Minimal UTF-8 handling; enough for German text (umlauts and eszett are
// two-byte sequences).

inline std::vector<uint32_t> utf8_decode(std::string_view s) {
    std::vector<uint32_t> out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        uint32_t cp = 0;
        int extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6) {
            cp = c & 0x1f;
            extra = 1;
        } else if ((c >> 4) == 0xe) {
            cp = c & 0x0f;
            extra = 2;
        } else if ((c >> 3) == 0x1e) {
            cp = c & 0x07;
            extra = 3;
        } else {
            throw ArgumentError("invalid UTF-8 lead byte");
        }
        if (i + extra >= s.size()) throw ArgumentError("truncated UTF-8 sequence");
        for (int k = 1; k <= extra; ++k) {
            const unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) throw ArgumentError("invalid UTF-8 continuation byte");
            cp = (cp << 6) | (cc & 0x3f);
        }
        out.push_back(cp);
        i += static_cast<size_t>(extra) + 1;
    }
    return out;
}

inline void utf8_append(std::string& s, uint32_t cp) {
    if (cp < 0x80) {
        s.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        s.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        s.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        s.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

inline std::string utf8_encode(uint32_t cp) {
    std::string s;
    utf8_append(s, cp);
    return s;
}

// Ordered symbol set: special tokens plus one entry per character. Token id
// is the position in `symbols`.
struct Vocab {
    std::vector<std::string> symbols;
    int blank_id = -1;
    int bos_id = -1;
    int eos_id = -1;

    static Vocab ctc(std::string_view chars) {
        Vocab v;
        v.blank_id = 0;
        v.symbols.push_back("<blank>");
        v.add_chars(chars);
        return v;
    }

    static Vocab enc_dec(std::string_view chars) {
        Vocab v;
        v.bos_id = 0;
        v.eos_id = 1;
        v.symbols.push_back("<bos>");
        v.symbols.push_back("<eos>");
        v.add_chars(chars);
        return v;
    }

    int size() const { return static_cast<int>(symbols.size()); }

    int id_of(const std::string& sym) const {
        auto it = index_.find(sym);
        return it == index_.end() ? -1 : it->second;
    }

    // Character-level tokenization of a transcript.
    std::vector<int> encode(std::string_view text) const {
        std::vector<int> ids;
        for (uint32_t cp : utf8_decode(text)) {
            const int id = id_of(utf8_encode(cp));
            if (id < 0)
                throw ArgumentError("character '" + utf8_encode(cp) + "' not in model vocabulary");
            ids.push_back(id);
        }
        return ids;
    }

    // Inverse of encode; special symbols are dropped.
    std::string decode(const std::vector<int>& ids) const {
        std::string out;
        for (int id : ids) {
            if (id == blank_id || id == bos_id || id == eos_id) continue;
            if (id < 0 || id >= size()) throw ArgumentError("token id out of range");
            out += symbols[static_cast<size_t>(id)];
        }
        return out;
    }

    void add_chars(std::string_view chars) {
        for (uint32_t cp : utf8_decode(chars)) {
            const std::string s = utf8_encode(cp);
            if (index_.count(s)) continue;
            index_.emplace(s, static_cast<int>(symbols.size()));
            symbols.push_back(s);
        }
        rebuild_index();
    }

    void rebuild_index() {
        index_.clear();
        for (size_t i = 0; i < symbols.size(); ++i) index_.emplace(symbols[i], static_cast<int>(i));
    }

  private:
    std::unordered_map<std::string, int> index_;
};

// Character inventory shared by both synthetic domains.
inline const char* kGermanChars = "abcdefghijklmnopqrstuvwxyzäöüß ";

}  // namespace rlab
