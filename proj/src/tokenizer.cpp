#include "chemrag/tokenizer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cctype>

namespace chemrag {

namespace {

void append_codepoint(std::string& out, UChar32 cp) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool err = false;
    U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, cp, err);
    if (!err) out.append(buf, static_cast<size_t>(len));
}

// lowercased alphanumeric runs of one whitespace token
void split_terms(std::string_view raw, std::vector<std::string>& out) {
    std::string current;
    int32_t i = 0;
    int32_t len = static_cast<int32_t>(raw.size());
    while (i < len) {
        UChar32 cp;
        U8_NEXT(reinterpret_cast<const uint8_t*>(raw.data()), i, len, cp);
        if (cp < 0) cp = 0xFFFD;
        if (u_isalnum(cp)) {
            append_codepoint(current, u_tolower(cp));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
}

bool smiles_letter(char c) {
    static const std::string_view allowed = "BCNOPSFIHbcnosplr";
    return allowed.find(c) != std::string_view::npos;
}

}  // namespace

bool chemistry_like_token(std::string_view raw) {
    bool has_upper = false;
    bool all_smiles_letters = !raw.empty();
    for (size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        switch (c) {
            case '(': case ')': case '[': case ']':
            case '=': case '#': case '@': case '+': case '%':
                return true;
            default: break;
        }
        bool digit = std::isdigit(static_cast<unsigned char>(c)) != 0;
        bool alpha = std::isalpha(static_cast<unsigned char>(c)) != 0;
        if (digit) {
            if ((i > 0 && std::isalpha(static_cast<unsigned char>(raw[i - 1]))) ||
                (i + 1 < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i + 1]))))
                return true;
        }
        if (std::isupper(static_cast<unsigned char>(c))) has_upper = true;
        if (!alpha || !smiles_letter(c)) all_smiles_letters = false;
    }
    return raw.size() >= 2 && all_smiles_letters && has_upper;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string_view raw = text.substr(i, j - i);
            size_t first_term = out.size();
            split_terms(raw, out);
            if (chemistry_like_token(raw)) {
                bool duplicate = false;
                for (size_t t = first_term; t < out.size(); ++t) {
                    if (out[t] == raw) {
                        duplicate = true;
                        break;
                    }
                }
                if (!duplicate) out.emplace_back(raw);
            }
        }
        i = j;
    }
    return out;
}

}  // namespace chemrag
