#include "chemrag/util.hpp"

#include <openssl/evp.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <cctype>
#include <fstream>
#include <sstream>

#include "chemrag/errors.hpp"

namespace chemrag {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t hash64(std::string_view data, uint64_t seed) {
    // FNV-1a over bytes, then mixed; stable across platforms.
    uint64_t h = 14695981039346656037ULL ^ seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return mix64(h);
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

size_t count_whitespace_tokens(std::string_view s) {
    size_t n = 0;
    bool in_token = false;
    for (char c : s) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_token) ++n;
        in_token = !ws;
    }
    return n;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

namespace {

std::u16string utf8_to_utf16(std::string_view utf8) {
    std::u16string out;
    out.resize(utf8.size() + 1);
    UErrorCode status = U_ZERO_ERROR;
    int32_t written = 0;
    // Invalid sequences become U+FFFD so normalization stays total.
    u_strFromUTF8WithSub(reinterpret_cast<UChar*>(out.data()), static_cast<int32_t>(out.size()),
                         &written, utf8.data(), static_cast<int32_t>(utf8.size()), 0xFFFD,
                         nullptr, &status);
    if (U_FAILURE(status)) throw Error("utf8 decode failed");
    out.resize(static_cast<size_t>(written));
    return out;
}

std::string utf16_to_utf8(const std::u16string& utf16) {
    std::string out;
    out.resize(utf16.size() * 4 + 1);
    UErrorCode status = U_ZERO_ERROR;
    int32_t written = 0;
    u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &written,
                reinterpret_cast<const UChar*>(utf16.data()), static_cast<int32_t>(utf16.size()),
                &status);
    if (U_FAILURE(status)) throw Error("utf8 encode failed");
    out.resize(static_cast<size_t>(written));
    return out;
}

std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFCInstance(&status);
    if (U_FAILURE(status)) throw Error("ICU NFC instance unavailable");
    std::u16string in = utf8_to_utf16(utf8);
    std::u16string out;
    out.resize(in.size() * 2 + 1);
    int32_t written = unorm2_normalize(norm, reinterpret_cast<const UChar*>(in.data()),
                                       static_cast<int32_t>(in.size()),
                                       reinterpret_cast<UChar*>(out.data()),
                                       static_cast<int32_t>(out.size()), &status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    out.resize(static_cast<size_t>(written));
    return utf16_to_utf8(out);
}

}  // namespace

std::string normalize_text(std::string_view utf8) {
    std::string composed = nfc(utf8);
    std::string out;
    out.reserve(composed.size());
    bool pending_space = false;
    for (char c : composed) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open file: " + path.string());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace chemrag
