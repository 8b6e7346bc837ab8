#pragma once

// Shared binary/JSON plumbing for the on-disk index format. A directory per
// index: header.json (magic + params), snippets.jsonl, and the binary
// postings/vector files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "chemrag/errors.hpp"
#include "chemrag/util.hpp"

namespace chemrag::index_io {

inline constexpr const char* kHeaderMagic = "chemrag-index";
inline constexpr int kFormatVersion = 1;

inline void write_header(const std::filesystem::path& dir, nlohmann::json header) {
    header["magic"] = kHeaderMagic;
    header["version"] = kFormatVersion;
    atomic_write_file(dir / "header.json", header.dump(2) + "\n");
}

inline nlohmann::json read_header(const std::filesystem::path& dir) {
    nlohmann::json header = nlohmann::json::parse(read_file(dir / "header.json"));
    if (header.value("magic", "") != kHeaderMagic)
        throw IntegrityError("not a chemrag index: " + dir.string());
    if (header.value("version", 0) != kFormatVersion)
        throw IntegrityError("unsupported index version in " + dir.string());
    return header;
}

template <typename T>
void put_raw(std::string& buf, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void put_string(std::string& buf, const std::string& s) {
    put_raw<uint32_t>(buf, static_cast<uint32_t>(s.size()));
    buf.append(s);
}

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : data_(read_file(path)), path_(path) {}

    template <typename T>
    T get_raw() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > data_.size())
            throw IntegrityError("truncated index file: " + path_.string());
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string() {
        uint32_t len = get_raw<uint32_t>();
        if (pos_ + len > data_.size())
            throw IntegrityError("truncated index file: " + path_.string());
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void expect_magic(const std::string& magic) {
        if (data_.size() < pos_ + magic.size() || data_.substr(pos_, magic.size()) != magic)
            throw IntegrityError("bad magic in " + path_.string());
        pos_ += magic.size();
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    std::string data_;
    std::filesystem::path path_;
    size_t pos_ = 0;
};

}  // namespace chemrag::index_io
