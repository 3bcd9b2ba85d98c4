#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

namespace hybridir {

// All on-disk integers and floats are little-endian regardless of host.

class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path);

    void bytes(std::string_view raw);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f64(double v);
    /// u32 length followed by the bytes.
    void str(std::string_view s);

    std::uint64_t position();
    void seek(std::uint64_t offset);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path);

    std::string bytes(std::size_t n);
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string str();

    /// Throws IoError naming the file unless the stream sits at EOF.
    void expect_end();

private:
    void read_exact(char* dst, std::size_t n);

    std::filesystem::path path_;
    std::ifstream in_;
};

void store_le32(std::uint32_t v, unsigned char* dst);
void store_le64(std::uint64_t v, unsigned char* dst);
std::uint32_t load_le32(const unsigned char* src);
std::uint64_t load_le64(const unsigned char* src);

/// Read-only POSIX memory mapping of a whole file.
class MappedFile {
public:
    explicit MappedFile(const std::filesystem::path& path);
    ~MappedFile();
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;
    MappedFile(MappedFile&& other) noexcept;
    MappedFile& operator=(MappedFile&& other) noexcept;

    std::span<const unsigned char> data() const { return {data_, size_}; }
    std::size_t size() const { return size_; }

private:
    void release();

    const unsigned char* data_ = nullptr;
    std::size_t size_ = 0;
};

/// Hex digest (FNV-1a 64) of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace hybridir
