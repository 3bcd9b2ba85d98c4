#include "hybridir/binary_io.hpp"

#include "hybridir/common.hpp"

#include <bit>
#include <cstring>
#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

namespace hybridir {

void store_le32(std::uint32_t v, unsigned char* dst) {
    for (int i = 0; i < 4; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

void store_le64(std::uint64_t v, unsigned char* dst) {
    for (int i = 0; i < 8; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t load_le32(const unsigned char* src) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | src[i];
    return v;
}

std::uint64_t load_le64(const unsigned char* src) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | src[i];
    return v;
}

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw IoError("cannot write " + path.string());
    }
}

void BinaryWriter::bytes(std::string_view raw) {
    out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out_) throw IoError("write failed: " + path_.string());
}

void BinaryWriter::u32(std::uint32_t v) {
    unsigned char buf[4];
    store_le32(v, buf);
    bytes({reinterpret_cast<const char*>(buf), 4});
}

void BinaryWriter::u64(std::uint64_t v) {
    unsigned char buf[8];
    store_le64(v, buf);
    bytes({reinterpret_cast<const char*>(buf), 8});
}

void BinaryWriter::f32(float v) {
    u32(std::bit_cast<std::uint32_t>(v));
}

void BinaryWriter::f64(double v) {
    u64(std::bit_cast<std::uint64_t>(v));
}

void BinaryWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
}

std::uint64_t BinaryWriter::position() {
    return static_cast<std::uint64_t>(out_.tellp());
}

void BinaryWriter::seek(std::uint64_t offset) {
    out_.seekp(static_cast<std::streamoff>(offset));
}

void BinaryWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("close failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) {
        throw IoError("cannot read " + path.string());
    }
}

void BinaryReader::read_exact(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
        throw IoError("truncated file: " + path_.string());
    }
}

std::string BinaryReader::bytes(std::size_t n) {
    std::string s(n, '\0');
    read_exact(s.data(), n);
    return s;
}

std::uint32_t BinaryReader::u32() {
    unsigned char buf[4];
    read_exact(reinterpret_cast<char*>(buf), 4);
    return load_le32(buf);
}

std::uint64_t BinaryReader::u64() {
    unsigned char buf[8];
    read_exact(reinterpret_cast<char*>(buf), 8);
    return load_le64(buf);
}

float BinaryReader::f32() {
    return std::bit_cast<float>(u32());
}

double BinaryReader::f64() {
    return std::bit_cast<double>(u64());
}

std::string BinaryReader::str() {
    return bytes(u32());
}

void BinaryReader::expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
        throw IoError("trailing bytes in " + path_.string());
    }
}

MappedFile::MappedFile(const std::filesystem::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) {
        throw IoError("cannot open " + path.string());
    }
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
        ::close(fd);
        throw IoError("cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
        void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
        if (p == MAP_FAILED) {
            ::close(fd);
            throw IoError("cannot map " + path.string());
        }
        data_ = static_cast<const unsigned char*>(p);
    }
    ::close(fd);
}

MappedFile::~MappedFile() {
    release();
}

MappedFile::MappedFile(MappedFile&& other) noexcept : data_(other.data_), size_(other.size_) {
    other.data_ = nullptr;
    other.size_ = 0;
}

MappedFile& MappedFile::operator=(MappedFile&& other) noexcept {
    if (this != &other) {
        release();
        data_ = other.data_;
        size_ = other.size_;
        other.data_ = nullptr;
        other.size_ = 0;
    }
    return *this;
}

void MappedFile::release() {
    if (data_) {
        ::munmap(const_cast<unsigned char*>(data_), size_);
        data_ = nullptr;
        size_ = 0;
    }
}

std::string file_digest(const std::filesystem::path& path) {
    MappedFile file(path);
    auto bytes = file.data();
    return hex64(fnv1a({reinterpret_cast<const char*>(bytes.data()), bytes.size()}));
}

}  // namespace hybridir
