#include "purevm/nvm.hpp"

#include <cstdio>

#include "purevm/source.hpp"

namespace purevm {

namespace {

void put32(FILE* f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    fwrite(b, 1, 4, f);
}

std::uint32_t get32(FILE* f) {
    unsigned char b[4];
    if (fread(b, 1, 4, f) != 4) throw VmError("io", "truncated memory snapshot");
    return b[0] | (b[1] << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void save_nvm(const std::string& path, const Memory& m) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw VmError("io", "cannot write '" + path + "'");
    fwrite("NVM1", 1, 4, f);
    put32(f, m.page_size());
    put32(f, static_cast<std::uint32_t>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        Word w = m.read(static_cast<Addr>(i));
        unsigned char b[2] = {static_cast<unsigned char>(w), static_cast<unsigned char>(w >> 8)};
        fwrite(b, 1, 2, f);
    }
    fclose(f);
}

Memory load_nvm(const std::string& path) {
    FILE* f = fopen(path.c_str(), "rb");
    if (!f) throw VmError("io", "cannot read '" + path + "'");
    char magic[4];
    if (fread(magic, 1, 4, f) != 4 || std::string(magic, 4) != "NVM1") {
        fclose(f);
        throw VmError("io", "'" + path + "' is not a memory snapshot");
    }
    std::uint32_t page = get32(f);
    std::uint32_t count = get32(f);
    std::vector<Word> words(count);
    for (auto& w : words) {
        unsigned char b[2];
        if (fread(b, 1, 2, f) != 2) {
            fclose(f);
            throw VmError("io", "truncated memory snapshot");
        }
        w = static_cast<Word>(b[0] | (b[1] << 8));
    }
    fclose(f);
    return Memory(std::move(words), page);
}

}  // namespace purevm
