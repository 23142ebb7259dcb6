#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purevm/ir.hpp"

namespace purevm {

// Word-granular persistent storage. Writes of a single word are atomic;
// anything larger is the caller's problem, which is the point.
class Memory {
  public:
    Memory(std::vector<Word> image, std::uint32_t page_size)
        : words_(std::move(image)), page_(page_size) {}

    Word read(Addr a) const { return words_.at(a); }
    void write(Addr a, Word v) { words_.at(a) = v; }

    std::uint32_t page_size() const { return page_; }
    std::uint32_t page_of(Addr a) const { return a / page_; }
    std::size_t size() const { return words_.size(); }
    const std::vector<Word>& words() const { return words_; }

  private:
    std::vector<Word> words_;
    std::uint32_t page_;
};

// Snapshot container: "NVM1" magic, page size, word count, raw words.
void save_nvm(const std::string& path, const Memory& m);
Memory load_nvm(const std::string& path);

}  // namespace purevm
