#pragma once

#include <stdexcept>
#include <string>

#include "purevm/ir.hpp"

namespace purevm {

struct CirError : std::runtime_error {
    explicit CirError(const std::string& msg) : std::runtime_error("cir: " + msg) {}
};

// Compiled image container: "CIR1" magic followed by the machine config,
// memory map, code, handler table and initial memory. Numbers are little
// endian and fixed width, so a file is identical across hosts.
std::string encode_cir(const IrProgram& p);
IrProgram decode_cir(const std::string& bytes);

void save_cir(const std::string& path, const IrProgram& p);
IrProgram load_cir(const std::string& path);

}  // namespace purevm
