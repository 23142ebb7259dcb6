#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purevm/source.hpp"

namespace purevm {

enum class Backend { Rewinding, JustInTime, Test };

enum class Optimization { BlockFusion, LoopOpt };

struct VmConfig {
    std::vector<std::string> events;  // declaration order; must include boot/reboot/sleep
    std::string platform = "sim";
    uint32_t nvm_size = 8192;
    uint32_t queue_capacity = 16;
    uint32_t page_size = 32;
    std::vector<Optimization> optimize;
    Backend backend = Backend::Rewinding;
    uint32_t loop_unroll = 8;
    uint32_t stack_depth = 128;

    bool has_opt(Optimization o) const {
        for (auto x : optimize)
            if (x == o) return true;
        return false;
    }
};

// Parses `key = value` lines; '#' starts a comment. Validates defaults and
// the mandatory boot/reboot/sleep handlers.
VmConfig parse_config(const std::string& text);

std::string backend_name(Backend b);
Backend parse_backend(const std::string& name, Pos where);

}  // namespace purevm
