#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purevm/source.hpp"

namespace purevm {

// Access costs in energy units. One memory access, primitive execution or
// whole-page copy is one micro step; crashes land on micro-step
// boundaries. A page copy costs two units per word copied.
inline constexpr std::uint32_t kCostWordRead = 1;
inline constexpr std::uint32_t kCostWordWrite = 2;
inline constexpr std::uint32_t kCostPrimExec = 4;
inline constexpr std::uint32_t kCostIoExec = 16;
inline constexpr std::uint32_t kCostPageCopyPerWord = 2;

// Energy reserve needed to save a just-in-time checkpoint and finish the
// largest atomic unit in flight. Covers a queue consume or an I/O
// primitive with its operand traffic, with slack.
inline constexpr double kJitMargin = 96.0;

enum class PowerMode { Continuous, Energy, Schedule };

struct PowerModel {
    PowerMode mode = PowerMode::Continuous;
    // Energy: buffer drains by access cost and refills from the harvest
    // trace (cycled, one entry per micro step). Power dies when the level
    // reaches threshold_off; a reboot restarts from a full buffer.
    double capacity = 0;
    double threshold_off = 0;
    std::vector<double> harvest;
    // Schedule: absolute micro steps at which power dies.
    std::vector<std::uint64_t> crash_steps;
};

// Thrown at the micro step where supply dies. Deliberately not a
// std::exception so it cannot be swallowed by generic handlers.
struct PowerFailure {};

class PowerDriver {
  public:
    explicit PowerDriver(PowerModel m);

    // Charge for an access; throws PowerFailure before the access takes
    // effect when supply dies at this step.
    void tick(std::uint32_t cost);

    // Just-in-time support. The margin is the energy needed to reach the
    // next safe point and save state there.
    void set_margin(double m) { margin_ = m; }
    bool low_energy() const;
    [[noreturn]] void force_crash() { throw PowerFailure{}; }

    void reboot();

    std::uint64_t steps() const { return steps_; }
    double energy() const { return energy_; }
    double headroom() const { return capacity_ - off_; }
    PowerMode mode() const { return model_.mode; }

  private:
    PowerModel model_;
    double capacity_ = 0;
    double off_ = 0;
    double energy_ = 0;
    double margin_ = 0;
    std::uint64_t steps_ = 0;
    std::size_t next_crash_ = 0;
};

// "steps:a,b,c" or "energy:capacity,threshold_off,h0 h1 ..." or
// "continuous". The harvest part may be "@file" naming a trace of
// "duration rate" lines, expanded in order. Used by the command line and
// test drivers.
PowerModel parse_power(const std::string& text);

std::vector<double> load_harvest(const std::string& path);

}  // namespace purevm
