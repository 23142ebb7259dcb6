#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purevm/ir.hpp"

namespace purevm {

// One external stimulus: when the run reaches `at_step`, the named
// interrupt fires with the given payload. Delivery retries until the event
// queue accepts it.
struct ScriptEvent {
    std::uint64_t at_step = 0;
    std::string interrupt;
    std::uint32_t payload_bits = 0;
};

// Environment for a run: interrupt stimuli plus the sensor stream that
// getTemp consumes. The stream index advances on every execution, so a
// re-executed read observes a fresh value; an empty stream reads 20.0 and
// a finite one cycles.
struct RunScript {
    std::vector<ScriptEvent> events;
    std::vector<float> temps;
};

// Lines: "@step interrupt value" (value typed by the target event),
// "temps v0 v1 ..." for the sensor stream. '#' comments.
RunScript parse_script(const std::string& text, const IrProgram& prog);

}  // namespace purevm
