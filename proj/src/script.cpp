#include "purevm/script.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "purevm/source.hpp"

namespace purevm {

RunScript parse_script(const std::string& text, const IrProgram& prog) {
    RunScript s;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        Pos here{lineno, 1};
        std::string line = raw.substr(0, raw.find('#'));
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;

        if (head == "temps") {
            float v;
            while (ls >> v) s.temps.push_back(v);
            continue;
        }
        if (head.empty() || head[0] != '@')
            throw ConfigError(here, "expected '@step interrupt value' or 'temps ...'");

        ScriptEvent ev;
        ev.at_step = std::stoull(head.substr(1));
        std::string value;
        if (!(ls >> ev.interrupt >> value))
            throw ConfigError(here, "expected '@step interrupt value'");

        const std::uint16_t* target = nullptr;
        for (const auto& [name, id] : prog.interrupts)
            if (name == ev.interrupt) target = &id;
        if (!target) throw ConfigError(here, "unknown interrupt '" + ev.interrupt + "'");

        switch (prog.handlers[*target].payload_tag) {
            case ValTag::Float:
                ev.payload_bits = std::bit_cast<std::uint32_t>(std::stof(value));
                break;
            case ValTag::Bool:
                ev.payload_bits = value == "true" ? 1 : 0;
                break;
            case ValTag::Void:
                ev.payload_bits = 0;
                break;
            default:
                ev.payload_bits =
                    static_cast<std::uint32_t>(static_cast<std::int32_t>(std::stol(value)));
                break;
        }
        s.events.push_back(ev);
    }
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const ScriptEvent& a, const ScriptEvent& b) { return a.at_step < b.at_step; });
    return s;
}

}  // namespace purevm
