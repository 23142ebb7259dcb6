#include "purevm/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace purevm {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

uint32_t parse_uint(const std::string& v, Pos where, const char* key) {
    if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw ConfigError(where, std::string(key) + " must be a positive integer, got '" + v + "'");
    unsigned long long n = std::stoull(v);
    if (n == 0 || n > 0xFFFFFFFFull)
        throw ConfigError(where, std::string(key) + " out of range: " + v);
    return static_cast<uint32_t>(n);
}

}  // namespace

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::Rewinding: return "REWINDING";
        case Backend::JustInTime: return "JUST_IN_TIME";
        case Backend::Test: return "TEST";
    }
    return "?";
}

Backend parse_backend(const std::string& name, Pos where) {
    if (name == "REWINDING") return Backend::Rewinding;
    if (name == "JUST_IN_TIME") return Backend::JustInTime;
    if (name == "TEST") return Backend::Test;
    throw ConfigError(where, "unknown backend '" + name + "' (expected REWINDING, JUST_IN_TIME or TEST)");
}

VmConfig parse_config(const std::string& text) {
    VmConfig cfg;
    std::set<std::string> seen;
    bool have_events = false;

    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        Pos here{lineno, 1};
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(here, "expected 'key = value', got '" + trim(raw) + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(here, "missing key before '='");
        if (!seen.insert(key).second) throw ConfigError(here, "duplicate key '" + key + "'");

        if (key == "events") {
            cfg.events = split_list(value);
            have_events = true;
        } else if (key == "platform") {
            cfg.platform = value;
        } else if (key == "nvm_size") {
            cfg.nvm_size = parse_uint(value, here, "nvm_size");
        } else if (key == "queue_capacity") {
            cfg.queue_capacity = parse_uint(value, here, "queue_capacity");
        } else if (key == "page_size") {
            cfg.page_size = parse_uint(value, here, "page_size");
        } else if (key == "loop_unroll") {
            cfg.loop_unroll = parse_uint(value, here, "loop_unroll");
        } else if (key == "stack_depth") {
            cfg.stack_depth = parse_uint(value, here, "stack_depth");
        } else if (key == "optimize") {
            for (const auto& name : split_list(value)) {
                if (name == "BLOCK_FUSION")
                    cfg.optimize.push_back(Optimization::BlockFusion);
                else if (name == "LOOP_OPT")
                    cfg.optimize.push_back(Optimization::LoopOpt);
                else if (name != "NONE")
                    throw ConfigError(here, "unknown optimization '" + name + "'");
            }
        } else if (key == "backend") {
            cfg.backend = parse_backend(value, here);
        } else {
            throw ConfigError(here, "unknown key '" + key + "'");
        }
    }

    Pos end{lineno + 1, 1};
    if (!have_events) throw ConfigError(end, "missing mandatory 'events' list");
    for (const char* required : {"boot", "reboot", "sleep"}) {
        if (std::find(cfg.events.begin(), cfg.events.end(), required) == cfg.events.end())
            throw ConfigError(end, std::string("mandatory handler '") + required +
                                       "' missing from events list");
    }
    std::set<std::string> uniq(cfg.events.begin(), cfg.events.end());
    if (uniq.size() != cfg.events.size()) throw ConfigError(end, "duplicate event name in events list");

    if (cfg.page_size != 16 && cfg.page_size != 32 && cfg.page_size != 64 && cfg.page_size != 128)
        throw ConfigError(end, "page_size must be one of 16, 32, 64, 128");
    if (cfg.nvm_size % cfg.page_size != 0)
        throw ConfigError(end, "nvm_size must be a multiple of page_size");
    if (cfg.loop_unroll < 1 || cfg.loop_unroll > 64)
        throw ConfigError(end, "loop_unroll must be between 1 and 64");
    if (cfg.stack_depth < 16 || cfg.stack_depth > 4096)
        throw ConfigError(end, "stack_depth must be between 16 and 4096");
    return cfg;
}

}  // namespace purevm
