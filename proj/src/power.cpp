#include "purevm/power.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace purevm {

PowerDriver::PowerDriver(PowerModel m) : model_(std::move(m)) {
    if (model_.mode == PowerMode::Energy) {
        if (model_.capacity <= 0 || model_.threshold_off < 0 ||
            model_.threshold_off >= model_.capacity)
            throw ConfigError(Pos{0, 0}, "energy model needs 0 <= threshold_off < capacity");
        if (model_.harvest.empty()) model_.harvest.push_back(0);
    }
    if (model_.mode == PowerMode::Schedule &&
        !std::is_sorted(model_.crash_steps.begin(), model_.crash_steps.end()))
        throw ConfigError(Pos{0, 0}, "crash schedule must be sorted");
    capacity_ = model_.capacity;
    off_ = model_.threshold_off;
    energy_ = capacity_;
}

void PowerDriver::tick(std::uint32_t cost) {
    ++steps_;
    switch (model_.mode) {
        case PowerMode::Continuous: return;
        case PowerMode::Schedule:
            if (next_crash_ < model_.crash_steps.size() &&
                steps_ > model_.crash_steps[next_crash_]) {
                ++next_crash_;
                throw PowerFailure{};
            }
            return;
        case PowerMode::Energy: {
            energy_ = std::min(capacity_,
                               energy_ + model_.harvest[steps_ % model_.harvest.size()]);
            energy_ -= cost;
            if (energy_ <= off_) throw PowerFailure{};
            return;
        }
    }
}

bool PowerDriver::low_energy() const {
    if (model_.mode != PowerMode::Energy) return false;
    return energy_ - off_ < margin_;
}

void PowerDriver::reboot() { energy_ = capacity_; }

PowerModel parse_power(const std::string& text) {
    PowerModel m;
    if (text.empty() || text == "continuous") return m;
    auto colon = text.find(':');
    std::string kind = text.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "steps") {
        m.mode = PowerMode::Schedule;
        std::istringstream is(rest);
        std::string item;
        while (std::getline(is, item, ','))
            if (!item.empty()) m.crash_steps.push_back(std::stoull(item));
        std::sort(m.crash_steps.begin(), m.crash_steps.end());
        return m;
    }
    if (kind == "energy") {
        m.mode = PowerMode::Energy;
        std::istringstream is(rest);
        std::string item;
        if (!std::getline(is, item, ',')) throw ConfigError(Pos{0, 0}, "energy: missing capacity");
        m.capacity = std::stod(item);
        if (!std::getline(is, item, ','))
            throw ConfigError(Pos{0, 0}, "energy: missing threshold_off");
        m.threshold_off = std::stod(item);
        if (std::getline(is, item, ',')) {
            if (!item.empty() && item[0] == '@') {
                m.harvest = load_harvest(item.substr(1));
            } else {
                std::istringstream hs(item);
                double h;
                while (hs >> h) m.harvest.push_back(h);
            }
        }
        return m;
    }
    throw ConfigError(Pos{0, 0}, "unknown power model '" + text + "'");
}

std::vector<double> load_harvest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(Pos{0, 0}, "cannot open harvest trace '" + path + "'");
    std::vector<double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::uint64_t duration;
        double rate;
        if (!(ls >> duration)) continue;
        if (!(ls >> rate) || duration == 0)
            throw ConfigError(Pos{lineno, 1}, "harvest trace wants 'duration rate' per line");
        for (std::uint64_t i = 0; i < duration; i++) out.push_back(rate);
    }
    return out;
}

}  // namespace purevm
