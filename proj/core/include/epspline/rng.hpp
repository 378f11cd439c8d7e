#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace epspline {

// Counter-based pseudo-random stream. Each stream is keyed by a tuple of
// (master seed, scenario id, replication index, component tag), so any
// replication/component can be regenerated independently of scheduling.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds
        next_u64();
        next_u64();
    }

    static uint64_t key(uint64_t master_seed, std::string_view scenario_id,
                        uint64_t rep, uint64_t component_tag) {
        uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tuple
        auto mix = [&h](uint64_t v) {
            for (int i = 0; i < 8; ++i) {
                h ^= (v >> (8 * i)) & 0xffULL;
                h *= 0x100000001b3ULL;
            }
        };
        mix(master_seed);
        for (char c : scenario_id) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        mix(rep);
        mix(component_tag);
        return h;
    }

    RngStream(uint64_t master_seed, std::string_view scenario_id, uint64_t rep,
              uint64_t component_tag)
        : RngStream(key(master_seed, scenario_id, rep, component_tag)) {}

    // splitmix64
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1); never returns exactly 0 or 1
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (bit-stable across platforms)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace epspline
