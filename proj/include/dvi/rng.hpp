#pragma once

#include <cmath>
#include <cstdint>

namespace dvi {

// Counter-based per-path RNG.  Each path derives an independent stream from
// (seed, stream_index) via splitmix64, so results do not depend on how paths
// are partitioned across threads.  Normal variates come from Box-Muller on
// the raw 64-bit outputs; no libstdc++ distribution is involved, so streams
// are identical across platforms and standard-library versions.
class PathRng {
  public:
    PathRng(std::uint64_t seed, std::uint64_t stream_index)
        : state_(mix(seed ^ mix(0x9e3779b97f4a7c15ULL + stream_index))),
          have_spare_(false),
          spare_(0.0) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform in (0, 1); never returns 0 so log() below is safe.
    double next_uniform() {
        const std::uint64_t bits = next_u64();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool have_spare_;
    double spare_;
};

}  // namespace dvi
