#ifndef VOLWINDOW_RNG_HPP
#define VOLWINDOW_RNG_HPP

#include <cmath>
#include <cstdint>

namespace volwindow {

// Counter-based RNG: output i is a hash of (key, i), so a stream can be
// reproduced from its seed alone and substreams split off by id without
// sharing state. Mixing is the splitmix64 finalizer.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(seed) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform in [0, n). Lemire multiply-shift; bias is < 2^-64 per draw.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = 1.0 - next_double(); // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Independent substream for a case/tensor id. Double-mixed with a
    // distinct constant so substream keys never collide with outputs of
    // the parent stream.
    CounterRng split(std::uint64_t stream_id) const {
        return CounterRng(mix(mix(key_ ^ kSplit) + (stream_id + 1) * kGolden));
    }

    std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    static constexpr std::uint64_t kSplit = 0xda942042e4dd58b5ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace volwindow

#endif
