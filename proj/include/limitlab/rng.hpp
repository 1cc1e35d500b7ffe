#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace limitlab {

// Philox4x32-10 counter-based block function.
struct Philox4x32 {
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static counter_type block(counter_type c, key_type k) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += W0;
            k[1] += W1;
        }
        return c;
    }
};

// One independent stream per (seed, stream id). Models UniformRandomBitGenerator
// with 64-bit output; the counter is (block index, stream id), the key is the seed.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          id_lo_(static_cast<std::uint32_t>(stream_id)), id_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (have_ == 0) {
            const auto out = Philox4x32::block(
                {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), id_lo_, id_hi_}, key_);
            ++block_;
            buf_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
            buf_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
            have_ = 2;
        }
        return buf_[2 - have_--];
    }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t blocks_used() const { return block_; }

private:
    Philox4x32::key_type key_;
    std::uint32_t id_lo_, id_hi_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int have_ = 0;
};

} // namespace limitlab
