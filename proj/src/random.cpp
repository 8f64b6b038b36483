// SPDX-License-Identifier: Apache-2.0
#include "qlab/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Path hash: absorb each element through splitmix64 so that [a, b] and
// [a + b] or [b, a] map to unrelated keys. The length is absorbed first.
std::uint64_t derive_key(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    state ^= 0xA0761D6478BD642FULL + path.size();
    h ^= splitmix64(state);
    for (std::uint64_t element : path) {
        state ^= element + 0xE7037ED1A0B428DBULL;
        h = (h * 0x9FB21C651E98DF25ULL) ^ splitmix64(state);
    }
    return h;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                         std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

RandomStream::RandomStream(std::uint64_t master_seed, std::vector<std::uint64_t> path)
    : seed_(master_seed), path_(std::move(path)) {
    if (path_.size() > kMaxPathLength) {
        throw std::invalid_argument("random stream path longer than " +
                                    std::to_string(kMaxPathLength));
    }
    const std::uint64_t k = derive_key(seed_, path_);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

RandomStream RandomStream::child(std::uint64_t index) const {
    std::vector<std::uint64_t> p = path_;
    p.push_back(index);
    return RandomStream(seed_, std::move(p));
}

std::uint32_t RandomStream::next_u32() {
    if (used_ == 4) {
        // The upper counter words carry a fixed domain tag so the block
        // sequence never collides with a future 128-bit counter layout.
        block_ = philox4x32({static_cast<std::uint32_t>(counter_),
                             static_cast<std::uint32_t>(counter_ >> 32), 0x51A7u, 0u},
                            key_);
        ++counter_;
        used_ = 0;
    }
    return block_[used_++];
}

std::uint64_t RandomStream::next_u64() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RandomStream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_uniform_open0() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

std::string RandomStream::describe() const {
    std::string out = std::to_string(seed_);
    for (std::uint64_t p : path_) {
        out += '/';
        out += std::to_string(p);
    }
    return out;
}

RandomStream derive_stream(std::uint64_t master_seed, std::vector<std::uint64_t> path) {
    return RandomStream(master_seed, std::move(path));
}

InnovationKind parse_innovation_kind(const std::string& name) {
    if (name == "gaussian") return InnovationKind::gaussian;
    if (name == "rademacher") return InnovationKind::rademacher;
    if (name == "uniform-centered") return InnovationKind::uniform_centered;
    throw std::invalid_argument("unknown innovation kind '" + name + "'");
}

std::string to_string(InnovationKind kind) {
    switch (kind) {
        case InnovationKind::gaussian: return "gaussian";
        case InnovationKind::rademacher: return "rademacher";
        case InnovationKind::uniform_centered: return "uniform-centered";
    }
    return "unknown";
}

InnovationDistribution::InnovationDistribution(InnovationKind kind, double variance)
    : kind_(kind), variance_(variance), stddev_(std::sqrt(variance)) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw std::invalid_argument("innovation variance must be positive and finite");
    }
}

double standard_normal(RandomStream& stream) {
    if (stream.has_spare_normal_) {
        stream.has_spare_normal_ = false;
        return stream.spare_normal_;
    }
    const double u1 = stream.next_uniform_open0();
    const double u2 = stream.next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    stream.spare_normal_ = radius * std::sin(angle);
    stream.has_spare_normal_ = true;
    return radius * std::cos(angle);
}

double InnovationDistribution::draw(RandomStream& stream) const {
    switch (kind_) {
        case InnovationKind::gaussian:
            return stddev_ * standard_normal(stream);
        case InnovationKind::rademacher:
            return (stream.next_u32() & 1u) ? stddev_ : -stddev_;
        case InnovationKind::uniform_centered:
            // U(-a, a) has variance a^2 / 3.
            return std::sqrt(3.0) * stddev_ * (2.0 * stream.next_uniform() - 1.0);
    }
    return 0.0;
}

std::vector<double> sample(RandomStream& stream, const InnovationDistribution& dist,
                           std::size_t count) {
    std::vector<double> out(count);
    for (auto& x : out) x = dist.draw(stream);
    return out;
}

}  // namespace qlab
