// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace qlab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
/// Maps a 128-bit counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key);

/// Deterministic random stream keyed by (master_seed, path).
///
/// The key is a hash of the seed and the derivation path; the output is the
/// Philox block function applied to an incrementing counter. Two streams with
/// the same (seed, path) produce identical sequences on every platform. A
/// stream is a value: copying it forks the state, and each worker owns its
/// own copy.
class RandomStream {
  public:
    static constexpr std::size_t kMaxPathLength = 8;

    RandomStream(std::uint64_t master_seed, std::vector<std::uint64_t> path);

    /// Stream for path + [index].
    [[nodiscard]] RandomStream child(std::uint64_t index) const;

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double next_uniform();
    /// Uniform on (0, 1]; safe to take the logarithm of.
    double next_uniform_open0();

    [[nodiscard]] std::uint64_t master_seed() const { return seed_; }
    [[nodiscard]] const std::vector<std::uint64_t>& path() const { return path_; }
    /// "seed/a/b/c" form used in reports.
    [[nodiscard]] std::string describe() const;

  private:
    std::uint64_t seed_;
    std::vector<std::uint64_t> path_;
    std::array<std::uint32_t, 2> key_{};
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    unsigned used_ = 4;
    // Box-Muller produces normals in pairs; the spare is part of the state.
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;

    friend double standard_normal(RandomStream& stream);
};

/// Stream derivation; path length must not exceed RandomStream::kMaxPathLength.
RandomStream derive_stream(std::uint64_t master_seed, std::vector<std::uint64_t> path);

enum class InnovationKind { gaussian, rademacher, uniform_centered };

InnovationKind parse_innovation_kind(const std::string& name);
std::string to_string(InnovationKind kind);

/// Centered innovation law with declared variance.
///
/// Gaussian draws use the polar-free Box-Muller transform on two
/// uniforms (the cosine branch first, the sine branch cached). This choice is
/// fixed: changing it changes every downstream stream.
class InnovationDistribution {
  public:
    InnovationDistribution() = default;
    InnovationDistribution(InnovationKind kind, double variance);

    [[nodiscard]] InnovationKind kind() const { return kind_; }
    [[nodiscard]] double variance() const { return variance_; }
    [[nodiscard]] double stddev() const { return stddev_; }

    double draw(RandomStream& stream) const;

    bool operator==(const InnovationDistribution&) const = default;

  private:
    InnovationKind kind_ = InnovationKind::gaussian;
    double variance_ = 1.0;
    double stddev_ = 1.0;
};

double standard_normal(RandomStream& stream);

/// count iid draws; advances the stream.
std::vector<double> sample(RandomStream& stream, const InnovationDistribution& dist,
                           std::size_t count);

}  // namespace qlab
