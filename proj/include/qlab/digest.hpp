// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace qlab {

/// 64-bit FNV-1a, used for audit digests in reports (not for security).
class Fnv1a {
  public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            hash_ ^= c;
            hash_ *= 0x100000001B3ULL;
        }
    }
    void update(std::span<const double> values) {
        for (double v : values) {
            char buf[sizeof(double)];
            std::memcpy(buf, &v, sizeof(double));
            update(std::string_view(buf, sizeof(double)));
        }
    }
    void update(std::int64_t v) {
        char buf[sizeof(v)];
        std::memcpy(buf, &v, sizeof(v));
        update(std::string_view(buf, sizeof(v)));
    }
    [[nodiscard]] std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_));
        return buf;
    }

  private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

inline std::string digest_of(std::string_view bytes) {
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

}  // namespace qlab
