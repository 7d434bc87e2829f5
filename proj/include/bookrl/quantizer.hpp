#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bookrl {

// Per-dimension uniform quantization grid. Implements the mapping from
// continuous states to discrete cluster keys; bounds are part of the
// per-environment configuration and out-of-range observations clamp to
// the edge bins.
struct QuantizerConfig {
    int levels = 128;           // bins per dimension
    std::vector<double> lower;  // per-dimension lower bound, state units
    std::vector<double> upper;  // per-dimension upper bound, state units

    int dims() const { return static_cast<int>(lower.size()); }

    // throws std::invalid_argument on malformed configs
    void validate() const;

    bool operator==(const QuantizerConfig&) const = default;
};

// Integer bin vector identifying a state cluster. Compared and hashed
// by value: two equal bin vectors are the same key.
struct LinguisticState {
    std::vector<int32_t> bins;

    bool operator==(const LinguisticState&) const = default;
};

struct LinguisticStateHash {
    size_t operator()(const LinguisticState& s) const noexcept {
        // FNV-1a over the bin bytes
        uint64_t h = 0xcbf29ce484222325ull;
        for (int32_t b : s.bins) {
            for (int i = 0; i < 4; ++i) {
                h ^= static_cast<uint8_t>(b >> (8 * i));
                h *= 0x100000001b3ull;
            }
        }
        return static_cast<size_t>(h);
    }
};

// Deterministic, total on finite inputs. Out-of-bounds components map
// to the edge bins. Throws std::invalid_argument on dimension mismatch
// or non-finite components.
LinguisticState quantize(const std::vector<double>& state, const QuantizerConfig& cfg);

enum class RewardShaping { tanh10, clip1, identity };

double shape_reward(double r, RewardShaping mode);

RewardShaping reward_shaping_from_string(const std::string& name);
const char* to_string(RewardShaping mode);

}  // namespace bookrl
