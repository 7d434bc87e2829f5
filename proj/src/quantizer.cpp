#include "bookrl/quantizer.hpp"

#include <cmath>
#include <stdexcept>

namespace bookrl {

void QuantizerConfig::validate() const {
    if (levels < 1) {
        throw std::invalid_argument("quantizer: levels must be >= 1");
    }
    if (lower.empty() || lower.size() != upper.size()) {
        throw std::invalid_argument("quantizer: lower/upper bound lengths differ or are empty");
    }
    for (size_t i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i])) {
            throw std::invalid_argument("quantizer: lower bound must be strictly below upper bound");
        }
    }
}

LinguisticState quantize(const std::vector<double>& state, const QuantizerConfig& cfg) {
    if (static_cast<int>(state.size()) != cfg.dims()) {
        throw std::invalid_argument("quantize: state dimension does not match quantizer config");
    }
    LinguisticState key;
    key.bins.resize(state.size());
    for (size_t i = 0; i < state.size(); ++i) {
        double x = state[i];
        if (!std::isfinite(x)) {
            throw std::invalid_argument("quantize: non-finite state component");
        }
        double lo = cfg.lower[i];
        double hi = cfg.upper[i];
        if (x < lo) x = lo;
        if (x > hi) x = hi;
        auto bin = static_cast<int32_t>(std::floor((x - lo) / (hi - lo) * cfg.levels));
        if (bin > cfg.levels - 1) bin = cfg.levels - 1;
        if (bin < 0) bin = 0;
        key.bins[i] = bin;
    }
    return key;
}

double shape_reward(double r, RewardShaping mode) {
    if (!std::isfinite(r)) {
        throw std::invalid_argument("shape_reward: non-finite reward");
    }
    switch (mode) {
        case RewardShaping::tanh10:
            return std::tanh(r / 10.0);
        case RewardShaping::clip1:
            return r < -1.0 ? -1.0 : (r > 1.0 ? 1.0 : r);
        case RewardShaping::identity:
            return r;
    }
    throw std::logic_error("shape_reward: unknown mode");
}

RewardShaping reward_shaping_from_string(const std::string& name) {
    if (name == "tanh10") return RewardShaping::tanh10;
    if (name == "clip1") return RewardShaping::clip1;
    if (name == "identity") return RewardShaping::identity;
    throw std::invalid_argument("unknown reward shaping mode: " + name);
}

const char* to_string(RewardShaping mode) {
    switch (mode) {
        case RewardShaping::tanh10: return "tanh10";
        case RewardShaping::clip1: return "clip1";
        case RewardShaping::identity: return "identity";
    }
    return "?";
}

}  // namespace bookrl
