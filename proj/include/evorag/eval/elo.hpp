#pragma once

#include <cmath>

#include "evorag/errors.hpp"

namespace evorag::eval {

inline constexpr double kReferenceRating = 1600.0;

// R = R_ref - 400 * log10(1/w - 1); strictly requires 0 < w < 1.
inline double elo_from_winrate(double w, double r_ref = kReferenceRating) {
    if (!(w > 0.0 && w < 1.0))
        throw DomainError("win rate must lie strictly inside (0, 1)");
    return r_ref - 400.0 * std::log10(1.0 / w - 1.0);
}

// P(i beats j) = 1 / (1 + 10^((R_j - R_i)/400)), evaluated on the
// higher-rated side so that P(i,j) + P(j,i) is exactly 1.
inline double win_probability(double r_i, double r_j) {
    if (r_i == r_j) return 0.5;
    if (r_i < r_j) return 1.0 - win_probability(r_j, r_i);
    return 1.0 / (1.0 + std::pow(10.0, (r_j - r_i) / 400.0));
}

} // namespace evorag::eval
