#pragma once

#include <array>

// Per-letter confidence rates (percent) reported for the original
// 26-letter desk model, A through Z.
inline constexpr std::array<double, 26> kReferenceRates{94, 98, 90, 90, 70, 96, 73, 97, 95, 57, 87, 93, 91,
                                                        55, 78, 95, 95, 83, 86, 81, 87, 86, 87, 88, 90, 80};
