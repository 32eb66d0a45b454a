#include "absorb/reference_tables.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace absorb {

namespace {

constexpr std::array<QuantileRow, 100> kOverall{{
    {1, 0.02, 0.02, 0.02},
    {2, 0.02, 0.02, 0.02},
    {3, 0.02, 0.02, 0.02},
    {4, 0.03, 0.03, 0.02},
    {5, 0.03, 0.03, 0.03},
    {6, 0.03, 0.03, 0.03},
    {7, 0.03, 0.04, 0.03},
    {8, 0.03, 0.04, 0.03},
    {9, 0.04, 0.04, 0.03},
    {10, 0.04, 0.04, 0.03},
    {11, 0.04, 0.04, 0.04},
    {12, 0.04, 0.04, 0.04},
    {13, 0.04, 0.05, 0.04},
    {14, 0.04, 0.05, 0.04},
    {15, 0.05, 0.05, 0.04},
    {16, 0.05, 0.05, 0.04},
    {17, 0.05, 0.05, 0.05},
    {18, 0.05, 0.05, 0.05},
    {19, 0.05, 0.05, 0.05},
    {20, 0.05, 0.05, 0.05},
    {21, 0.06, 0.05, 0.05},
    {22, 0.06, 0.05, 0.05},
    {23, 0.06, 0.06, 0.05},
    {24, 0.06, 0.06, 0.05},
    {25, 0.06, 0.06, 0.05},
    {26, 0.06, 0.06, 0.06},
    {27, 0.06, 0.06, 0.06},
    {28, 0.06, 0.06, 0.06},
    {29, 0.07, 0.07, 0.06},
    {30, 0.07, 0.07, 0.06},
    {31, 0.07, 0.07, 0.06},
    {32, 0.07, 0.07, 0.07},
    {33, 0.07, 0.07, 0.07},
    {34, 0.07, 0.07, 0.07},
    {35, 0.07, 0.08, 0.07},
    {36, 0.08, 0.08, 0.07},
    {37, 0.08, 0.08, 0.07},
    {38, 0.08, 0.08, 0.07},
    {39, 0.08, 0.08, 0.08},
    {40, 0.08, 0.09, 0.08},
    {41, 0.08, 0.09, 0.08},
    {42, 0.09, 0.09, 0.08},
    {43, 0.09, 0.09, 0.08},
    {44, 0.09, 0.09, 0.08},
    {45, 0.09, 0.09, 0.09},
    {46, 0.09, 0.09, 0.09},
    {47, 0.10, 0.10, 0.09},
    {48, 0.10, 0.10, 0.09},
    {49, 0.10, 0.10, 0.09},
    {50, 0.10, 0.10, 0.09},
    {51, 0.10, 0.11, 0.10},
    {52, 0.11, 0.11, 0.10},
    {53, 0.11, 0.11, 0.10},
    {54, 0.11, 0.11, 0.10},
    {55, 0.11, 0.11, 0.10},
    {56, 0.11, 0.12, 0.10},
    {57, 0.11, 0.12, 0.11},
    {58, 0.12, 0.12, 0.11},
    {59, 0.12, 0.12, 0.11},
    {60, 0.12, 0.12, 0.11},
    {61, 0.12, 0.13, 0.11},
    {62, 0.12, 0.13, 0.11},
    {63, 0.13, 0.13, 0.12},
    {64, 0.13, 0.13, 0.12},
    {65, 0.13, 0.13, 0.12},
    {66, 0.13, 0.14, 0.12},
    {67, 0.14, 0.14, 0.13},
    {68, 0.14, 0.14, 0.13},
    {69, 0.14, 0.15, 0.13},
    {70, 0.15, 0.15, 0.13},
    {71, 0.15, 0.15, 0.14},
    {72, 0.15, 0.16, 0.14},
    {73, 0.16, 0.16, 0.14},
    {74, 0.16, 0.17, 0.15},
    {75, 0.17, 0.17, 0.15},
    {76, 0.17, 0.17, 0.15},
    {77, 0.18, 0.18, 0.16},
    {78, 0.19, 0.18, 0.16},
    {79, 0.20, 0.19, 0.17},
    {80, 0.20, 0.19, 0.17},
    {81, 0.21, 0.20, 0.18},
    {82, 0.22, 0.21, 0.18},
    {83, 0.22, 0.22, 0.19},
    {84, 0.23, 0.23, 0.19},
    {85, 0.23, 0.24, 0.20},
    {86, 0.24, 0.25, 0.21},
    {87, 0.25, 0.26, 0.21},
    {88, 0.27, 0.27, 0.23},
    {89, 0.28, 0.28, 0.23},
    {90, 0.29, 0.29, 0.24},
    {91, 0.31, 0.30, 0.24},
    {92, 0.32, 0.32, 0.26},
    {93, 0.34, 0.33, 0.27},
    {94, 0.37, 0.35, 0.29},
    {95, 0.41, 0.37, 0.30},
    {96, 0.45, 0.38, 0.33},
    {97, 0.53, 0.42, 0.36},
    {98, 0.66, 0.47, 0.42},
    {99, 0.76, 0.53, 0.46},
    {100, 0.99, 0.81, 0.72},
}};
constexpr std::array<QuantileRow, 9> kAboveTenth{{
    {10, 0.11, 0.11, 0.11},
    {20, 0.12, 0.12, 0.11},
    {30, 0.13, 0.13, 0.13},
    {40, 0.15, 0.15, 0.14},
    {50, 0.17, 0.17, 0.16},
    {60, 0.20, 0.19, 0.18},
    {70, 0.23, 0.23, 0.21},
    {80, 0.29, 0.29, 0.24},
    {90, 0.41, 0.36, 0.31},
}};

long cents(double v) { return std::lround(v * 100.0); }

}  // namespace

std::span<const QuantileRow> overall_d_quantiles() { return kOverall; }

std::span<const QuantileRow> d_quantiles_above_tenth() { return kAboveTenth; }

int reference_percentile(DTarget which, double d) {
  if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("D must lie in [0, 1]");
  // (value in cents, centre of its run of levels), increasing in both.
  std::vector<std::pair<long, double>> anchors{{0, 0.0}};
  for (std::size_t i = 0; i < kOverall.size();) {
    const long v = cents(kOverall[i].value(which));
    std::size_t j = i;
    while (j + 1 < kOverall.size() && cents(kOverall[j + 1].value(which)) == v) ++j;
    const double centre = 0.5 * (kOverall[i].level + kOverall[j].level + 1);
    if (v == anchors.back().first) {
      anchors.back().second = centre;
    } else {
      anchors.emplace_back(v, centre);
    }
    i = j + 1;
  }
  const long target = cents(d);
  double pct = 100.0;
  for (std::size_t k = 1; k < anchors.size(); ++k) {
    if (target <= anchors[k].first) {
      const auto [v0, p0] = anchors[k - 1];
      const auto [v1, p1] = anchors[k];
      pct = p0 + (p1 - p0) * static_cast<double>(target - v0) / static_cast<double>(v1 - v0);
      break;
    }
  }
  return static_cast<int>(std::min(100.0, std::floor(pct + 0.5)));
}

}  // namespace absorb
