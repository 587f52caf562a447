#include "invlp/datagen.hpp"

// Production planning data: nominal conversion factors (process, material, mu), demands and
// initial stocks of the 38-process, 28-material network.

namespace invlp {

const std::vector<ConversionEntry>& conversion_table() {
  static const std::vector<ConversionEntry> table = {
    {1, 1, -0.58},
    {1, 6, -0.63},
    {1, 11, 1},
    {2, 6, -0.64},
    {2, 12, 1},
    {3, 1, -0.055},
    {3, 2, -1.25},
    {3, 11, 1},
    {4, 2, -0.4},
    {4, 3, -0.69},
    {4, 14, 1},
    {5, 13, 1},
    {5, 14, -2.3},
    {5, 17, 1.7},
    {6, 2, -0.74},
    {6, 15, 1},
    {7, 13, 1},
    {7, 15, -1.1},
    {8, 3, -1},
    {8, 16, 1},
    {9, 16, -1.26},
    {9, 17, 1},
    {10, 13, -1.57},
    {10, 27, 1},
    {11, 3, -1.01},
    {11, 17, 1},
    {12, 3, -0.76},
    {12, 4, -0.28},
    {12, 8, 1},
    {13, 8, -1.14},
    {13, 18, 1},
    {14, 2, -0.78},
    {14, 13, 1},
    {15, 12, 1},
    {15, 19, -1.34},
    {16, 4, -0.6},
    {16, 19, 1},
    {17, 4, -0.67},
    {17, 12, 1},
    {18, 12, -1.1},
    {18, 20, 1},
    {19, 19, -0.98},
    {19, 20, 1},
    {20, 4, -0.35},
    {20, 20, -0.71},
    {20, 21, 1},
    {21, 6, -0.32},
    {21, 20, -0.72},
    {21, 21, 1},
    {22, 4, -0.88},
    {22, 5, 1},
    {22, 24, 0.03},
    {23, 1, -0.56},
    {23, 5, -0.92},
    {23, 11, 1},
    {24, 4, -0.39},
    {24, 28, 1},
    {25, 5, 1},
    {25, 28, 1},
    {26, 4, -0.3},
    {26, 26, 1},
    {27, 20, -0.65},
    {27, 22, 1},
    {27, 27, -0.46},
    {28, 7, -0.56},
    {28, 10, -0.56},
    {28, 20, 1},
    {29, 12, -1.2},
    {29, 22, 1},
    {30, 4, -1.17},
    {30, 25, 1},
    {31, 5, -0.75},
    {31, 24, 1},
    {32, 4, -0.53},
    {32, 24, 1},
    {33, 12, -0.6},
    {33, 20, -0.82},
    {33, 21, 1},
    {34, 10, -0.42},
    {34, 25, 1},
    {35, 9, -0.5},
    {35, 10, 1},
    {36, 7, -0.53},
    {36, 24, 1},
    {36, 25, -0.57},
    {37, 24, 1},
    {37, 28, -1.44},
    {38, 2, 0.38},
    {38, 3, 0.22},
    {38, 4, 1},
    {38, 9, -3.08},
    {38, 26, 1.81},
  };
  return table;
}

namespace {
// materials 10..25
constexpr double kDemand[16] = {40, 150, 30, 75, 60, 30, 30, 50, 150, 70, 30, 75, 100, 75, 250, 50};
constexpr double kStock[16] = {10, 5, 0, 5, 5, 7, 10, 2, 3, 5, 10, 7, 5, 5, 3, 3};
}  // namespace

double nominal_demand(int material) {
  return material >= 10 && material <= 25 ? kDemand[material - 10] : 0.0;
}

double initial_stock(int material) {
  return material >= 10 && material <= 25 ? kStock[material - 10] : 0.0;
}

}  // namespace invlp
