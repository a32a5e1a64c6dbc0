#pragma once

#include <vector>

namespace oprisk {

// One year of losses: individual event amounts in base UM and their sum.
struct AnnualLossRecord {
  int year_index = 0;
  std::vector<double> events;
  double total = 0.0;

  static AnnualLossRecord from_events(int year_index, std::vector<double> events);
};

}  // namespace oprisk
