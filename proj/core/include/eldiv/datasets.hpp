#pragma once

#include <string>
#include <vector>

#include "eldiv/model.hpp"

namespace eldiv {

// Simon Newcomb's 1882 passage-time measurements (66 values, coded units),
// split into three measurement days of 20, 20 and 26 observations.
// Day 1 contains the two famous low outliers (-44 and -2).
const std::vector<double>& newcomb_day(int day);  // day in {1, 2, 3}
std::vector<double> newcomb_all();

// Resolve a --data argument: either an embedded dataset name
// ("newcomb:day1" .. "newcomb:day3", "newcomb:all") or a CSV file path.
Sample resolve_dataset(const std::string& spec, bool header = false);

// Load a numeric CSV file (one observation per row).  Every field must parse
// as a finite double; otherwise ParseError reports the 1-based row and column.
Sample load_csv(const std::string& path, bool header = false);

}  // namespace eldiv
