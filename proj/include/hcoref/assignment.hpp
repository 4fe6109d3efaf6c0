#pragma once

#include <vector>

namespace hcoref {

/// Maximum-total-score one-to-one assignment between rows and columns of a
/// non-negative score matrix (rows and columns may differ in count; unmatched
/// lines score 0). O(n^3) Hungarian algorithm with potentials.
double max_assignment_score(const std::vector<std::vector<double>>& score);

}  // namespace hcoref
