#pragma once

#include "mmdp/mdp.hpp"

#include <string>
#include <vector>

namespace mmdp {

/// Dense LU solve with a sup-norm residual check and one refinement step.
Mat solve_dense(const Mat& a, const Mat& b, const std::string& context);

Vec solve_sparse(const SpMat& a, const Vec& b, const std::string& context);

/// Lawson-Hanson active set method for min ‖Ax − b‖ subject to x ≥ 0.
Vec nnls(const Mat& a, const Vec& b, int max_iter = 0);

/**
Solve A X = B for a system whose wanted solution is entrywise non-negative.
The unconstrained solution is accepted when its smallest entry is ≥ −1e-10
(tiny negatives are clamped); otherwise the offending columns are recomputed
by NNLS. Throws NumericalFailure if NNLS leaves a residual above 1e-8.
*/
Mat solve_nonnegative(const Mat& a, const Mat& b, const std::string& context, bool* used_nnls = nullptr);

/// Maximum-weight assignment. Returns, per row, the matched column or -1.
/// Every row is matched when rows <= cols, otherwise every column is.
std::vector<int> max_weight_assignment(const Mat& weights);

} // namespace mmdp
