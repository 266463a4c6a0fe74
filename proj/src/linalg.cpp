#include "mmdp/linalg.hpp"

#include "mmdp/error.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

namespace mmdp {

namespace {

constexpr double kResidualTol = 1e-10;

/// Normwise backward-error bound tol·(‖A‖‖x‖ + ‖b‖), floored at tol.
template <class A, class X, class B>
double residual_tol(const A& a, const X& x, const B& b) {
    double an = 0.0;
    if constexpr (std::is_same_v<A, SpMat>) {
        Vec rows = Vec::Zero(a.rows());
        for (int k = 0; k < a.outerSize(); ++k)
            for (SpMat::InnerIterator it(a, k); it; ++it) rows(it.row()) += std::abs(it.value());
        an = rows.maxCoeff();
    } else {
        an = a.cwiseAbs().rowwise().sum().maxCoeff();
    }
    return kResidualTol * std::max(1.0, an * x.template lpNorm<Eigen::Infinity>() + b.template lpNorm<Eigen::Infinity>());
}

} // namespace

Mat solve_dense(const Mat& a, const Mat& b, const std::string& context) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) throw InvalidInput(context + ": dimension mismatch");
    if (a.rows() == 0) return Mat(0, b.cols());
    Eigen::PartialPivLU<Mat> lu(a);
    double rcond = lu.rcond();
    if (!(rcond > 1e-15))
        throw NumericalFailure(context + ": singular system (reciprocal condition estimate " + std::to_string(rcond) +
                               ")");
    Mat x = lu.solve(b);
    Mat res = a * x - b;
    double tol = residual_tol(a, x, b);
    if (res.lpNorm<Eigen::Infinity>() > tol) {
        x -= lu.solve(res);
        res = a * x - b;
        if (res.lpNorm<Eigen::Infinity>() > tol)
            throw NumericalFailure(context + ": residual " + std::to_string(res.lpNorm<Eigen::Infinity>()) +
                                   " after refinement (reciprocal condition estimate " + std::to_string(rcond) + ")");
    }
    return x;
}

Vec solve_sparse(const SpMat& a, const Vec& b, const std::string& context) {
    if (a.rows() != a.cols() || a.rows() != b.size()) throw InvalidInput(context + ": dimension mismatch");
    if (a.rows() == 0) return Vec(0);
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw NumericalFailure(context + ": sparse factorization failed (singular?)");
    Vec x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalFailure(context + ": sparse solve failed");
    Vec res = a * x - b;
    double tol = residual_tol(a, x, b);
    if (res.lpNorm<Eigen::Infinity>() > tol) {
        x -= lu.solve(res);
        res = a * x - b;
        if (res.lpNorm<Eigen::Infinity>() > tol)
            throw NumericalFailure(context + ": residual " + std::to_string(res.lpNorm<Eigen::Infinity>()) +
                                   " after refinement");
    }
    return x;
}

Vec nnls(const Mat& a, const Vec& b, int max_iter) {
    const long n = a.cols();
    if (a.rows() != b.size()) throw InvalidInput("nnls: dimension mismatch");
    if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
    Vec x = Vec::Zero(n);
    std::vector<bool> passive(n, false);
    const double tol = 1e-12 * std::max(1.0, (a.transpose() * b).lpNorm<Eigen::Infinity>());

    auto solve_passive = [&](Vec& z) {
        std::vector<long> idx;
        for (long j = 0; j < n; ++j)
            if (passive[j]) idx.push_back(j);
        Mat ap(a.rows(), static_cast<long>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<long>(k)) = a.col(idx[k]);
        Vec zp = ap.colPivHouseholderQr().solve(b);
        z = Vec::Zero(n);
        for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<long>(k));
    };

    for (int outer = 0; outer < max_iter; ++outer) {
        Vec w = a.transpose() * (b - a * x);
        long best = -1;
        double wmax = tol;
        for (long j = 0; j < n; ++j)
            if (!passive[j] && w(j) > wmax) {
                wmax = w(j);
                best = j;
            }
        if (best < 0) break;
        passive[best] = true;
        for (int inner = 0; inner < max_iter; ++inner) {
            Vec z;
            solve_passive(z);
            bool feasible = true;
            for (long j = 0; j < n; ++j)
                if (passive[j] && z(j) <= 0.0) feasible = false;
            if (feasible) {
                x = z;
                break;
            }
            double alpha = std::numeric_limits<double>::infinity();
            for (long j = 0; j < n; ++j)
                if (passive[j] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            x += alpha * (z - x);
            for (long j = 0; j < n; ++j)
                if (passive[j] && std::abs(x(j)) < 1e-15) {
                    passive[j] = false;
                    x(j) = 0.0;
                }
        }
    }
    return x;
}

Mat solve_nonnegative(const Mat& a, const Mat& b, const std::string& context, bool* used_nnls) {
    Mat x = solve_dense(a, b, context);
    bool fallback = false;
    for (long c = 0; c < x.cols(); ++c) {
        if (x.rows() == 0) break;
        if (x.col(c).minCoeff() >= -1e-10) {
            x.col(c) = x.col(c).cwiseMax(0.0);
            continue;
        }
        fallback = true;
        Vec y = nnls(a, b.col(c));
        double res = (a * y - b.col(c)).lpNorm<Eigen::Infinity>();
        if (res > 1e-8 * std::max(1.0, b.col(c).lpNorm<Eigen::Infinity>()))
            throw NumericalFailure(context + ": no non-negative solution (NNLS residual " + std::to_string(res) + ")");
        x.col(c) = y;
    }
    if (used_nnls) *used_nnls = fallback;
    return x;
}

std::vector<int> max_weight_assignment(const Mat& weights) {
    const long rows = weights.rows();
    const long cols = weights.cols();
    if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
    bool transposed = rows > cols;
    Mat w = transposed ? Mat(weights.transpose()) : weights;
    const long n = w.rows();
    const long m = w.cols();
    const double top = w.maxCoeff();
    // Hungarian method (potentials form) on costs top - w, rows <= cols.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<long> p(m + 1, 0), way(m + 1, 0);
    std::vector<bool> used(m + 1);
    for (long i = 1; i <= n; ++i) {
        p[0] = i;
        long j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), false);
        do {
            used[j0] = true;
            long i0 = p[j0], j1 = 0;
            double delta = inf;
            for (long j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = (top - w(i0 - 1, j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (long j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            long j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> out(rows, -1);
    for (long j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        if (transposed)
            out[j - 1] = static_cast<int>(p[j] - 1);
        else
            out[p[j] - 1] = static_cast<int>(j - 1);
    }
    return out;
}

} // namespace mmdp
