#pragma once

// Test-only reference computations. Written independently of the library's
// code paths: plain loops, no shared helpers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace raf::oracle {

/// Interval-membership bin lookup: bin b holds [lo + b*w, lo + (b+1)*w), the
/// last bin also holds hi, and a degenerate range puts everything in bin 0.
inline bool in_bin(double x, double lo, double hi, int bins, int b) {
    if (!(hi > lo)) return b == 0;
    const double w = (hi - lo) / bins;
    const double left = lo + b * w;
    const double right = lo + (b + 1) * w;
    if (b == bins - 1) return x >= left || x == hi;
    if (b == 0) return x < right;
    return x >= left && x < right;
}

/// Histogram MI per variable via sum p_ab ln(p_ab / (p_a p_b)), enumerating
/// every 2-D cell by scanning all samples; clamped at zero and averaged.
inline double brute_force_mi(const Eigen::MatrixXd& query, const Eigen::MatrixXd& candidate, int bins) {
    const long n = query.rows();
    double total = 0.0;
    for (long v = 0; v < query.cols(); ++v) {
        const double alo = candidate.col(v).minCoeff(), ahi = candidate.col(v).maxCoeff();
        const double blo = query.col(v).minCoeff(), bhi = query.col(v).maxCoeff();
        std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
        std::vector<std::vector<double>> pab(bins, std::vector<double>(bins, 0.0));
        for (int a = 0; a < bins; ++a) {
            for (int b = 0; b < bins; ++b) {
                long count = 0;
                for (long t = 0; t < n; ++t) {
                    if (in_bin(candidate(t, v), alo, ahi, bins, a) && in_bin(query(t, v), blo, bhi, bins, b)) ++count;
                }
                pab[a][b] = static_cast<double>(count) / n;
                pa[a] += pab[a][b];
                pb[b] += pab[a][b];
            }
        }
        double mi = 0.0;
        for (int a = 0; a < bins; ++a) {
            for (int b = 0; b < bins; ++b) {
                if (pab[a][b] > 0.0) mi += pab[a][b] * std::log(pab[a][b] / (pa[a] * pb[b]));
            }
        }
        total += std::max(0.0, mi);
    }
    return total / query.cols();
}

/// Plug-in entropy of one sequence on its own min-max range.
inline double brute_force_entropy(const Eigen::VectorXd& x, int bins) {
    const double lo = x.minCoeff(), hi = x.maxCoeff();
    double h = 0.0;
    for (int b = 0; b < bins; ++b) {
        long count = 0;
        for (long t = 0; t < x.size(); ++t) count += in_bin(x(t), lo, hi, bins, b);
        if (count > 0) {
            const double p = static_cast<double>(count) / x.size();
            h -= p * std::log(p);
        }
    }
    return h;
}

/// Euclidean distance by explicit summation.
inline double brute_force_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (long i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Per-cell mean by explicit summation.
inline Eigen::MatrixXd brute_force_mean(const std::vector<Eigen::MatrixXd>& ms) {
    Eigen::MatrixXd out(ms.front().rows(), ms.front().cols());
    for (long r = 0; r < out.rows(); ++r) {
        for (long c = 0; c < out.cols(); ++c) {
            double s = 0.0;
            for (const auto& m : ms) s += m(r, c);
            out(r, c) = s / static_cast<double>(ms.size());
        }
    }
    return out;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, long rows, long cols, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) m(r, c) = u(rng);
    }
    return m;
}

}  // namespace raf::oracle
