#pragma once

#include "pbalm/types.hpp"

#include <cmath>

namespace pbalm {

/// Limited-memory inverse Hessian approximation (two-loop recursion) over a
/// ring buffer of (s, y) pairs. Pairs failing the curvature test are skipped.
template <typename Scalar>
class Lbfgs {
public:
    Lbfgs(Eigen::Index n, int memory)
        : s_(n, memory), y_(n, memory), rho_(memory), alpha_(memory)
    {}

    void reset() { count_ = 0; }
    int size() const { return count_; }

    bool update(const VectorX<Scalar>& s, const VectorX<Scalar>& y)
    {
        const Scalar sy = s.dot(y);
        if (!std::isfinite(sy) || sy <= Scalar(1e-12) * s.norm() * y.norm()) return false;
        const int mem = static_cast<int>(s_.cols());
        head_ = (head_ + 1) % mem;
        s_.col(head_) = s;
        y_.col(head_) = y;
        rho_(head_) = Scalar(1) / sy;
        count_ = std::min(count_ + 1, mem);
        return true;
    }

    /// Returns H * q.
    VectorX<Scalar> apply(const VectorX<Scalar>& q_in) const
    {
        VectorX<Scalar> q = q_in;
        if (count_ == 0) return q;
        const int mem = static_cast<int>(s_.cols());
        int idx = head_;
        for (int i = 0; i < count_; ++i) {
            alpha_(idx) = rho_(idx) * s_.col(idx).dot(q);
            q -= alpha_(idx) * y_.col(idx);
            idx = (idx - 1 + mem) % mem;
        }
        const Scalar gamma = Scalar(1) / (rho_(head_) * y_.col(head_).squaredNorm());
        q *= gamma;
        idx = (head_ - count_ + 1 + mem) % mem;
        for (int i = 0; i < count_; ++i) {
            const Scalar beta = rho_(idx) * y_.col(idx).dot(q);
            q += (alpha_(idx) - beta) * s_.col(idx);
            idx = (idx + 1) % mem;
        }
        return q;
    }

private:
    MatrixX<Scalar> s_, y_;
    VectorX<Scalar> rho_;
    mutable VectorX<Scalar> alpha_;
    int head_ = -1;
    int count_ = 0;
};

} // namespace pbalm
