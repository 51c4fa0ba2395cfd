#pragma once

#include "pbalm/problem.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace pbalm {

/// Unset means unbounded in that direction.
using Bound = std::optional<double>;

struct Triplet {
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double value = 0;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct SparseTriplets {
    Eigen::Index nrows = 0;
    Eigen::Index ncols = 0;
    std::vector<Triplet> entries;

    /// Sums duplicates and sorts entries column-major; drops explicit zeros
    /// produced by cancellation only if `drop_zeros`.
    void finalize(bool drop_zeros = false);
    Eigen::SparseMatrix<double> to_sparse() const;
};

/// Quadratic program
///
///     minimize    1/2 x'Qx + q'x + c
///     subject to  row_lower <= Ax <= row_upper,  var_lower <= x <= var_upper
///
/// Q holds the lower triangle (row >= col) of a symmetric matrix.
struct QpData {
    std::string name;
    Eigen::Index n = 0;
    Eigen::Index m_rows = 0;
    SparseTriplets Q;
    Vector q;
    double c = 0;
    SparseTriplets A;
    std::vector<Bound> row_lower, row_upper;
    std::vector<Bound> var_lower, var_upper;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
};

enum class QpsErrorKind {
    MissingSection,
    UnknownRowSense,
    UndeclaredRowOrColumn,
    DuplicateFixedBoundConflict,
    MalformedNumericField,
    CrossedBounds,
    MixedQuadraticSections,
    UnsupportedRecord,
};

const char* to_string(QpsErrorKind kind);

class QpsError : public std::runtime_error {
public:
    QpsError(QpsErrorKind kind, std::size_t line, const std::string& detail);

    QpsErrorKind kind() const { return kind_; }
    /// 1-based; the line after the last one for errors detected at end of input.
    std::size_t line() const { return line_; }

private:
    QpsErrorKind kind_;
    std::size_t line_;
};

QpData parse_qps(std::istream& in);
QpData parse_qps_string(const std::string& text);
QpData parse_qps_file(const std::string& path);

/// Parses a number, accepting Fortran-style exponents (1.0D+01).
std::optional<double> parse_number(const std::string& token);

struct QpProblemOptions {
    /// Emit l == u rows as equalities h(x) = Ax - b instead of two opposing
    /// inequalities.
    bool eq_as_h = false;
};

/// Problem in the form f1 = 1/2 x'Qx + q'x + c, f2 = box indicator,
/// g = [A_u x - u; l - A_l x] over the rows with finite upper / lower bound.
struct QpProblem {
    Problem problem;
    Vector lower; ///< variable bounds with +-inf for unbounded
    Vector upper;
    /// Row index in QpData for each stacked inequality, with its sign (+1 for
    /// Ax - u, -1 for l - Ax).
    std::vector<std::pair<Eigen::Index, int>> ineq_rows;
    std::vector<Eigen::Index> eq_rows;
};

QpProblem qp_to_problem(const QpData& qp, const QpProblemOptions& opts = {});

} // namespace pbalm
