#include "pbalm/qps.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <unordered_map>

namespace pbalm {

const char* to_string(QpsErrorKind kind)
{
    switch (kind) {
    case QpsErrorKind::MissingSection: return "MissingSection";
    case QpsErrorKind::UnknownRowSense: return "UnknownRowSense";
    case QpsErrorKind::UndeclaredRowOrColumn: return "UndeclaredRowOrColumn";
    case QpsErrorKind::DuplicateFixedBoundConflict: return "DuplicateFixedBoundConflict";
    case QpsErrorKind::MalformedNumericField: return "MalformedNumericField";
    case QpsErrorKind::CrossedBounds: return "CrossedBounds";
    case QpsErrorKind::MixedQuadraticSections: return "MixedQuadraticSections";
    case QpsErrorKind::UnsupportedRecord: return "UnsupportedRecord";
    }
    return "?";
}

QpsError::QpsError(QpsErrorKind kind, std::size_t line, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) + ": " + to_string(kind) + ": " + detail),
      kind_(kind), line_(line)
{}

void SparseTriplets::finalize(bool drop_zeros)
{
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.col, a.row) < std::tie(b.col, b.row);
    });
    std::vector<Triplet> merged;
    merged.reserve(entries.size());
    for (const Triplet& t : entries) {
        if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
            merged.back().value += t.value;
        else
            merged.push_back(t);
    }
    if (drop_zeros)
        std::erase_if(merged, [](const Triplet& t) { return t.value == 0.0; });
    entries = std::move(merged);
}

Eigen::SparseMatrix<double> SparseTriplets::to_sparse() const
{
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(entries.size());
    for (const Triplet& t : entries) trips.emplace_back(t.row, t.col, t.value);
    Eigen::SparseMatrix<double> M(nrows, ncols);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

std::optional<double> parse_number(const std::string& token)
{
    std::string s = token;
    for (char& ch : s)
        if (ch == 'D' || ch == 'd') ch = 'E';
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    double value = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || s.empty() || !std::isfinite(value)) return std::nullopt;
    return value;
}

namespace {

constexpr double kMpsInfinity = 1e30;

enum class Section { None, Name, Rows, Columns, Rhs, Ranges, Bounds, QuadObj, QMatrix, End };

std::string upper(std::string s)
{
    for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

enum class Sense { N, E, L, G };

struct RowInfo {
    Sense sense = Sense::N;
    double rhs = 0;
    std::optional<double> range;
    std::size_t line = 0;
};

class Parser {
public:
    QpData parse(std::istream& in)
    {
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_;
            if (!raw.empty() && raw.back() == '\r') raw.pop_back();
            const auto first = raw.find_first_not_of(" \t");
            if (first == std::string::npos || raw[first] == '*') continue;
            if (first == 0) {
                header(raw);
                if (section_ == Section::End) break;
            } else {
                data(split(raw));
            }
        }
        if (section_ != Section::End)
            throw QpsError(QpsErrorKind::MissingSection, line_ + 1, "missing ENDATA (truncated file?)");
        if (!seen_name_) throw QpsError(QpsErrorKind::MissingSection, line_, "missing NAME");
        if (!seen_rows_) throw QpsError(QpsErrorKind::MissingSection, line_, "missing ROWS");
        if (!seen_columns_) throw QpsError(QpsErrorKind::MissingSection, line_, "missing COLUMNS");
        return finish();
    }

private:
    void header(const std::string& raw)
    {
        const auto toks = split(raw);
        const std::string key = upper(toks.front());
        if (key == "NAME") {
            seen_name_ = true;
            qp_.name = toks.size() > 1 ? toks[1] : "";
            section_ = Section::Name;
            return;
        }
        if (!seen_name_) throw QpsError(QpsErrorKind::MissingSection, line_, "expected NAME before " + key);
        if (key == "ROWS") {
            seen_rows_ = true;
            section_ = Section::Rows;
        } else if (key == "COLUMNS") {
            if (!seen_rows_) throw QpsError(QpsErrorKind::MissingSection, line_, "COLUMNS before ROWS");
            seen_columns_ = true;
            section_ = Section::Columns;
        } else if (key == "RHS") {
            section_ = Section::Rhs;
        } else if (key == "RANGES") {
            section_ = Section::Ranges;
        } else if (key == "BOUNDS") {
            section_ = Section::Bounds;
        } else if (key == "QUADOBJ" || key == "QMATRIX") {
            const bool quadobj = key == "QUADOBJ";
            if ((quadobj && seen_qmatrix_) || (!quadobj && seen_quadobj_))
                throw QpsError(QpsErrorKind::MixedQuadraticSections, line_,
                               "QUADOBJ and QMATRIX in the same file");
            (quadobj ? seen_quadobj_ : seen_qmatrix_) = true;
            section_ = quadobj ? Section::QuadObj : Section::QMatrix;
        } else if (key == "ENDATA") {
            section_ = Section::End;
        } else {
            throw QpsError(QpsErrorKind::UnsupportedRecord, line_, "unsupported section " + key);
        }
        if (section_ != Section::Rows && section_ != Section::End && section_ != Section::Name &&
            !seen_columns_)
            throw QpsError(QpsErrorKind::MissingSection, line_, key + " before COLUMNS");
    }

    double number(const std::string& tok)
    {
        const auto v = parse_number(tok);
        if (!v) throw QpsError(QpsErrorKind::MalformedNumericField, line_, "bad number '" + tok + "'");
        return *v;
    }

    Eigen::Index row_index(const std::string& name)
    {
        const auto it = rows_.find(name);
        if (it == rows_.end())
            throw QpsError(QpsErrorKind::UndeclaredRowOrColumn, line_, "undeclared row '" + name + "'");
        return it->second;
    }

    Eigen::Index col_index(const std::string& name)
    {
        const auto it = cols_.find(name);
        if (it == cols_.end())
            throw QpsError(QpsErrorKind::UndeclaredRowOrColumn, line_, "undeclared column '" + name + "'");
        return it->second;
    }

    void malformed(const std::string& what)
    {
        throw QpsError(QpsErrorKind::UnsupportedRecord, line_, "malformed " + what + " record");
    }

    void data(const std::vector<std::string>& t)
    {
        switch (section_) {
        case Section::None:
        case Section::Name:
            throw QpsError(QpsErrorKind::MissingSection, line_, "data outside of a section");
        case Section::Rows: rows_record(t); break;
        case Section::Columns: columns_record(t); break;
        case Section::Rhs: rhs_record(t, false); break;
        case Section::Ranges: rhs_record(t, true); break;
        case Section::Bounds: bounds_record(t); break;
        case Section::QuadObj:
        case Section::QMatrix: quad_record(t); break;
        case Section::End: break;
        }
    }

    void rows_record(const std::vector<std::string>& t)
    {
        if (t.size() != 2) malformed("ROWS");
        const std::string s = upper(t[0]);
        Sense sense;
        if (s == "N") sense = Sense::N;
        else if (s == "E") sense = Sense::E;
        else if (s == "L") sense = Sense::L;
        else if (s == "G") sense = Sense::G;
        else throw QpsError(QpsErrorKind::UnknownRowSense, line_, "unknown row sense '" + t[0] + "'");

        if (rows_.count(t[1]) || t[1] == objective_)
            throw QpsError(QpsErrorKind::UnsupportedRecord, line_, "duplicate row '" + t[1] + "'");
        if (sense == Sense::N && objective_.empty()) {
            objective_ = t[1];
            return;
        }
        rows_.emplace(t[1], static_cast<Eigen::Index>(info_.size()));
        info_.push_back(RowInfo{sense, 0.0, std::nullopt, line_});
        qp_.row_names.push_back(t[1]);
    }

    void columns_record(const std::vector<std::string>& t)
    {
        for (const auto& tok : t)
            if (upper(tok).find("MARKER") != std::string::npos)
                throw QpsError(QpsErrorKind::UnsupportedRecord, line_, "integer markers are not supported");
        if (t.size() != 3 && t.size() != 5) malformed("COLUMNS");
        auto [it, inserted] = cols_.emplace(t[0], static_cast<Eigen::Index>(qp_.col_names.size()));
        if (inserted) {
            qp_.col_names.push_back(t[0]);
            q_.push_back(0.0);
        }
        const Eigen::Index col = it->second;
        for (std::size_t i = 1; i + 1 < t.size(); i += 2) {
            const double v = number(t[i + 1]);
            if (t[i] == objective_) {
                q_[col] += v;
            } else {
                qp_.A.entries.push_back({row_index(t[i]), col, v});
            }
        }
    }

    void rhs_record(const std::vector<std::string>& t, bool ranges)
    {
        if (t.size() < 2 || t.size() > 5) malformed(ranges ? "RANGES" : "RHS");
        const std::size_t start = t.size() % 2 == 0 ? 0 : 1; // optional set name
        for (std::size_t i = start; i + 1 < t.size(); i += 2) {
            const double v = number(t[i + 1]);
            if (t[i] == objective_) {
                if (ranges) throw QpsError(QpsErrorKind::UnsupportedRecord, line_, "range on objective row");
                qp_.c = -v;
                continue;
            }
            RowInfo& r = info_[static_cast<std::size_t>(row_index(t[i]))];
            if (ranges)
                r.range = v;
            else
                r.rhs = v;
            r.line = line_;
        }
    }

    void bounds_record(const std::vector<std::string>& t)
    {
        if (t.empty()) malformed("BOUNDS");
        const std::string type = upper(t[0]);
        const bool valueless = type == "FR" || type == "MI" || type == "PL";
        const bool valued = type == "UP" || type == "LO" || type == "FX";
        if (!valueless && !valued)
            throw QpsError(QpsErrorKind::UnsupportedRecord, line_, "unsupported bound type '" + t[0] + "'");
        std::string col_name;
        double v = 0;
        if (valueless) {
            if (t.size() != 2 && t.size() != 3) malformed("BOUNDS");
            col_name = t.back();
        } else {
            if (t.size() != 3 && t.size() != 4) malformed("BOUNDS");
            col_name = t[t.size() - 2];
            v = number(t.back());
        }
        const auto j = static_cast<std::size_t>(col_index(col_name));
        ensure_bounds();
        bound_line_[j] = line_;

        auto conflict = [&](double lo, double up) {
            if (!fixed_[j]) return;
            const bool same = lower_[j] == Bound(lo) && upper_[j] == Bound(up);
            if (!same)
                throw QpsError(QpsErrorKind::DuplicateFixedBoundConflict, line_,
                               "conflicting bound on fixed column '" + col_name + "'");
        };

        if (type == "FX") {
            conflict(v, v);
            lower_[j] = v;
            upper_[j] = v;
            fixed_[j] = true;
        } else if (type == "UP") {
            conflict(lower_[j].value_or(-kMpsInfinity), v);
            if (v >= kMpsInfinity) {
                upper_[j].reset();
            } else {
                upper_[j] = v;
                // Classical MPS: a negative upper bound with the default lower bound makes it -inf.
                if (v < 0 && !lower_set_[j]) lower_[j].reset();
            }
        } else if (type == "LO") {
            conflict(v, upper_[j].value_or(kMpsInfinity));
            if (v <= -kMpsInfinity)
                lower_[j].reset();
            else
                lower_[j] = v;
            lower_set_[j] = true;
        } else if (type == "FR") {
            if (fixed_[j])
                throw QpsError(QpsErrorKind::DuplicateFixedBoundConflict, line_,
                               "FR on fixed column '" + col_name + "'");
            lower_[j].reset();
            upper_[j].reset();
            lower_set_[j] = true;
        } else if (type == "MI") {
            if (fixed_[j])
                throw QpsError(QpsErrorKind::DuplicateFixedBoundConflict, line_,
                               "MI on fixed column '" + col_name + "'");
            lower_[j].reset();
            lower_set_[j] = true;
        } else { // PL
            if (fixed_[j])
                throw QpsError(QpsErrorKind::DuplicateFixedBoundConflict, line_,
                               "PL on fixed column '" + col_name + "'");
            upper_[j].reset();
        }
    }

    void quad_record(const std::vector<std::string>& t)
    {
        if (t.size() != 3) malformed(section_ == Section::QuadObj ? "QUADOBJ" : "QMATRIX");
        const Eigen::Index i = col_index(t[0]);
        const Eigen::Index j = col_index(t[1]);
        double v = number(t[2]);
        // QUADOBJ lists each off-diagonal pair once; QMATRIX lists both halves.
        if (section_ == Section::QMatrix && i != j) v *= 0.5;
        qp_.Q.entries.push_back({std::max(i, j), std::min(i, j), v});
    }

    void ensure_bounds()
    {
        const std::size_t n = qp_.col_names.size();
        if (lower_.size() == n) return;
        lower_.resize(n, Bound(0.0));
        upper_.resize(n, Bound());
        lower_set_.resize(n, false);
        fixed_.resize(n, false);
        bound_line_.resize(n, 0);
    }

    QpData finish()
    {
        ensure_bounds();
        const auto n = static_cast<Eigen::Index>(qp_.col_names.size());
        const auto m = static_cast<Eigen::Index>(info_.size());
        qp_.n = n;
        qp_.m_rows = m;
        qp_.q = Eigen::Map<const Vector>(q_.data(), n);
        qp_.Q.nrows = qp_.Q.ncols = n;
        qp_.A.nrows = m;
        qp_.A.ncols = n;
        qp_.Q.finalize();
        qp_.A.finalize();

        qp_.row_lower.assign(static_cast<std::size_t>(m), Bound());
        qp_.row_upper.assign(static_cast<std::size_t>(m), Bound());
        for (std::size_t i = 0; i < info_.size(); ++i) {
            const RowInfo& r = info_[i];
            Bound lo, up;
            switch (r.sense) {
            case Sense::N: break;
            case Sense::E:
                lo = up = r.rhs;
                if (r.range) {
                    if (*r.range > 0) up = r.rhs + *r.range;
                    else lo = r.rhs + *r.range;
                }
                break;
            case Sense::L:
                up = r.rhs;
                if (r.range) lo = r.rhs - std::abs(*r.range);
                break;
            case Sense::G:
                lo = r.rhs;
                if (r.range) up = r.rhs + std::abs(*r.range);
                break;
            }
            if (lo && *lo <= -kMpsInfinity) lo.reset();
            if (up && *up >= kMpsInfinity) up.reset();
            if (lo && up && *lo > *up)
                throw QpsError(QpsErrorKind::CrossedBounds, r.line, "crossed bounds on row '" + qp_.row_names[i] + "'");
            qp_.row_lower[i] = lo;
            qp_.row_upper[i] = up;
        }
        for (std::size_t j = 0; j < lower_.size(); ++j) {
            if (lower_[j] && upper_[j] && *lower_[j] > *upper_[j])
                throw QpsError(QpsErrorKind::CrossedBounds, bound_line_[j],
                               "crossed bounds on column '" + qp_.col_names[j] + "'");
        }
        qp_.var_lower = lower_;
        qp_.var_upper = upper_;
        return std::move(qp_);
    }

    QpData qp_;
    std::size_t line_ = 0;
    Section section_ = Section::None;
    bool seen_name_ = false, seen_rows_ = false, seen_columns_ = false;
    bool seen_quadobj_ = false, seen_qmatrix_ = false;
    std::string objective_;
    std::unordered_map<std::string, Eigen::Index> rows_;
    std::unordered_map<std::string, Eigen::Index> cols_;
    std::vector<RowInfo> info_;
    std::vector<double> q_;
    std::vector<Bound> lower_, upper_;
    std::vector<bool> lower_set_, fixed_;
    std::vector<std::size_t> bound_line_;
};

} // namespace

QpData parse_qps(std::istream& in)
{
    return Parser{}.parse(in);
}

QpData parse_qps_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_qps(in);
}

QpData parse_qps_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return parse_qps(in);
}

namespace {

struct QpMaps {
    Eigen::SparseMatrix<double> Q;  // full symmetric
    Vector q;
    double c = 0;
    Eigen::SparseMatrix<double> G;  // stacked inequality rows
    Vector g_offset;                // g(x) = G x - g_offset
    Eigen::SparseMatrix<double> H;  // equality rows
    Vector h_offset;
};

} // namespace

QpProblem qp_to_problem(const QpData& qp, const QpProblemOptions& opts)
{
    const Eigen::Index n = qp.n;
    auto maps = std::make_shared<QpMaps>();

    {
        const Eigen::SparseMatrix<double> lower = qp.Q.to_sparse();
        Eigen::SparseMatrix<double> strict = lower.triangularView<Eigen::StrictlyLower>();
        maps->Q = lower + Eigen::SparseMatrix<double>(strict.transpose());
    }
    maps->q = qp.q;
    maps->c = qp.c;

    QpProblem out;
    std::vector<std::pair<Eigen::Index, int>> upper_rows, lower_rows;
    for (Eigen::Index i = 0; i < qp.m_rows; ++i) {
        const auto& lo = qp.row_lower[static_cast<std::size_t>(i)];
        const auto& up = qp.row_upper[static_cast<std::size_t>(i)];
        if (opts.eq_as_h && lo && up && *lo == *up) {
            out.eq_rows.push_back(i);
            continue;
        }
        if (up) upper_rows.emplace_back(i, +1);
        if (lo) lower_rows.emplace_back(i, -1);
    }
    out.ineq_rows = upper_rows;
    out.ineq_rows.insert(out.ineq_rows.end(), lower_rows.begin(), lower_rows.end());

    const Eigen::SparseMatrix<double, Eigen::RowMajor> A = qp.A.to_sparse();
    {
        const auto m = static_cast<Eigen::Index>(out.ineq_rows.size());
        std::vector<Eigen::Triplet<double>> trips;
        maps->g_offset.resize(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const auto [row, sign] = out.ineq_rows[static_cast<std::size_t>(r)];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, row); it; ++it)
                trips.emplace_back(r, it.col(), sign * it.value());
            const std::size_t idx = static_cast<std::size_t>(row);
            maps->g_offset(r) = sign > 0 ? *qp.row_upper[idx] : -*qp.row_lower[idx];
        }
        maps->G.resize(m, n);
        maps->G.setFromTriplets(trips.begin(), trips.end());
    }
    {
        const auto p = static_cast<Eigen::Index>(out.eq_rows.size());
        std::vector<Eigen::Triplet<double>> trips;
        maps->h_offset.resize(p);
        for (Eigen::Index r = 0; r < p; ++r) {
            const Eigen::Index row = out.eq_rows[static_cast<std::size_t>(r)];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, row); it; ++it)
                trips.emplace_back(r, it.col(), it.value());
            maps->h_offset(r) = *qp.row_upper[static_cast<std::size_t>(row)];
        }
        maps->H.resize(p, n);
        maps->H.setFromTriplets(trips.begin(), trips.end());
    }

    out.lower.resize(n);
    out.upper.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        out.lower(j) = qp.var_lower[idx] ? *qp.var_lower[idx] : -infinity<double>();
        out.upper(j) = qp.var_upper[idx] ? *qp.var_upper[idx] : infinity<double>();
    }

    Problem& prob = out.problem;
    prob.name = qp.name;
    prob.n = n;
    prob.p = maps->H.rows();
    prob.m = maps->G.rows();
    prob.f1 = [maps](const Vector& x) { return 0.5 * x.dot(maps->Q * x) + maps->q.dot(x) + maps->c; };
    prob.grad_f1 = [maps](const Vector& x) { return (maps->Q * x + maps->q).eval(); };
    prob.h = [maps](const Vector& x) { return (maps->H * x - maps->h_offset).eval(); };
    prob.jac_h_transpose_apply = [maps](const Vector&, const Vector& y) {
        return (maps->H.transpose() * y).eval();
    };
    prob.g = [maps](const Vector& x) { return (maps->G * x - maps->g_offset).eval(); };
    prob.jac_g_transpose_apply = [maps](const Vector&, const Vector& y) {
        return (maps->G.transpose() * y).eval();
    };
    set_box(prob, out.lower, out.upper);
    return out;
}

} // namespace pbalm
