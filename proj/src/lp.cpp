// SPDX-License-Identifier: Apache-2.0
#include "evcs/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace evcs {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kZeroTol = 1e-12;
constexpr int kRefactorEvery = 100;
constexpr int kStallLimit = 60;  // degenerate pivots before switching to Bland

enum class VarStatus : char { Basic, AtLower, AtUpper, FreeZero };

struct SparseCol {
    std::vector<std::pair<int, double>> entries;  // (row, value)
};

// Internal working problem: structural columns, then one slack per row,
// then artificials appended by the crash. All rows are equalities
// Ax + s = rhs with the slack sense encoded in its bounds.
class Simplex {
public:
    Simplex(const LpProblem& p, const LpOptions& opts) : p_(p), opts_(opts) {
        m_ = static_cast<int>(p.rows.size());
        n_struct_ = p.num_cols;
        cols_.resize(static_cast<std::size_t>(n_struct_ + m_));
        lower_ = p.lower;
        upper_ = p.upper;
        cost_.assign(static_cast<std::size_t>(n_struct_ + m_), 0.0);
        for (int j = 0; j < n_struct_; ++j) cost_[static_cast<std::size_t>(j)] = p.obj[static_cast<std::size_t>(j)];
        rhs_.resize(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            const auto& row = p.rows[static_cast<std::size_t>(i)];
            rhs_[static_cast<std::size_t>(i)] = row.rhs;
            for (const auto& [c, v] : row.coeffs)
                if (v != 0.0) cols_[static_cast<std::size_t>(c)].entries.push_back({i, v});
            auto& slack = cols_[static_cast<std::size_t>(n_struct_ + i)];
            slack.entries.push_back({i, 1.0});
            switch (row.sense) {
                case RowSense::LessEqual:
                    lower_.push_back(0.0);
                    upper_.push_back(kLpInf);
                    break;
                case RowSense::Equal:
                    lower_.push_back(0.0);
                    upper_.push_back(0.0);
                    break;
                case RowSense::GreaterEqual:
                    lower_.push_back(-kLpInf);
                    upper_.push_back(0.0);
                    break;
            }
        }
        n_total_ = n_struct_ + m_;
        max_iter_ = opts.max_iterations > 0
                        ? opts.max_iterations
                        : std::max<long>(20000, 60L * (m_ + n_total_));
    }

    LpSolution run() {
        LpSolution sol;
        if (m_ == 0) {
            // pure bound problem
            sol.x.resize(static_cast<std::size_t>(n_struct_));
            for (int j = 0; j < n_struct_; ++j) {
                const double c = cost_[static_cast<std::size_t>(j)];
                double v;
                if (c > 0)
                    v = lower_[static_cast<std::size_t>(j)];
                else if (c < 0)
                    v = upper_[static_cast<std::size_t>(j)];
                else
                    v = std::isfinite(lower_[static_cast<std::size_t>(j)]) ? lower_[static_cast<std::size_t>(j)] : 0.0;
                if (!std::isfinite(v)) { sol.status = LpStatus::Unbounded; return sol; }
                sol.x[static_cast<std::size_t>(j)] = v;
                sol.obj += c * v;
            }
            sol.obj += p_.obj_offset;
            sol.status = LpStatus::Optimal;
            return sol;
        }

        crash_basis();
        if (num_artificials_ > 0) {
            phase_ = 1;
            LpStatus st = iterate();
            if (st == LpStatus::IterationLimit) { sol.status = st; sol.iterations = iters_; return sol; }
            double infeas = 0.0;
            for (int i = 0; i < m_; ++i) {
                const int bj = basis_[static_cast<std::size_t>(i)];
                if (bj >= n_total_ - num_artificials_) infeas += std::abs(xb_[static_cast<std::size_t>(i)]);
            }
            if (infeas > 1e-7) { sol.status = LpStatus::Infeasible; sol.iterations = iters_; return sol; }
            drop_artificials();
        }
        phase_ = 2;
        LpStatus st = iterate();
        sol.status = st;
        sol.iterations = iters_;
        if (st != LpStatus::Optimal) return sol;

        refactorize();
        recompute_xb();
        sol.x.assign(static_cast<std::size_t>(n_struct_), 0.0);
        for (int j = 0; j < n_struct_; ++j) sol.x[static_cast<std::size_t>(j)] = value_of(j);
        sol.obj = p_.obj_offset;
        for (int j = 0; j < n_struct_; ++j) sol.obj += p_.obj[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];
        return sol;
    }

private:
    const LpProblem& p_;
    LpOptions opts_;
    int m_ = 0, n_struct_ = 0, n_total_ = 0;
    std::vector<SparseCol> cols_;
    std::vector<double> lower_, upper_, cost_, rhs_;
    std::vector<int> basis_;            // column index per row
    std::vector<VarStatus> status_;     // per column (incl. slacks/artificials)
    std::vector<double> xb_;            // basic values per row
    std::vector<double> binv_;          // m x m row-major
    int num_artificials_ = 0;
    int phase_ = 2;
    long iters_ = 0;
    long max_iter_ = 0;
    int pivots_since_refactor_ = 0;
    int stall_ = 0;
    bool bland_ = false;

    double nb_value(int j) const {
        switch (status_[static_cast<std::size_t>(j)]) {
            case VarStatus::AtLower: return lower_[static_cast<std::size_t>(j)];
            case VarStatus::AtUpper: return upper_[static_cast<std::size_t>(j)];
            case VarStatus::FreeZero: return 0.0;
            case VarStatus::Basic: break;
        }
        return 0.0;
    }

    double value_of(int j) const {
        if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) {
            for (int i = 0; i < m_; ++i)
                if (basis_[static_cast<std::size_t>(i)] == j) return xb_[static_cast<std::size_t>(i)];
        }
        return nb_value(j);
    }

    // Initial basis: slacks where the implied value fits the slack bounds,
    // artificials elsewhere.
    void crash_basis() {
        status_.assign(static_cast<std::size_t>(n_total_), VarStatus::AtLower);
        for (int j = 0; j < n_total_; ++j) {
            if (std::isfinite(lower_[static_cast<std::size_t>(j)]))
                status_[static_cast<std::size_t>(j)] = VarStatus::AtLower;
            else if (std::isfinite(upper_[static_cast<std::size_t>(j)]))
                status_[static_cast<std::size_t>(j)] = VarStatus::AtUpper;
            else
                status_[static_cast<std::size_t>(j)] = VarStatus::FreeZero;
        }
        std::vector<double> act(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            const double v = nb_value(j);
            if (v == 0.0) continue;
            for (const auto& [r, a] : cols_[static_cast<std::size_t>(j)].entries) act[static_cast<std::size_t>(r)] += a * v;
        }
        basis_.assign(static_cast<std::size_t>(m_), -1);
        xb_.assign(static_cast<std::size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            const int sj = n_struct_ + i;
            const double need = rhs_[static_cast<std::size_t>(i)] - act[static_cast<std::size_t>(i)];
            if (need >= lower_[static_cast<std::size_t>(sj)] - opts_.feas_tol &&
                need <= upper_[static_cast<std::size_t>(sj)] + opts_.feas_tol) {
                basis_[static_cast<std::size_t>(i)] = sj;
                status_[static_cast<std::size_t>(sj)] = VarStatus::Basic;
                xb_[static_cast<std::size_t>(i)] = need;
            } else {
                // slack pinned at its nearest bound, artificial carries the rest
                const double sv = need < lower_[static_cast<std::size_t>(sj)] ? lower_[static_cast<std::size_t>(sj)]
                                                                              : upper_[static_cast<std::size_t>(sj)];
                status_[static_cast<std::size_t>(sj)] = sv == lower_[static_cast<std::size_t>(sj)]
                                                            ? VarStatus::AtLower
                                                            : VarStatus::AtUpper;
                const double resid = need - sv;
                const int aj = n_total_ + num_artificials_;
                SparseCol ac;
                ac.entries.push_back({i, resid >= 0 ? 1.0 : -1.0});
                cols_.push_back(ac);
                lower_.push_back(0.0);
                upper_.push_back(kLpInf);
                cost_.push_back(0.0);
                status_.push_back(VarStatus::Basic);
                basis_[static_cast<std::size_t>(i)] = aj;
                xb_[static_cast<std::size_t>(i)] = std::abs(resid);
                ++num_artificials_;
            }
        }
        if (num_artificials_ > 0) n_total_ += num_artificials_;
        refactorize();
    }

    double phase_cost(int j) const {
        if (phase_ == 1) return j >= n_total_ - num_artificials_ && num_artificials_ > 0 ? 1.0 : 0.0;
        return j < n_struct_ ? cost_[static_cast<std::size_t>(j)] : 0.0;
    }

    void refactorize() {
        // dense Gauss-Jordan inverse of the basis matrix with partial pivoting
        const std::size_t mm = static_cast<std::size_t>(m_);
        std::vector<double> a(mm * mm, 0.0);
        binv_.assign(mm * mm, 0.0);
        for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(i)] = 1.0;
        for (int c = 0; c < m_; ++c)
            for (const auto& [r, v] : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(c)])].entries)
                a[static_cast<std::size_t>(r) * mm + static_cast<std::size_t>(c)] = v;
        for (int c = 0; c < m_; ++c) {
            int piv = -1;
            double best = kPivotTol;
            for (int r = c; r < m_; ++r) {
                const double v = std::abs(a[static_cast<std::size_t>(r) * mm + static_cast<std::size_t>(c)]);
                if (v > best) { best = v; piv = r; }
            }
            if (piv < 0) throw std::runtime_error("lp_solve: singular basis");
            if (piv != c) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(a[static_cast<std::size_t>(piv) * mm + static_cast<std::size_t>(k)],
                              a[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(k)]);
                    std::swap(binv_[static_cast<std::size_t>(piv) * mm + static_cast<std::size_t>(k)],
                              binv_[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(k)]);
                }
            }
            const double d = a[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(c)];
            const double inv = 1.0 / d;
            for (int k = 0; k < m_; ++k) {
                a[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(k)] *= inv;
                binv_[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(k)] *= inv;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == c) continue;
                const double f = a[static_cast<std::size_t>(r) * mm + static_cast<std::size_t>(c)];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    a[static_cast<std::size_t>(r) * mm + static_cast<std::size_t>(k)] -=
                        f * a[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(k)];
                    binv_[static_cast<std::size_t>(r) * mm + static_cast<std::size_t>(k)] -=
                        f * binv_[static_cast<std::size_t>(c) * mm + static_cast<std::size_t>(k)];
                }
            }
        }
        pivots_since_refactor_ = 0;
    }

    void recompute_xb() {
        std::vector<double> act(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < n_total_; ++j) {
            if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
            const double v = nb_value(j);
            if (v == 0.0) continue;
            for (const auto& [r, a] : cols_[static_cast<std::size_t>(j)].entries) act[static_cast<std::size_t>(r)] += a * v;
        }
        for (int i = 0; i < m_; ++i) act[static_cast<std::size_t>(i)] = rhs_[static_cast<std::size_t>(i)] - act[static_cast<std::size_t>(i)];
        const std::size_t mm = static_cast<std::size_t>(m_);
        for (int i = 0; i < m_; ++i) {
            double s = 0.0;
            const double* row = &binv_[static_cast<std::size_t>(i) * mm];
            for (int k = 0; k < m_; ++k) s += row[static_cast<std::size_t>(k)] * act[static_cast<std::size_t>(k)];
            xb_[static_cast<std::size_t>(i)] = s;
        }
    }

    std::vector<double> ftran(const SparseCol& col) const {
        const std::size_t mm = static_cast<std::size_t>(m_);
        std::vector<double> out(mm, 0.0);
        for (const auto& [r, v] : col.entries)
            for (int i = 0; i < m_; ++i)
                out[static_cast<std::size_t>(i)] += binv_[static_cast<std::size_t>(i) * mm + static_cast<std::size_t>(r)] * v;
        return out;
    }

    std::vector<double> btran_costs() const {
        const std::size_t mm = static_cast<std::size_t>(m_);
        std::vector<double> y(mm, 0.0);
        for (int i = 0; i < m_; ++i) {
            const double cb = phase_cost(basis_[static_cast<std::size_t>(i)]);
            if (cb == 0.0) continue;
            const double* row = &binv_[static_cast<std::size_t>(i) * mm];
            for (int k = 0; k < m_; ++k) y[static_cast<std::size_t>(k)] += cb * row[static_cast<std::size_t>(k)];
        }
        return y;
    }

    LpStatus iterate() {
        while (iters_ < max_iter_) {
            ++iters_;
            const std::vector<double> y = btran_costs();

            // pricing
            int enter = -1;
            double best_score = 0.0;
            double enter_d = 0.0;
            for (int j = 0; j < n_total_; ++j) {
                const VarStatus st = status_[static_cast<std::size_t>(j)];
                if (st == VarStatus::Basic) continue;
                if (lower_[static_cast<std::size_t>(j)] == upper_[static_cast<std::size_t>(j)]) continue;
                double d = phase_cost(j);
                for (const auto& [r, v] : cols_[static_cast<std::size_t>(j)].entries) d -= y[static_cast<std::size_t>(r)] * v;
                const double tol = opts_.dual_tol * (1.0 + std::abs(phase_cost(j)));
                double score = 0.0;
                if (st == VarStatus::AtLower && d < -tol) score = -d;
                else if (st == VarStatus::AtUpper && d > tol) score = d;
                else if (st == VarStatus::FreeZero && std::abs(d) > tol) score = std::abs(d);
                if (score > 0.0) {
                    if (bland_) { enter = j; enter_d = d; break; }
                    if (score > best_score) { best_score = score; enter = j; enter_d = d; }
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            const VarStatus est = status_[static_cast<std::size_t>(enter)];
            const int dir = (est == VarStatus::AtUpper || (est == VarStatus::FreeZero && enter_d > 0)) ? -1 : +1;
            const std::vector<double> alpha = ftran(cols_[static_cast<std::size_t>(enter)]);

            // ratio test
            double t_max = kLpInf;
            if (std::isfinite(lower_[static_cast<std::size_t>(enter)]) && std::isfinite(upper_[static_cast<std::size_t>(enter)]))
                t_max = upper_[static_cast<std::size_t>(enter)] - lower_[static_cast<std::size_t>(enter)];
            int leave = -1;        // row index, -1 = bound flip
            double leave_rate = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double rate = -dir * alpha[static_cast<std::size_t>(i)];
                if (std::abs(rate) <= kPivotTol) continue;
                const int bj = basis_[static_cast<std::size_t>(i)];
                double t;
                if (rate > 0) {
                    const double ub = upper_[static_cast<std::size_t>(bj)];
                    if (!std::isfinite(ub)) continue;
                    t = (ub - xb_[static_cast<std::size_t>(i)]) / rate;
                } else {
                    const double lb = lower_[static_cast<std::size_t>(bj)];
                    if (!std::isfinite(lb)) continue;
                    t = (lb - xb_[static_cast<std::size_t>(i)]) / rate;
                }
                if (t < -opts_.feas_tol) t = 0.0;
                if (t < 0) t = 0.0;
                const bool better =
                    t < t_max - kZeroTol ||
                    (t < t_max + kZeroTol && leave >= 0 &&
                     (bland_ ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]
                             : std::abs(rate) > std::abs(leave_rate) + kZeroTol));
                if (better) {
                    t_max = std::min(t_max, t);
                    leave = i;
                    leave_rate = rate;
                }
            }

            if (!std::isfinite(t_max)) return LpStatus::Unbounded;
            if (t_max <= kZeroTol) ++stall_; else stall_ = 0;
            if (stall_ > kStallLimit) bland_ = true;
            else if (stall_ == 0) bland_ = false;

            if (leave < 0) {
                // bound flip of the entering variable
                for (int i = 0; i < m_; ++i)
                    xb_[static_cast<std::size_t>(i)] += (-dir * alpha[static_cast<std::size_t>(i)]) * t_max;
                status_[static_cast<std::size_t>(enter)] =
                    dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
                continue;
            }

            // pivot: entering becomes basic in row `leave`
            const int old_bj = basis_[static_cast<std::size_t>(leave)];
            const double piv = alpha[static_cast<std::size_t>(leave)];
            if (std::abs(piv) <= kPivotTol) {
                refactorize();
                recompute_xb();
                continue;
            }
            for (int i = 0; i < m_; ++i)
                xb_[static_cast<std::size_t>(i)] += (-dir * alpha[static_cast<std::size_t>(i)]) * t_max;
            const double enter_val = nb_value(enter) + dir * t_max;

            // leaving variable lands on the bound it hit
            status_[static_cast<std::size_t>(old_bj)] =
                (leave_rate > 0) ? VarStatus::AtUpper : VarStatus::AtLower;
            if (!std::isfinite(nb_value(old_bj))) status_[static_cast<std::size_t>(old_bj)] = VarStatus::FreeZero;
            if (num_artificials_ > 0 && old_bj >= n_total_ - num_artificials_) {
                // an artificial that left the basis may not come back
                lower_[static_cast<std::size_t>(old_bj)] = 0.0;
                upper_[static_cast<std::size_t>(old_bj)] = 0.0;
                status_[static_cast<std::size_t>(old_bj)] = VarStatus::AtLower;
            }
            status_[static_cast<std::size_t>(enter)] = VarStatus::Basic;
            basis_[static_cast<std::size_t>(leave)] = enter;
            xb_[static_cast<std::size_t>(leave)] = enter_val;

            // product-form update of the dense inverse
            const std::size_t mm = static_cast<std::size_t>(m_);
            const double inv_piv = 1.0 / piv;
            double* prow = &binv_[static_cast<std::size_t>(leave) * mm];
            for (int k = 0; k < m_; ++k) prow[static_cast<std::size_t>(k)] *= inv_piv;
            for (int i = 0; i < m_; ++i) {
                if (i == leave) continue;
                const double f = alpha[static_cast<std::size_t>(i)];
                if (f == 0.0) continue;
                double* row = &binv_[static_cast<std::size_t>(i) * mm];
                for (int k = 0; k < m_; ++k) row[static_cast<std::size_t>(k)] -= f * prow[static_cast<std::size_t>(k)];
            }
            if (++pivots_since_refactor_ >= kRefactorEvery) {
                refactorize();
                recompute_xb();
            }
        }
        return LpStatus::IterationLimit;
    }

    void drop_artificials() {
        // pivot basic artificials (all at ~0) out of the basis when possible;
        // redundant rows keep their artificial pinned at zero
        for (int i = 0; i < m_; ++i) {
            const int bj = basis_[static_cast<std::size_t>(i)];
            if (bj < n_total_ - num_artificials_) continue;
            // row i of B^{-1} N
            const std::size_t mm = static_cast<std::size_t>(m_);
            const double* brow = &binv_[static_cast<std::size_t>(i) * mm];
            int replacement = -1;
            for (int j = 0; j < n_total_ - num_artificials_ && replacement < 0; ++j) {
                if (status_[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
                double v = 0.0;
                for (const auto& [r, a] : cols_[static_cast<std::size_t>(j)].entries) v += brow[static_cast<std::size_t>(r)] * a;
                if (std::abs(v) > 1e-7) replacement = j;
            }
            if (replacement >= 0) {
                const std::vector<double> alpha = ftran(cols_[static_cast<std::size_t>(replacement)]);
                const double piv = alpha[static_cast<std::size_t>(i)];
                if (std::abs(piv) <= kPivotTol) continue;
                status_[static_cast<std::size_t>(bj)] = VarStatus::AtLower;
                status_[static_cast<std::size_t>(replacement)] = VarStatus::Basic;
                basis_[static_cast<std::size_t>(i)] = replacement;
                refactorize();
                recompute_xb();
            }
        }
        // freeze any artificial: it may not re-enter
        for (int j = n_total_ - num_artificials_; j < n_total_; ++j) {
            lower_[static_cast<std::size_t>(j)] = 0.0;
            upper_[static_cast<std::size_t>(j)] = 0.0;
        }
    }
};

} // namespace

LpSolution lp_solve(const LpProblem& p, const LpOptions& opts) {
    Simplex s(p, opts);
    return s.run();
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string write_lp_format(const LpProblem& p, const std::vector<int>& integer_cols,
                            const std::vector<std::string>& col_names, const std::string& name) {
    auto col_name = [&](int j) -> std::string {
        if (j < static_cast<int>(col_names.size()) && !col_names[static_cast<std::size_t>(j)].empty())
            return col_names[static_cast<std::size_t>(j)];
        return "x" + std::to_string(j);
    };
    std::ostringstream os;
    os << "\\ " << name << "\n";
    os << "Minimize\n obj:";
    bool first = true;
    for (int j = 0; j < p.num_cols; ++j) {
        const double c = p.obj[static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        os << (c < 0 ? " - " : (first ? " " : " + ")) << num(std::abs(c)) << " " << col_name(j);
        first = false;
    }
    if (first) os << " 0 " << col_name(0);
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& row = p.rows[i];
        os << " c" << i << ":";
        bool f = true;
        for (const auto& [j, v] : row.coeffs) {
            if (v == 0.0) continue;
            os << (v < 0 ? " - " : (f ? " " : " + ")) << num(std::abs(v)) << " " << col_name(j);
            f = false;
        }
        const char* rel = row.sense == RowSense::LessEqual ? "<=" : row.sense == RowSense::Equal ? "=" : ">=";
        os << " " << rel << " " << num(row.rhs) << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < p.num_cols; ++j) {
        const double lo = p.lower[static_cast<std::size_t>(j)];
        const double hi = p.upper[static_cast<std::size_t>(j)];
        if (!std::isfinite(lo) && !std::isfinite(hi)) os << " " << col_name(j) << " free\n";
        else if (!std::isfinite(hi)) os << " " << col_name(j) << " >= " << num(lo) << "\n";
        else if (!std::isfinite(lo)) os << " " << col_name(j) << " <= " << num(hi) << "\n";
        else os << " " << num(lo) << " <= " << col_name(j) << " <= " << num(hi) << "\n";
    }
    if (!integer_cols.empty()) {
        os << "Binaries\n";
        for (int j : integer_cols) os << " " << col_name(j);
        os << "\n";
    }
    os << "End\n";
    return os.str();
}

} // namespace evcs
