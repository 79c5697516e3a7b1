#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace netfun {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

// maximize c^T x subject to rows, x >= 0.
template <class F>
struct LinearProgram {
  struct Row {
    std::vector<std::pair<int, F>> terms;
    RowSense sense = RowSense::kLessEqual;
    F rhs{};
  };

  int num_vars = 0;
  std::vector<F> objective;
  std::vector<Row> rows;

  int add_variable(const F& cost = F(0)) {
    objective.push_back(cost);
    return num_vars++;
  }

  int add_row(std::vector<std::pair<int, F>> terms, RowSense sense, const F& rhs) {
    rows.push_back(Row{std::move(terms), sense, rhs});
    return static_cast<int>(rows.size()) - 1;
  }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

template <class F>
struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  F objective{};
  std::vector<F> x;
  // One multiplier per row of the input program; >= 0 for <= rows.
  std::vector<F> duals;
  std::int64_t pivots = 0;
};

// Dense two-phase tableau simplex with Bland's rule. Exact when F is exact.
template <class F>
class TableauSimplex {
 public:
  explicit TableauSimplex(const LinearProgram<F>& lp, std::int64_t pivot_limit = 5000000)
      : lp_(lp), pivot_limit_(pivot_limit) {}

  LpResult<F> solve() {
    build();
    LpResult<F> result;
    // Phase 1: maximize -sum(artificials).
    obj_.assign(cols_, F(0));
    obj_rhs_ = F(0);
    for (int i = 0; i < m_; ++i) {
      if (is_artificial(basis_[i])) {
        for (int j = 0; j < cols_; ++j) {
          if (!is_artificial(j) && sgn(tab_[i][j]) != 0) obj_[j] -= tab_[i][j];
        }
        obj_rhs_ -= rhs_[i];
      }
    }
    LpStatus s = iterate();
    result.pivots = pivots_;
    if (s == LpStatus::kIterationLimit) {
      result.status = s;
      return result;
    }
    if (sgn(obj_rhs_) < 0) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      for (int j = 0; j < first_artificial_; ++j) {
        if (sgn(tab_[i][j]) != 0) {
          pivot(i, j);
          break;
        }
      }
    }
    // Phase 2.
    obj_.assign(cols_, F(0));
    obj_rhs_ = F(0);
    for (int j = 0; j < n_; ++j) obj_[j] = -lp_.objective[j];
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[i];
      if (b >= n_ || sgn(lp_.objective[b]) == 0) continue;
      const F& cb = lp_.objective[b];
      for (int j = 0; j < cols_; ++j) {
        if (sgn(tab_[i][j]) != 0) obj_[j] += cb * tab_[i][j];
      }
      obj_rhs_ += cb * rhs_[i];
    }
    s = iterate();
    result.pivots = pivots_;
    result.status = s;
    if (s != LpStatus::kOptimal) return result;
    result.objective = obj_rhs_;
    result.x.assign(n_, F(0));
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) result.x[basis_[i]] = rhs_[i];
    }
    result.duals.assign(m_, F(0));
    for (int i = 0; i < m_; ++i) {
      F y = obj_[unit_col_[i]];
      result.duals[i] = flipped_[i] ? F(-y) : y;
    }
    return result;
  }

 private:
  bool is_artificial(int j) const { return j >= first_artificial_; }

  void build() {
    n_ = lp_.num_vars;
    m_ = static_cast<int>(lp_.rows.size());
    flipped_.assign(m_, false);
    std::vector<RowSense> sense(m_);
    int slacks = 0;
    int artificials = 0;
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      sense[i] = row.sense;
      if (sgn(row.rhs) < 0) {
        flipped_[i] = true;
        if (sense[i] == RowSense::kLessEqual) {
          sense[i] = RowSense::kGreaterEqual;
        } else if (sense[i] == RowSense::kGreaterEqual) {
          sense[i] = RowSense::kLessEqual;
        }
      }
      if (sense[i] != RowSense::kEqual) ++slacks;
      if (sense[i] != RowSense::kLessEqual) ++artificials;
    }
    first_artificial_ = n_ + slacks;
    cols_ = first_artificial_ + artificials;
    tab_.assign(m_, std::vector<F>(cols_, F(0)));
    rhs_.assign(m_, F(0));
    basis_.assign(m_, 0);
    unit_col_.assign(m_, 0);
    int next_slack = n_;
    int next_art = first_artificial_;
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp_.rows[i];
      for (const auto& [j, a] : row.terms) {
        tab_[i][j] += flipped_[i] ? F(-a) : a;
      }
      rhs_[i] = flipped_[i] ? F(-row.rhs) : row.rhs;
      if (sense[i] == RowSense::kLessEqual) {
        tab_[i][next_slack] = F(1);
        basis_[i] = next_slack;
        unit_col_[i] = next_slack;
        ++next_slack;
      } else {
        if (sense[i] == RowSense::kGreaterEqual) {
          tab_[i][next_slack] = F(-1);
          ++next_slack;
        }
        tab_[i][next_art] = F(1);
        basis_[i] = next_art;
        unit_col_[i] = next_art;
        ++next_art;
      }
    }
  }

  LpStatus iterate() {
    while (true) {
      int enter = -1;
      for (int j = 0; j < first_artificial_; ++j) {
        if (sgn(obj_[j]) < 0) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;
      int leave = -1;
      F best_ratio;
      for (int i = 0; i < m_; ++i) {
        if (sgn(tab_[i][enter]) <= 0) continue;
        F ratio = rhs_[i] / tab_[i][enter];
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      if (pivots_ >= pivot_limit_) return LpStatus::kIterationLimit;
      pivot(leave, enter);
    }
  }

  void pivot(int r, int s) {
    ++pivots_;
    std::vector<F>& prow = tab_[r];
    const F inv = F(1) / prow[s];
    std::vector<int> nz;
    for (int j = 0; j < cols_; ++j) {
      if (sgn(prow[j]) != 0) {
        prow[j] *= inv;
        nz.push_back(j);
      }
    }
    rhs_[r] *= inv;
    auto eliminate = [&](std::vector<F>& row, F& rhs) {
      if (sgn(row[s]) == 0) return;
      const F factor = row[s];
      for (int j : nz) row[j] -= factor * prow[j];
      rhs -= factor * rhs_[r];
    };
    for (int i = 0; i < m_; ++i) {
      if (i != r) eliminate(tab_[i], rhs_[i]);
    }
    eliminate(obj_, obj_rhs_);
    basis_[r] = s;
  }

  const LinearProgram<F>& lp_;
  std::int64_t pivot_limit_;
  std::int64_t pivots_ = 0;
  int n_ = 0;
  int m_ = 0;
  int cols_ = 0;
  int first_artificial_ = 0;
  std::vector<std::vector<F>> tab_;
  std::vector<F> rhs_;
  std::vector<F> obj_;
  F obj_rhs_{};
  std::vector<int> basis_;
  std::vector<int> unit_col_;
  std::vector<bool> flipped_;
};

template <class F>
LpResult<F> solve_lp(const LinearProgram<F>& lp) {
  return TableauSimplex<F>(lp).solve();
}

}  // namespace netfun
