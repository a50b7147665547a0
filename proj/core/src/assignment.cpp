#include "varmarank/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace varmarank {

namespace {

class JonkerVolgenant {
public:
    explicit JonkerVolgenant(const Matrix& cost)
        : n_(static_cast<int>(cost.rows())),
          c_(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_)),
          rowsol_(static_cast<std::size_t>(n_), -1),
          colsol_(static_cast<std::size_t>(n_), -1),
          v_(static_cast<std::size_t>(n_), 0.0) {
        // Row-major copy: every inner loop below walks a row.
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) at(i, j) = cost(i, j);
        }
    }

    void run(const std::vector<double>* duals) {
        if (n_ == 0) return;
        if (n_ == 1) {
            rowsol_[0] = 0;
            colsol_[0] = 0;
            return;
        }
        if (duals) {
            warm_start(*duals);
        } else {
            column_reduction();
            reduction_transfer();
            augmenting_row_reduction();
        }
        augment();
    }

    const std::vector<double>& duals() const { return v_; }

    const std::vector<int>& rowsol() const { return rowsol_; }
    const std::vector<int>& colsol() const { return colsol_; }

private:
    double& at(int i, int j) { return c_[static_cast<std::size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return c_[static_cast<std::size_t>(i) * n_ + j]; }
    int& rowsol(int i) { return rowsol_[static_cast<std::size_t>(i)]; }
    int& colsol(int j) { return colsol_[static_cast<std::size_t>(j)]; }
    double& v(int j) { return v_[static_cast<std::size_t>(j)]; }

    // Any column duals are feasible for an empty matching. Each row takes its
    // cheapest reduced-cost column if still free, which keeps every assigned
    // row at its row minimum; the rest are augmented.
    void warm_start(const std::vector<double>& duals) {
        v_ = duals;
        free_.clear();
        for (int i = 0; i < n_; ++i) {
            int jmin = 0;
            double min = at(i, 0) - v(0);
            for (int j = 1; j < n_; ++j) {
                const double h = at(i, j) - v(j);
                if (h < min) {
                    min = h;
                    jmin = j;
                }
            }
            if (colsol(jmin) < 0) {
                rowsol(i) = jmin;
                colsol(jmin) = i;
            } else {
                free_.push_back(i);
            }
        }
    }

    void column_reduction() {
        matches_.assign(static_cast<std::size_t>(n_), 0);
        for (int j = n_ - 1; j >= 0; --j) {
            double min = at(0, j);
            int imin = 0;
            for (int i = 1; i < n_; ++i) {
                if (at(i, j) < min) {
                    min = at(i, j);
                    imin = i;
                }
            }
            v(j) = min;
            if (++matches_[static_cast<std::size_t>(imin)] == 1) {
                rowsol(imin) = j;
                colsol(j) = imin;
            } else if (v(j) < v(rowsol(imin))) {
                const int j1 = rowsol(imin);
                rowsol(imin) = j;
                colsol(j) = imin;
                colsol(j1) = -1;
            } else {
                colsol(j) = -1;
            }
        }
    }

    void reduction_transfer() {
        free_.clear();
        for (int i = 0; i < n_; ++i) {
            const int m = matches_[static_cast<std::size_t>(i)];
            if (m == 0) {
                free_.push_back(i);
            } else if (m == 1) {
                const int j1 = rowsol(i);
                double min = std::numeric_limits<double>::infinity();
                for (int j = 0; j < n_; ++j) {
                    if (j != j1 && at(i, j) - v(j) < min) min = at(i, j) - v(j);
                }
                v(j1) -= min;
            }
        }
    }

    void augmenting_row_reduction() {
        // Bounded so that rounding-level dual decrements cannot stall the
        // heuristic; rows still free afterwards go to the augmentation phase.
        const long long budget = 64LL * n_ + 1024;
        long long steps = 0;
        for (int sweep = 0; sweep < 2; ++sweep) {
            std::size_t k = 0;
            const std::size_t prev = free_.size();
            std::size_t numfree = 0;
            while (k < prev) {
                if (++steps > budget) {
                    rebuild_free_list();
                    return;
                }
                const int i = free_[k++];
                double umin = at(i, 0) - v(0);
                int j1 = 0;
                int j2 = -1;
                double usubmin = std::numeric_limits<double>::infinity();
                for (int j = 1; j < n_; ++j) {
                    const double h = at(i, j) - v(j);
                    if (h < usubmin) {
                        if (h >= umin) {
                            usubmin = h;
                            j2 = j;
                        } else {
                            usubmin = umin;
                            umin = h;
                            j2 = j1;
                            j1 = j;
                        }
                    }
                }
                int i0 = colsol(j1);
                if (umin < usubmin) {
                    v(j1) -= usubmin - umin;
                } else if (i0 >= 0) {
                    j1 = j2;
                    i0 = colsol(j2);
                }
                rowsol(i) = j1;
                colsol(j1) = i;
                if (i0 >= 0) {
                    if (umin < usubmin) {
                        free_[--k] = i0;
                    } else {
                        free_[numfree++] = i0;
                    }
                }
            }
            free_.resize(numfree);
        }
        rebuild_free_list();
    }

    void rebuild_free_list() {
        free_.clear();
        for (int i = 0; i < n_; ++i) {
            const int j = rowsol(i);
            if (j < 0 || colsol(j) != i) {
                rowsol(i) = -1;
                free_.push_back(i);
            }
        }
    }

    void augment() {
        std::vector<double> dist(static_cast<std::size_t>(n_));
        std::vector<int> pred(static_cast<std::size_t>(n_));
        std::vector<int> collist(static_cast<std::size_t>(n_));

        for (const int freerow : free_) {
            for (int j = 0; j < n_; ++j) {
                dist[static_cast<std::size_t>(j)] = at(freerow, j) - v(j);
                pred[static_cast<std::size_t>(j)] = freerow;
                collist[static_cast<std::size_t>(j)] = j;
            }
            int low = 0;
            int up = 0;
            int last = 0;
            int endofpath = -1;
            double min = 0.0;
            bool found = false;
            do {
                if (up == low) {
                    last = low - 1;
                    min = dist[static_cast<std::size_t>(collist[static_cast<std::size_t>(up++)])];
                    for (int k = up; k < n_; ++k) {
                        const int j = collist[static_cast<std::size_t>(k)];
                        const double h = dist[static_cast<std::size_t>(j)];
                        if (h <= min) {
                            if (h < min) {
                                up = low;
                                min = h;
                            }
                            collist[static_cast<std::size_t>(k)] = collist[static_cast<std::size_t>(up)];
                            collist[static_cast<std::size_t>(up++)] = j;
                        }
                    }
                    for (int k = low; k < up; ++k) {
                        if (colsol(collist[static_cast<std::size_t>(k)]) < 0) {
                            endofpath = collist[static_cast<std::size_t>(k)];
                            found = true;
                            break;
                        }
                    }
                }
                if (!found) {
                    const int j1 = collist[static_cast<std::size_t>(low++)];
                    const int i = colsol(j1);
                    const double h = at(i, j1) - v(j1) - min;
                    for (int k = up; k < n_; ++k) {
                        const int j = collist[static_cast<std::size_t>(k)];
                        const double v2 = at(i, j) - v(j) - h;
                        if (v2 < dist[static_cast<std::size_t>(j)]) {
                            pred[static_cast<std::size_t>(j)] = i;
                            if (v2 == min) {
                                if (colsol(j) < 0) {
                                    endofpath = j;
                                    found = true;
                                    break;
                                }
                                collist[static_cast<std::size_t>(k)] = collist[static_cast<std::size_t>(up)];
                                collist[static_cast<std::size_t>(up++)] = j;
                            }
                            dist[static_cast<std::size_t>(j)] = v2;
                        }
                    }
                }
            } while (!found);

            for (int k = 0; k <= last; ++k) {
                const int j1 = collist[static_cast<std::size_t>(k)];
                v(j1) += dist[static_cast<std::size_t>(j1)] - min;
            }
            int i;
            do {
                i = pred[static_cast<std::size_t>(endofpath)];
                colsol(endofpath) = i;
                const int j1 = endofpath;
                endofpath = rowsol(i);
                rowsol(i) = j1;
            } while (i != freerow);
        }
    }

    int n_;
    std::vector<double> c_;
    std::vector<int> rowsol_;
    std::vector<int> colsol_;
    std::vector<double> v_;
    std::vector<int> matches_;
    std::vector<int> free_;
};

}  // namespace

namespace {

AssignmentResult solve(const Matrix& cost, const std::vector<double>* duals) {
    if (cost.rows() != cost.cols()) throw std::invalid_argument("solve_assignment: cost matrix must be square");
    if (!cost.allFinite()) throw std::invalid_argument("solve_assignment: cost matrix has non-finite entries");
    if (duals && static_cast<Eigen::Index>(duals->size()) != cost.cols()) {
        throw std::invalid_argument("solve_assignment: dual hint has the wrong length");
    }

    JonkerVolgenant solver(cost);
    solver.run(duals);

    AssignmentResult out;
    out.row_to_col = solver.rowsol();
    out.col_to_row = solver.colsol();
    out.column_duals = solver.duals();
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        const int j = out.row_to_col[static_cast<std::size_t>(i)];
        if (j < 0 || out.col_to_row[static_cast<std::size_t>(j)] != i) {
            throw std::logic_error("solve_assignment: solver produced an inconsistent matching");
        }
        out.cost += cost(i, j);
    }
    return out;
}

}  // namespace

AssignmentResult solve_assignment(const Matrix& cost) { return solve(cost, nullptr); }

AssignmentResult solve_assignment(const Matrix& cost, const std::vector<double>& column_duals) {
    return solve(cost, &column_duals);
}

}  // namespace varmarank
