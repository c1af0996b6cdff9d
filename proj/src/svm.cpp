#include "occdet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>

namespace occdet {

void validate(const KernelParams& p) {
    if (!(p.gamma > 0.0)) throw ValidationError("kernel parameter gamma must be > 0");
    if (!(p.c > 0.0)) throw ValidationError("penalty parameter c must be > 0");
}

std::map<int, double> balanced_weights(const std::vector<int>& y) {
    if (y.empty()) throw ValidationError("balanced_weights: empty label vector");
    std::map<int, std::size_t> counts;
    for (int v : y) ++counts[v];
    const double n = static_cast<double>(y.size());
    const double k = static_cast<double>(counts.size());
    std::map<int, double> w;
    for (const auto& [cls, cnt] : counts) w[cls] = n / (k * static_cast<double>(cnt));
    return w;
}

TrainingProblem TrainingProblem::balanced(Matrix x, std::vector<int> y) {
    TrainingProblem p;
    p.weights = balanced_weights(y);
    p.x = std::move(x);
    p.y = std::move(y);
    return p;
}

namespace {

// Row cache for the kernel matrix. Capacity is derived from a byte budget;
// eviction is least-recently-used with the lowest slot winning ties, so the
// solver is deterministic no matter the budget.
class KernelCache {
public:
    KernelCache(const Matrix& x, double gamma, std::size_t cache_bytes)
        : x_(x), gamma_(gamma) {
        const std::size_t n = x.rows();
        std::size_t cap = cache_bytes / (sizeof(double) * std::max<std::size_t>(n, 1));
        capacity_ = std::clamp<std::size_t>(cap, 2, n);
        slots_.resize(capacity_);
        owner_.assign(capacity_, -1);
        last_use_.assign(capacity_, 0);
        slot_of_.assign(n, -1);
    }

    std::span<const double> row(std::size_t i) {
        ++clock_;
        if (slot_of_[i] >= 0) {
            auto s = static_cast<std::size_t>(slot_of_[i]);
            last_use_[s] = clock_;
            return slots_[s];
        }
        std::size_t victim = 0;
        for (std::size_t s = 1; s < capacity_; ++s)
            if (last_use_[s] < last_use_[victim]) victim = s;
        if (owner_[victim] >= 0) slot_of_[static_cast<std::size_t>(owner_[victim])] = -1;
        auto& buf = slots_[victim];
        buf.resize(x_.rows());
        rbf_kernel_row(x_, x_.row(i), gamma_, buf);
        owner_[victim] = static_cast<std::ptrdiff_t>(i);
        slot_of_[i] = static_cast<std::ptrdiff_t>(victim);
        last_use_[victim] = clock_;
        return buf;
    }

private:
    const Matrix& x_;
    double gamma_;
    std::size_t capacity_ = 0;
    std::uint64_t clock_ = 0;
    std::vector<std::vector<double>> slots_;
    std::vector<std::ptrdiff_t> owner_;
    std::vector<std::uint64_t> last_use_;
    std::vector<std::ptrdiff_t> slot_of_;
};

constexpr double kTau = 1e-12;

}  // namespace

BinaryModel train_binary(const TrainingProblem& problem, const KernelParams& params,
                         const SmoOptions& opts) {
    validate(params);
    if (!(opts.tol > 0.0)) throw ValidationError("smo tolerance must be > 0");
    const std::size_t n = problem.y.size();
    if (problem.x.rows() != n) throw ValidationError("train_binary: x/y size mismatch");

    std::set<int> distinct(problem.y.begin(), problem.y.end());
    if (distinct.size() < 2)
        throw DegenerateError("train_binary: single class in training data");
    if (distinct.size() > 2)
        throw ValidationError("train_binary: more than 2 classes");
    const int cls_pos = *distinct.begin();   // smaller label maps to +1
    const int cls_neg = *std::next(distinct.begin());

    std::vector<double> sign(n), box(n);
    for (std::size_t i = 0; i < n; ++i) {
        sign[i] = problem.y[i] == cls_pos ? 1.0 : -1.0;
        auto it = problem.weights.find(problem.y[i]);
        const double w = it == problem.weights.end() ? 1.0 : it->second;
        if (!(w > 0.0)) throw ValidationError("class weights must be > 0");
        box[i] = params.c * w;
    }

    KernelCache cache(problem.x, params.gamma, opts.cache_bytes);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of the dual objective
    const std::uint64_t max_iter =
        std::max<std::uint64_t>(100, opts.max_kernel_evals / (2 * n));

    std::uint64_t iter = 0;
    bool converged = false;
    while (iter < max_iter) {
        // maximal violating pair over I_up / I_low
        std::ptrdiff_t i = -1, j = -1;
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -sign[t] * grad[t];
            const bool in_up = sign[t] > 0 ? alpha[t] < box[t] : alpha[t] > 0.0;
            const bool in_low = sign[t] > 0 ? alpha[t] > 0.0 : alpha[t] < box[t];
            if (in_up && v > up_max) {
                up_max = v;
                i = static_cast<std::ptrdiff_t>(t);
            }
            if (in_low && v < low_min) {
                low_min = v;
                j = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0 || j < 0 || up_max - low_min <= opts.tol) {
            converged = true;
            break;
        }
        ++iter;

        const auto ii = static_cast<std::size_t>(i);
        const auto jj = static_cast<std::size_t>(j);
        auto ki = cache.row(ii);
        auto kj = cache.row(jj);

        const double old_ai = alpha[ii], old_aj = alpha[jj];
        if (sign[ii] != sign[jj]) {
            double quad = 2.0 - 2.0 * ki[jj];  // K_ii + K_jj - 2 K_ij, RBF diagonal is 1
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[ii] - grad[jj]) / quad;
            const double diff = alpha[ii] - alpha[jj];
            alpha[ii] += delta;
            alpha[jj] += delta;
            if (diff > 0.0) {
                if (alpha[jj] < 0.0) {
                    alpha[jj] = 0.0;
                    alpha[ii] = diff;
                }
            } else {
                if (alpha[ii] < 0.0) {
                    alpha[ii] = 0.0;
                    alpha[jj] = -diff;
                }
            }
            if (diff > box[ii] - box[jj]) {
                if (alpha[ii] > box[ii]) {
                    alpha[ii] = box[ii];
                    alpha[jj] = box[ii] - diff;
                }
            } else {
                if (alpha[jj] > box[jj]) {
                    alpha[jj] = box[jj];
                    alpha[ii] = box[jj] + diff;
                }
            }
        } else {
            double quad = 2.0 - 2.0 * ki[jj];
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[ii] - grad[jj]) / quad;
            const double sum = alpha[ii] + alpha[jj];
            alpha[ii] -= delta;
            alpha[jj] += delta;
            if (sum > box[ii]) {
                if (alpha[ii] > box[ii]) {
                    alpha[ii] = box[ii];
                    alpha[jj] = sum - box[ii];
                }
            } else {
                if (alpha[jj] < 0.0) {
                    alpha[jj] = 0.0;
                    alpha[ii] = sum;
                }
            }
            if (sum > box[jj]) {
                if (alpha[jj] > box[jj]) {
                    alpha[jj] = box[jj];
                    alpha[ii] = sum - box[jj];
                }
            } else {
                if (alpha[ii] < 0.0) {
                    alpha[ii] = 0.0;
                    alpha[jj] = sum;
                }
            }
        }

        const double dai = alpha[ii] - old_ai;
        const double daj = alpha[jj] - old_aj;
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += sign[t] * (sign[ii] * ki[t] * dai + sign[jj] * kj[t] * daj);
    }

    // bias from the KKT conditions; free points average, else bound midpoint
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = sign[t] * grad[t];
        if (alpha[t] >= box[t]) {
            if (sign[t] < 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (sign[t] > 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

    BinaryModel model;
    model.class_pos = cls_pos;
    model.class_neg = cls_neg;
    model.bias = -rho;
    model.converged = converged;
    model.iterations = iter;
    double obj = 0.0;
    for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] - 1.0);
    model.dual_objective = 0.5 * obj;

    std::vector<std::size_t> sv_idx;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0.0) sv_idx.push_back(t);
    model.support_vectors = problem.x.select_rows(sv_idx);
    model.coef.reserve(sv_idx.size());
    for (std::size_t t : sv_idx) model.coef.push_back(alpha[t] * sign[t]);
    return model;
}

namespace {

TrainingProblem restrict_to_pair(const TrainingProblem& problem, int a, int b) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < problem.y.size(); ++i)
        if (problem.y[i] == a || problem.y[i] == b) rows.push_back(i);
    TrainingProblem sub;
    sub.x = problem.x.select_rows(rows);
    sub.y.reserve(rows.size());
    for (std::size_t i : rows) sub.y.push_back(problem.y[i]);
    sub.weights = problem.weights;
    return sub;
}

}  // namespace

SvmModel train_multiclass(const TrainingProblem& problem, const KernelParams& params,
                          const SmoOptions& opts) {
    validate(params);
    if (problem.y.empty()) throw ValidationError("train_multiclass: empty problem");
    std::set<int> distinct(problem.y.begin(), problem.y.end());
    if (distinct.size() < 2)
        throw DegenerateError("train_multiclass: single class in training data");
    for (int cls : distinct)
        if (!problem.weights.count(cls))
            throw ValidationError("missing weight for class " + std::to_string(cls));

    SvmModel model;
    model.params = params;
    model.classes.assign(distinct.begin(), distinct.end());

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < model.classes.size(); ++a)
        for (std::size_t b = a + 1; b < model.classes.size(); ++b)
            pairs.emplace_back(model.classes[a], model.classes[b]);

    model.pairs.resize(pairs.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(pairs.size()); ++p) {
        try {
            const auto [a, b] = pairs[static_cast<std::size_t>(p)];
            model.pairs[static_cast<std::size_t>(p)] =
                train_binary(restrict_to_pair(problem, a, b), params, opts);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return model;
}

double decision_value(const BinaryModel& m, double gamma, std::span<const double> x) {
    if (m.support_vectors.cols() != x.size())
        throw ValidationError("predict: expected " + std::to_string(m.support_vectors.cols()) +
                              " features, got " + std::to_string(x.size()));
    double f = m.bias;
    for (std::size_t j = 0; j < m.support_vectors.rows(); ++j)
        f += m.coef[j] * rbf_kernel(m.support_vectors.row(j), x, gamma);
    return f;
}

int predict(const SvmModel& model, std::span<const double> x) {
    std::map<int, int> votes;
    for (const auto& pair : model.pairs) {
        const double f = decision_value(pair, model.params.gamma, x);
        ++votes[f >= 0.0 ? pair.class_pos : pair.class_neg];
    }
    int best = model.classes.front();
    int best_votes = -1;
    for (int cls : model.classes) {
        const int v = votes.count(cls) ? votes[cls] : 0;
        if (v > best_votes) {  // classes scanned ascending: ties keep the smaller
            best = cls;
            best_votes = v;
        }
    }
    return best;
}

std::vector<int> predict_batch(const SvmModel& model, const Matrix& x, Exec exec) {
    const std::size_t n = x.rows();
    std::vector<int> out(n, model.classes.empty() ? 0 : model.classes.front());
    if (model.pairs.empty() || n == 0) return out;

    Matrix fvals(model.pairs.size(), n);
    for (std::size_t p = 0; p < model.pairs.size(); ++p) {
        const auto& pair = model.pairs[p];
        decision_values(pair.support_vectors, pair.coef, pair.bias, model.params.gamma, x,
                        fvals.row(p), exec);
    }
    for (std::size_t r = 0; r < n; ++r) {
        std::map<int, int> votes;
        for (std::size_t p = 0; p < model.pairs.size(); ++p)
            ++votes[fvals.at(p, r) >= 0.0 ? model.pairs[p].class_pos
                                          : model.pairs[p].class_neg];
        int best = model.classes.front();
        int best_votes = -1;
        for (int cls : model.classes) {
            const int v = votes.count(cls) ? votes[cls] : 0;
            if (v > best_votes) {
                best = cls;
                best_votes = v;
            }
        }
        out[r] = best;
    }
    return out;
}

}  // namespace occdet
