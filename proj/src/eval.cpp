#include "occdet/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "occdet/rng.hpp"

namespace occdet {

namespace {

void check_lengths(const std::vector<int>& y, const std::vector<int>& yhat) {
    if (y.empty()) throw ValidationError("metrics: empty label vector");
    if (y.size() != yhat.size())
        throw ValidationError("metrics: length mismatch (" + std::to_string(y.size()) +
                              " vs " + std::to_string(yhat.size()) + ")");
}

}  // namespace

double accuracy(const std::vector<int>& y, const std::vector<int>& yhat) {
    check_lengths(y, yhat);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == yhat[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

Prf weighted_prf1(const std::vector<int>& y, const std::vector<int>& yhat) {
    check_lengths(y, yhat);
    std::map<int, std::size_t> tp, fp, fn, support;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ++support[y[i]];
        if (y[i] == yhat[i]) {
            ++tp[y[i]];
        } else {
            ++fn[y[i]];
            ++fp[yhat[i]];
        }
    }
    Prf out;
    const double n = static_cast<double>(y.size());
    for (const auto& [cls, sup] : support) {
        const double tpc = static_cast<double>(tp.count(cls) ? tp[cls] : 0);
        const double fpc = static_cast<double>(fp.count(cls) ? fp[cls] : 0);
        const double fnc = static_cast<double>(fn.count(cls) ? fn[cls] : 0);
        const double p = tpc + fpc > 0.0 ? tpc / (tpc + fpc) : 0.0;
        const double r = tpc + fnc > 0.0 ? tpc / (tpc + fnc) : 0.0;
        const double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        const double w = static_cast<double>(sup) / n;
        out.precision += w * p;
        out.recall += w * r;
        out.f1 += w * f1;
    }
    return out;
}

double rmse(const std::vector<int>& y, const std::vector<int>& yhat) {
    check_lengths(y, yhat);
    double mse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = static_cast<double>(y[i]) - static_cast<double>(yhat[i]);
        mse += d * d;
    }
    return std::sqrt(mse / static_cast<double>(y.size()));
}

double nrmse(const std::vector<int>& y, const std::vector<int>& yhat) {
    check_lengths(y, yhat);
    const int ymax = *std::max_element(y.begin(), y.end());
    if (ymax <= 0)
        throw DegenerateError("nrmse: ground-truth maximum is 0, divisor undefined");
    return rmse(y, yhat) / static_cast<double>(ymax);
}

MetricReport evaluate(const std::vector<int>& y, const std::vector<int>& yhat) {
    MetricReport rep;
    rep.accuracy = accuracy(y, yhat);
    const Prf prf = weighted_prf1(y, yhat);
    rep.precision = prf.precision;
    rep.recall = prf.recall;
    rep.f1 = prf.f1;
    rep.rmse = rmse(y, yhat);
    rep.nrmse = nrmse(y, yhat);
    for (int v : y) ++rep.support[v];
    return rep;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based mean rank
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

double srocc(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ValidationError("srocc: length mismatch");
    if (a.size() < 2) throw ValidationError("srocc: need at least 2 points");
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(a) || constant(b))
        throw DegenerateError("srocc: undefined correlation for constant input");

    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - ma;
        const double db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    return cov / std::sqrt(va * vb);
}

ImportanceReport permutation_importance(const BatchPredictor& predict, const Matrix& x,
                                        const std::vector<int>& y,
                                        const std::vector<std::string>& feature_names,
                                        int n_repeats, std::uint64_t seed) {
    if (n_repeats < 1) throw ValidationError("permutation importance: n_repeats must be >= 1");
    if (x.rows() != y.size())
        throw ValidationError("permutation importance: x/y size mismatch");
    if (feature_names.size() != x.cols())
        throw ValidationError("permutation importance: name/column count mismatch");

    ImportanceReport rep;
    rep.features = feature_names;
    rep.n_repeats = n_repeats;
    rep.baseline_accuracy = accuracy(y, predict(x));

    const std::size_t n = x.rows();
    for (std::size_t c = 0; c < x.cols(); ++c) {
        std::vector<double> drops(static_cast<std::size_t>(n_repeats));
        for (int r = 0; r < n_repeats; ++r) {
            rng::Engine eng(rng::derive(seed, c, static_cast<std::uint64_t>(r)));
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng::shuffle(perm, eng);
            Matrix shuffled = x;
            for (std::size_t i = 0; i < n; ++i) shuffled.at(i, c) = x.at(perm[i], c);
            drops[static_cast<std::size_t>(r)] =
                rep.baseline_accuracy - accuracy(y, predict(shuffled));
        }
        const double mean =
            std::accumulate(drops.begin(), drops.end(), 0.0) / drops.size();
        double var = 0.0;
        for (double d : drops) var += (d - mean) * (d - mean);
        rep.mean_drop.push_back(mean);
        rep.sd.push_back(std::sqrt(var / drops.size()));
    }
    return rep;
}

ImportanceReport permutation_importance(const SvmModel& model, const Matrix& x,
                                        const std::vector<int>& y, int n_repeats,
                                        std::uint64_t seed) {
    return permutation_importance(
        [&model](const Matrix& m) { return predict_batch(model, m); }, x, y,
        model.feature_names, n_repeats, seed);
}

std::string importance_csv(const ImportanceReport& rep) {
    std::string out = "feature,mean_importance,sd\n";
    char buf[32];
    for (std::size_t i = 0; i < rep.features.size(); ++i) {
        out += rep.features[i];
        out += ',';
        auto [p1, e1] = std::to_chars(buf, buf + sizeof(buf), rep.mean_drop[i]);
        out.append(buf, p1);
        out += ',';
        auto [p2, e2] = std::to_chars(buf, buf + sizeof(buf), rep.sd[i]);
        out.append(buf, p2);
        out += '\n';
    }
    return out;
}

}  // namespace occdet
