#include "memopt/stats.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace memopt {

namespace {

// Continued-fraction evaluation of the regularized incomplete beta I_x(a,b).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                b * std::log(1.0 - x);
    double bt = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double studentTCdf(double t, double dof) {
    double x = dof / (dof + t * t);
    double p = 0.5 * betai(dof / 2.0, 0.5, x);
    return t >= 0 ? 1.0 - p : p;
}

double normalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

StatResult pairedTTest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("paired samples must have equal length");
    const std::size_t n = a.size();
    if (n < 2) throw DataError("need at least 2 pairs");

    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    if (var == 0) throw DataError("degenerate sample (zero-variance differences)");

    double t = mean / std::sqrt(var / static_cast<double>(n));
    double dof = static_cast<double>(n - 1);
    double p = 2.0 * (1.0 - studentTCdf(std::abs(t), dof));

    StatResult result;
    result.test = StatTest::PairedT;
    result.statistic = t;
    result.pValue = std::min(1.0, std::max(0.0, p));
    result.n = n;
    return result;
}

namespace {

// Average ranks of |d|, ties averaged.
std::vector<double> tiedRanks(const std::vector<double>& absd) {
    const std::size_t n = absd.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t x, std::size_t y) { return absd[x] < absd[y]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && absd[idx[j + 1]] == absd[idx[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

StatResult wilcoxonSignedRank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("paired samples must have equal length");

    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        if (diff != 0) d.push_back(diff);
    }
    const std::size_t n = d.size();
    if (n == 0) throw DataError("degenerate sample (all differences zero)");
    if (n < 5) throw DataError("need at least 5 nonzero differences");

    std::vector<double> absd(n);
    for (std::size_t i = 0; i < n; ++i) absd[i] = std::abs(d[i]);
    std::vector<double> ranks = tiedRanks(absd);

    double wPlus = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0) wPlus += ranks[i];

    StatResult result;
    result.test = StatTest::WilcoxonSignedRank;
    result.statistic = wPlus;
    result.n = n;

    if (n <= 20) {
        // Exact: enumerate all 2^n sign assignments of the observed ranks.
        const std::uint64_t total = 1ull << n;
        std::uint64_t le = 0, ge = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double w = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1ull << i)) w += ranks[i];
            if (w <= wPlus) ++le;
            if (w >= wPlus) ++ge;
        }
        double pl = static_cast<double>(le) / static_cast<double>(total);
        double pg = static_cast<double>(ge) / static_cast<double>(total);
        result.pValue = std::min(1.0, 2.0 * std::min(pl, pg));
    } else {
        double dn = static_cast<double>(n);
        double mean = dn * (dn + 1.0) / 4.0;
        double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0;
        // tie correction: sum(t^3 - t)/48 per tied group
        std::vector<double> sorted(absd);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            double t = static_cast<double>(j - i + 1);
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        if (var <= 0) throw DataError("degenerate sample (ties exhaust the variance)");
        double z = (std::abs(wPlus - mean) - 0.5) / std::sqrt(var);
        result.pValue = std::min(1.0, 2.0 * (1.0 - normalCdf(z)));
    }
    return result;
}

std::string statResultToJson(const StatResult& r) {
    nlohmann::json j;
    j["test"] = r.test == StatTest::PairedT ? "pairedT" : "wilcoxonSignedRank";
    j["statistic"] = r.statistic;
    j["pValue"] = r.pValue;
    j["n"] = r.n;
    return j.dump(2);
}

}  // namespace memopt
