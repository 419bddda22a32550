#pragma once

// Brute-force recomputation of the 59 account features straight from the
// transaction list. Shares no code with the library beyond the Transaction
// type.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "malscope/txio.hpp"

namespace oracle {

using Series = std::vector<double>;

inline double ether(const malscope::Wei& w) { return w.convert_to<double>() / 1e18; }

inline double q_lin(Series v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] * (1.0 - (pos - static_cast<double>(i))) + v[i + 1] * (pos - static_cast<double>(i));
}

inline double mean(const Series& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sum(const Series& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

inline double energy_ratio(const Series& v, std::size_t segments, std::size_t focus) {
    std::vector<Series> chunks(segments);
    std::size_t n = v.size(), at = 0;
    for (std::size_t c = 0; c < segments; ++c) {
        std::size_t len = n / segments + (c < n % segments ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j) chunks[c].push_back(v[at++]);
    }
    double total = 0.0, part = 0.0;
    for (double x : v) total += x * x;
    for (double x : chunks[focus]) part += x * x;
    return total == 0.0 ? 0.0 : part / total;
}

inline double index_mass(const Series& v, double q) {
    double total = 0.0;
    for (double x : v) total += std::fabs(x);
    if (total == 0.0) return 0.0;
    double run = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        run += std::fabs(v[i]);
        if (run / total >= q) return static_cast<double>(i + 1) / static_cast<double>(v.size());
    }
    return 1.0;
}

inline double trend_pvalue(const Series& y) {
    std::size_t n = y.size();
    if (n < 2) return 0.0;
    if (n == 2) return y[0] == y[1] ? 1.0 : 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx += static_cast<double>(i), my += y[i];
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
        sxy += (static_cast<double>(i) - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (syy == 0.0) return 1.0;
    double slope = sxy / sxx;
    double sse = std::max(syy - slope * sxy, 0.0);
    if (sse <= 1e-14 * syy) return 0.0;
    double t = slope / std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    boost::math::students_t dist(static_cast<double>(n - 2));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

inline double cwt0(const Series& x, double a) {
    if (x.empty()) return 0.0;
    std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(10 * a), x.size());
    Series w(m);
    for (std::size_t i = 0; i < m; ++i) {
        double t = static_cast<double>(i) - (static_cast<double>(m) - 1.0) / 2.0;
        w[i] = 2.0 / (std::sqrt(3.0 * a) * std::pow(std::numbers::pi, 0.25)) * (1.0 - t * t / (a * a)) *
               std::exp(-t * t / (2.0 * a * a));
    }
    // numpy 'same' output index 0 sits at full-convolution index (m - 1) / 2.
    long j = static_cast<long>((m - 1) / 2);
    double acc = 0.0;
    for (long k = 0; k < static_cast<long>(x.size()); ++k)
        if (j - k >= 0 && j - k < static_cast<long>(m)) acc += x[k] * w[j - k];
    return acc;
}

struct Bursts {
    double count = 0, longest = 0, first = 0;
};

inline Bursts bursts(const Series& v, double sigma) {
    Bursts b;
    if (v.empty()) return b;
    double mu = mean(v), var = 0.0;
    for (double x : v) var += (x - mu) * (x - mu);
    double thr = mu + sigma * std::sqrt(var / static_cast<double>(v.size()));
    double run = 0;
    bool seen = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > thr) {
            if (!seen) b.first = static_cast<double>(i), seen = true;
            b.count += 1;
            run += 1;
            b.longest = std::max(b.longest, run);
        } else {
            run = 0;
        }
    }
    return b;
}

/// Feature name -> value for one account of the ledger.
inline std::map<std::string, double> features(const std::vector<malscope::Transaction>& ledger,
                                              const std::string& me, std::uint64_t epoch, double sigma,
                                              std::uint64_t snapshot) {
    std::vector<const malscope::Transaction*> mine;
    std::map<std::string, std::set<std::string>> graph;
    for (const auto& t : ledger) {
        if (t.is_error) continue;
        graph[t.from];
        if (t.to && *t.to != t.from) {
            graph[t.from].insert(*t.to);
            graph[*t.to].insert(t.from);
        }
        if (t.from == me || (t.to && *t.to == me)) mine.push_back(&t);
    }
    std::stable_sort(mine.begin(), mine.end(), [](auto* a, auto* b) { return a->timestamp < b->timestamp; });

    std::uint64_t e0 = mine.front()->timestamp / epoch, e1 = mine.back()->timestamp / epoch;
    std::size_t ne = e1 - e0 + 1;
    Series in(ne), out(ne), bin(ne), bout(ne), maxin(ne), maxout(ne), attract(ne);
    Series itt, itt_in, itt_out, gas;
    std::vector<std::set<std::string>> senders(ne);
    double received = 0, sent = 0, n_in = 0, n_out = 0, zero = 0;
    std::set<std::string> unique_in;
    long long t_prev = -1, t_prev_in = -1, t_prev_out = -1;
    std::uint64_t last_send = mine.back()->timestamp;
    for (auto* t : mine) {
        std::size_t e = t->timestamp / epoch - e0;
        double v = ether(t->value);
        long long ts = static_cast<long long>(t->timestamp);
        if (t_prev >= 0) itt.push_back(static_cast<double>(ts - t_prev));
        t_prev = ts;
        gas.push_back(t->gas_price.convert_to<double>() / 1e9);
        if (t->value == 0) zero += 1;
        if (t->to && *t->to == me) {
            in[e] += 1, bin[e] += v, maxin[e] = std::max(maxin[e], v), received += v, n_in += 1;
            senders[e].insert(t->from);
            unique_in.insert(t->from);
            if (t_prev_in >= 0) itt_in.push_back(static_cast<double>(ts - t_prev_in));
            t_prev_in = ts;
        }
        if (t->from == me) {
            out[e] += 1, bout[e] += v, maxout[e] = std::max(maxout[e], v), sent += v, n_out += 1;
            if (t_prev_out >= 0) itt_out.push_back(static_cast<double>(ts - t_prev_out));
            t_prev_out = ts;
            last_send = t->timestamp;
        }
    }
    std::set<std::string> known;
    for (std::size_t e = 0; e < ne; ++e) {
        if (senders[e].empty()) continue;
        double fresh = 0;
        for (const auto& s : senders[e]) fresh += known.count(s) ? 0 : 1;
        attract[e] = fresh / static_cast<double>(senders[e].size());
        known.insert(senders[e].begin(), senders[e].end());
    }
    Series degree(ne);
    for (std::size_t e = 0; e < ne; ++e) degree[e] = in[e] + out[e];

    double span = std::max<double>(static_cast<double>(e1 - e0), 1.0);
    const auto& nb = graph[me];
    double cc = 0.0;
    if (nb.size() >= 2) {
        double links = 0;
        for (const auto& a : nb)
            for (const auto& b : nb)
                if (a < b && graph[a].count(b)) links += 1;
        cc = 2.0 * links / (static_cast<double>(nb.size()) * static_cast<double>(nb.size() - 1));
    }
    auto first_ts = mine.front()->timestamp, last_ts = mine.back()->timestamp;

    std::map<std::string, double> f;
    f["indegreeTimeInv"] = n_in / span;
    f["outdegreeTimeInv"] = n_out / span;
    f["degreeTimeInv"] = (n_in + n_out) / span;
    f["numberOfburstTemporalInOut"] = bursts(itt, sigma).count;
    f["longestBurstTemporalInOut"] = bursts(itt, sigma).longest;
    f["numberOfburstTemporalIn"] = bursts(itt_in, sigma).count;
    f["longestBurstTemporalIn"] = bursts(itt_in, sigma).longest;
    f["numberOfburstTemporalOut"] = bursts(itt_out, sigma).count;
    f["longestBurstTemporalOut"] = bursts(itt_out, sigma).longest;
    f["numberOfburstDegreeInOut"] = bursts(degree, sigma).count;
    f["longestBurstDegreeInOutAtTime"] = bursts(degree, sigma).longest;
    f["numberOfburstDegreeIn"] = bursts(in, sigma).count;
    f["longestBurstDegreeInAtTime"] = bursts(in, sigma).longest;
    f["numberOfburstDegreeOut"] = bursts(out, sigma).count;
    f["longestBurstDegreeOutAtTime"] = bursts(out, sigma).longest;
    f["zeroTransactions"] = zero;
    f["totalBal"] = received - sent;
    f["transactedFirst"] = static_cast<double>(snapshot - first_ts);
    f["transactedLast"] = static_cast<double>(snapshot - last_ts);
    f["activeDuration"] = static_cast<double>(last_ts - first_ts);
    f["averagePerInBal"] = n_in > 0 ? received / n_in : 0.0;
    f["uniqueIn"] = static_cast<double>(unique_in.size());
    f["lastActiveSince"] = static_cast<double>(snapshot - last_send);
    f["indegree__index_mass_quantile__q_0.1"] = index_mass(in, 0.1);
    f["indegree__energy_ratio_by_chunks__num_segments_10__-segment_focus_0"] = energy_ratio(in, 10, 0);
    f["indegree__linear_trend__attr_\"pvalue\""] = trend_pvalue(in);
    f["ittime__quantile__q_0.7"] = q_lin(itt, 0.7);
    f["ittime__fft_coefficient__coeff_0__attr_\"real\""] = sum(itt);
    f["ittime__median"] = q_lin(itt, 0.5);
    f["outdegree__energy_ratio_by_chunks__num_segments_10-__segment_focus_0"] = energy_ratio(out, 10, 0);
    f["outdegree__enegy_ratio_by_chunks__-num_segments_10__segment_focus_1"] = energy_ratio(out, 10, 1);
    f["outdegree__fft_coefficient__coeff_0__attr_\"real\""] = sum(out);
    f["gasPrice__quantile__q_0.2"] = q_lin(gas, 0.2);
    f["gasPrice__quantile__q_0.1"] = q_lin(gas, 0.1);
    f["gasPrice__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_20"] = cwt0(gas, 20);
    f["attractiveness__median"] = q_lin(attract, 0.5);
    f["attractiveness__quantile__q_0_0.4"] = q_lin(attract, 0.4);
    f["attractiveness__mean"] = mean(attract);
    f["balanceOut__quantile__q_0.1"] = q_lin(bout, 0.1);
    f["balanceOut__quantile__q_0.3"] = q_lin(bout, 0.3);
    f["balanceOut__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_2"] = cwt0(bout, 2);
    f["balanceIn__quantile__q_0.4"] = q_lin(bin, 0.4);
    f["balanceIn-__cwt_coefficients__widths_(2, 5, 10,20)__coeff_0__w_20"] = cwt0(bin, 20);
    f["balanceIn__quantile__q_0.3"] = q_lin(bin, 0.3);
    f["maxInPayment__quantile__q_0.3"] = q_lin(maxin, 0.3);
    f["maxInPayment__quantile__q_0.2"] = q_lin(maxin, 0.2);
    f["maxInPayment__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_5"] = cwt0(maxin, 5);
    f["maxOutPayment__quantile__q_0.6"] = q_lin(maxout, 0.6);
    f["maxOutPayment__quantile__q_0.1"] = q_lin(maxout, 0.1);
    f["maxOutPayment__cwt_coefficients__widths_(2, 5, 10, 20)__coeff_0__w_2"] = cwt0(maxout, 2);
    f["clusteringCoeff"] = cc;
    f["burstCount_gasPrice"] = bursts(gas, sigma).count;
    f["burstCount_balanceIn"] = bursts(bin, sigma).count;
    f["burstCount_balanceOut"] = bursts(bout, sigma).count;
    f["burstInstance_indegree"] = bursts(in, sigma).first;
    f["burstInstance_outdegree"] = bursts(out, sigma).first;
    f["burstInstance_maxInPayment"] = bursts(maxin, sigma).first;
    f["burstInstance_maxOutPayment"] = bursts(maxout, sigma).first;
    f["burstInstance_gasPrice"] = bursts(gas, sigma).first;
    return f;
}

/// Integer-valued entries are compared exactly.
inline bool is_count(const std::string& name) {
    return name.rfind("numberOf", 0) == 0 || name.rfind("longest", 0) == 0 || name.rfind("burst", 0) == 0 ||
           name == "zeroTransactions" || name == "uniqueIn" || name == "transactedFirst" ||
           name == "transactedLast" || name == "activeDuration" || name == "lastActiveSince" ||
           name == "outdegree__fft_coefficient__coeff_0__attr_\"real\"";
}

}  // namespace oracle
