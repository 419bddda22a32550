#include "malscope/series.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "malscope/error.hpp"

namespace malscope {

void EpochConfig::validate() const {
    if (epoch_seconds < 1) throw config_error("epoch_seconds must be >= 1");
    if (!(burst_sigma >= 0.0) || !std::isfinite(burst_sigma)) throw config_error("burst_sigma must be finite and >= 0");
}

AccountIndex::AccountIndex(const Ledger& ledger, bool include_failed) {
    const auto& txs = ledger.transactions();
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const auto& tx = txs[i];
        if (tx.is_error && !include_failed) continue;
        by_address_[tx.from].push_back(i);
        if (tx.to && *tx.to != tx.from) by_address_[*tx.to].push_back(i);
    }
}

std::span<const std::size_t> AccountIndex::positions(std::string_view address) const {
    auto it = by_address_.find(std::string(address));
    if (it == by_address_.end()) return {};
    return it->second;
}

AccountProfile build_profile(const Ledger& ledger, std::string_view address, const EpochConfig& cfg) {
    AccountIndex index(ledger, cfg.include_failed);
    return build_profile(ledger, index, address, cfg);
}

AccountProfile build_profile(const Ledger& ledger, const AccountIndex& index, std::string_view address,
                             const EpochConfig& cfg) {
    cfg.validate();
    auto positions = index.positions(address);
    if (positions.empty()) throw data_error("no activity for account " + std::string(address));

    AccountProfile p;
    p.address = std::string(address);
    p.epoch_seconds = cfg.epoch_seconds;
    p.transaction_count = positions.size();

    const auto& txs = ledger.transactions();
    p.first_timestamp = txs[positions.front()].timestamp;
    p.last_timestamp = txs[positions.back()].timestamp;
    p.first_epoch = p.first_timestamp / cfg.epoch_seconds;
    const std::size_t n_epochs = p.last_timestamp / cfg.epoch_seconds - p.first_epoch + 1;

    p.indegree.assign(n_epochs, 0.0);
    p.outdegree.assign(n_epochs, 0.0);
    p.balance_in.assign(n_epochs, 0.0);
    p.balance_out.assign(n_epochs, 0.0);
    p.max_in_payment.assign(n_epochs, 0.0);
    p.max_out_payment.assign(n_epochs, 0.0);
    p.fee.assign(n_epochs, 0.0);

    std::optional<std::uint64_t> prev_any, prev_in, prev_out;
    for (std::size_t pos : positions) {
        const Transaction& tx = txs[pos];
        const std::size_t e = tx.timestamp / cfg.epoch_seconds - p.first_epoch;
        const double ether = to_ether(tx.value);

        if (prev_any) p.inter_event_times.push_back(static_cast<double>(tx.timestamp - *prev_any));
        prev_any = tx.timestamp;
        p.gas_price_sequence.push_back(tx.gas_price.convert_to<double>() / 1e9);

        if (tx.to && *tx.to == address) {
            p.in_txs.push_back(tx);
            p.indegree[e] += 1.0;
            p.balance_in[e] += ether;
            p.max_in_payment[e] = std::max(p.max_in_payment[e], ether);
            if (prev_in) p.in_inter_event_times.push_back(static_cast<double>(tx.timestamp - *prev_in));
            prev_in = tx.timestamp;
        }
        if (tx.from == address) {
            p.out_txs.push_back(tx);
            p.outdegree[e] += 1.0;
            p.balance_out[e] += ether;
            p.max_out_payment[e] = std::max(p.max_out_payment[e], ether);
            p.fee[e] += to_ether(Wei(tx.gas) * tx.gas_price);
            if (prev_out) p.out_inter_event_times.push_back(static_cast<double>(tx.timestamp - *prev_out));
            prev_out = tx.timestamp;
        }
    }
    p.attractiveness = attractiveness_series(p);
    return p;
}

std::vector<double> attractiveness_series(const AccountProfile& profile) {
    std::vector<double> out(profile.epoch_count(), 0.0);
    if (profile.epoch_seconds == 0) return out;
    std::set<std::string> known;
    std::size_t i = 0;
    const auto& in = profile.in_txs;
    while (i < in.size()) {
        const std::uint64_t epoch = in[i].timestamp / profile.epoch_seconds;
        std::set<std::string> senders;
        for (; i < in.size() && in[i].timestamp / profile.epoch_seconds == epoch; ++i) senders.insert(in[i].from);
        std::size_t fresh = 0;
        for (const auto& s : senders)
            if (!known.contains(s)) ++fresh;
        out[epoch - profile.first_epoch] = static_cast<double>(fresh) / static_cast<double>(senders.size());
        known.insert(senders.begin(), senders.end());
    }
    return out;
}

BurstReport detect_bursts(std::span<const double> series, ThresholdMode mode, double param,
                          std::string series_name) {
    if (series.empty()) throw data_error("burst detection on an empty series" +
                                         (series_name.empty() ? std::string() : " '" + series_name + "'"));
    BurstReport r;
    r.series_name = std::move(series_name);
    if (mode == ThresholdMode::Absolute) {
        r.threshold = param;
    } else {
        const double n = static_cast<double>(series.size());
        double mean = 0.0;
        for (double v : series) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : series) var += (v - mean) * (v - mean);
        r.threshold = mean + param * std::sqrt(var / n);
    }
    std::size_t run = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] > r.threshold) {
            r.event_indices.push_back(i);
            r.longest_run = std::max(r.longest_run, ++run);
        } else {
            run = 0;
        }
    }
    r.count = r.event_indices.size();
    if (r.count) r.first_instance = r.event_indices.front();
    return r;
}

}  // namespace malscope
