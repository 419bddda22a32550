#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "malscope/txio.hpp"

namespace malscope {

struct EpochConfig {
    std::uint64_t epoch_seconds = 3600;
    /// Burst threshold = mean + burst_sigma * population stddev.
    double burst_sigma = 2.0;
    /// Failed (isError) transactions are dropped from every series unless set.
    bool include_failed = false;

    void validate() const;
};

/// Per-account activity series. Epoch series cover the account's first to
/// last active epoch contiguously, zero-filled; index 0 is the first epoch.
struct AccountProfile {
    std::string address;
    std::uint64_t epoch_seconds = 0;
    std::uint64_t first_epoch = 0;
    std::uint64_t first_timestamp = 0;
    std::uint64_t last_timestamp = 0;

    std::vector<Transaction> in_txs;   // time-sorted
    std::vector<Transaction> out_txs;  // time-sorted
    std::size_t transaction_count = 0; // distinct transactions (a self-transfer counts once)

    std::vector<double> indegree;
    std::vector<double> outdegree;
    std::vector<double> balance_in;       // ether received
    std::vector<double> balance_out;      // ether sent
    std::vector<double> max_in_payment;   // largest single receipt, ether
    std::vector<double> max_out_payment;  // largest single payment, ether
    std::vector<double> fee;              // gas * gasPrice over sent transactions, ether
    std::vector<double> attractiveness;

    std::vector<double> inter_event_times;      // merged in+out stream, seconds
    std::vector<double> in_inter_event_times;   // between consecutive receipts
    std::vector<double> out_inter_event_times;  // between consecutive sends
    std::vector<double> gas_price_sequence;     // gwei, merged stream order

    std::size_t epoch_count() const { return indegree.size(); }
    /// Epoch span last - first (0 for a single-epoch account).
    std::uint64_t active_epochs() const { return indegree.empty() ? 0 : indegree.size() - 1; }
};

/// Address -> positions of its transactions in a ledger.
class AccountIndex {
public:
    AccountIndex(const Ledger& ledger, bool include_failed);

    /// Ledger positions in time order; empty when the address never transacted.
    std::span<const std::size_t> positions(std::string_view address) const;

private:
    std::unordered_map<std::string, std::vector<std::size_t>> by_address_;
};

AccountProfile build_profile(const Ledger& ledger, std::string_view address, const EpochConfig& cfg);
AccountProfile build_profile(const Ledger& ledger, const AccountIndex& index, std::string_view address,
                             const EpochConfig& cfg);

/// Fraction of each epoch's distinct senders never seen in an earlier epoch;
/// 0 for epochs without receipts.
std::vector<double> attractiveness_series(const AccountProfile& profile);

enum class ThresholdMode { Sigma, Absolute };

struct BurstReport {
    std::string series_name;
    double threshold = 0.0;
    std::vector<std::size_t> event_indices;
    std::size_t count = 0;
    std::size_t longest_run = 0;
    std::optional<std::size_t> first_instance;
};

/// Strict exceedances of a threshold. Sigma mode: mean + param * population
/// stddev; absolute mode: param. Throws on an empty series.
BurstReport detect_bursts(std::span<const double> series, ThresholdMode mode, double param,
                          std::string series_name = {});

}  // namespace malscope
