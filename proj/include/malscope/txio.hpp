#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "malscope/types.hpp"

namespace malscope {

/// Unsigned 256-bit amount in wei; arithmetic overflow throws.
using Wei = boost::multiprecision::checked_uint256_t;

inline constexpr double kWeiPerEther = 1e18;

double to_ether(const Wei& wei);

/// One external transaction as recorded on the ledger.
struct Transaction {
    std::string hash;                  // 0x + 64 hex digits
    std::uint64_t block_number = 0;
    std::uint64_t timestamp = 0;       // unix seconds
    std::string from;                  // 0x + 40 lowercase hex digits
    std::optional<std::string> to;     // absent for contract creation
    Wei value = 0;
    std::uint64_t gas = 0;
    Wei gas_price = 0;
    bool is_error = false;

    bool operator==(const Transaction&) const = default;
};

struct AccountLabel {
    std::string address;
    Klass klass = Klass::Benign;
    std::string activity{kBenignActivity};
    Source source = Source::Da;

    bool operator==(const AccountLabel&) const = default;
};

using LabelMap = std::map<std::string, AccountLabel>;

/// Time-sorted transactions plus account labels and the snapshot instant
/// used by recency features.
class Ledger {
public:
    Ledger() = default;
    /// Sorts the transactions and validates snapshot_time >= last timestamp.
    Ledger(std::vector<Transaction> txs, LabelMap labels, std::uint64_t snapshot_time);

    const std::vector<Transaction>& transactions() const { return txs_; }
    const LabelMap& labels() const { return labels_; }
    std::uint64_t snapshot_time() const { return snapshot_; }

private:
    std::vector<Transaction> txs_;
    LabelMap labels_;
    std::uint64_t snapshot_ = 0;
};

enum class TxFormat { Jsonl, Csv };

TxFormat parse_tx_format(std::string_view s);

bool is_address(std::string_view s);
bool is_tx_hash(std::string_view s);
/// Lowercases a well-formed address; throws std::invalid_argument otherwise.
std::string normalize_address(std::string_view s);

/// Canonical order: timestamp, then block number, then hash.
void sort_transactions(std::vector<Transaction>& txs);

/// Parses Etherscan-style JSONL (one object per line, integers encoded as
/// strings or numbers) or the equivalent CSV with header
/// hash,blockNumber,timeStamp,from,to,value,gas,gasPrice,isError.
/// Output is sorted. Throws ParseError naming line and field, or Error(Data)
/// on a duplicate hash.
std::vector<Transaction> parse_transactions(std::istream& in, TxFormat format);
std::vector<Transaction> parse_transactions(std::string_view text, TxFormat format);

void write_transactions(std::ostream& out, const std::vector<Transaction>& txs, TxFormat format);

/// Reads address,klass,activity,source. Repeated identical rows collapse;
/// an address carrying two different activities is an error.
LabelMap load_labels(std::istream& in);
void write_labels(std::ostream& out, const LabelMap& labels);

// ---------------------------------------------------------------------------
// Live fetching from an Etherscan-compatible account/txlist endpoint.

struct FetchOptions {
    std::string endpoint;   // e.g. https://api.etherscan.io/api
    std::string api_key;
    std::size_t page_size = 1000;
    std::chrono::milliseconds min_delay{250};
    std::chrono::milliseconds backoff_base{500};
    int max_attempts = 3;          // per request, for transport / HTTP failures
    int max_rate_limit_waits = 8;  // rate-limit responses tolerated per request
    std::chrono::seconds timeout{30};
};

/// Pages through account/txlist until a short page is returned.
std::vector<Transaction> fetch_account_transactions(const FetchOptions& opts,
                                                    std::string_view address);

/// Fetches several accounts and merges them into one deduplicated, sorted list.
std::vector<Transaction> fetch_accounts(const FetchOptions& opts,
                                        const std::vector<std::string>& addresses);

/// Reads the key from the named environment variable; empty when unset.
std::string api_key_from_env(const char* var = "ETHERSCAN_API_KEY");

}  // namespace malscope
