#include "malscope/txio.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "malscope/csv.hpp"
#include "malscope/error.hpp"

namespace malscope {

using nlohmann::json;

double to_ether(const Wei& wei) { return wei.convert_to<double>() / kWeiPerEther; }

namespace {

bool is_hex_body(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c) != 0; });
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::uint64_t parse_u64(std::string_view s, std::size_t line, const char* field) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw ParseError(line, field, "expected unsigned integer, got '" + std::string(s) + "'");
    if (s.size() > 20) throw ParseError(line, field, "integer out of range");
    try {
        std::size_t pos = 0;
        auto v = std::stoull(std::string(s), &pos, 10);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, field, "integer out of range");
    }
}

Wei parse_wei(std::string_view s, std::size_t line, const char* field) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw ParseError(line, field, "expected unsigned integer, got '" + std::string(s) + "'");
    try {
        return Wei(std::string(s));
    } catch (const std::exception&) {
        throw ParseError(line, field, "exceeds 256 bits");
    }
}

bool parse_flag(std::string_view s, std::size_t line, const char* field) {
    if (s == "0" || s == "false") return false;
    if (s == "1" || s == "true") return true;
    throw ParseError(line, field, "expected 0 or 1, got '" + std::string(s) + "'");
}

/// Raw string view of a record, independent of the on-disk format.
struct RawRecord {
    std::string hash, block, ts, from, to, value, gas, gas_price, is_error;
};

Transaction build(const RawRecord& r, std::size_t line) {
    Transaction tx;
    if (!is_tx_hash(r.hash)) throw ParseError(line, "hash", "malformed transaction hash '" + r.hash + "'");
    tx.hash = lower(r.hash);
    tx.block_number = parse_u64(r.block, line, "blockNumber");
    tx.timestamp = parse_u64(r.ts, line, "timeStamp");
    if (tx.timestamp == 0) throw ParseError(line, "timeStamp", "timestamp must be positive");
    if (!is_address(r.from)) throw ParseError(line, "from", "malformed address '" + r.from + "'");
    tx.from = lower(r.from);
    if (!r.to.empty()) {
        if (!is_address(r.to)) throw ParseError(line, "to", "malformed address '" + r.to + "'");
        tx.to = lower(r.to);
    }
    tx.value = parse_wei(r.value, line, "value");
    tx.gas = parse_u64(r.gas, line, "gas");
    tx.gas_price = parse_wei(r.gas_price, line, "gasPrice");
    tx.is_error = r.is_error.empty() ? false : parse_flag(r.is_error, line, "isError");
    return tx;
}

std::string json_field(const json& obj, const char* key, std::size_t line, bool required) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) throw ParseError(line, key, "missing");
        return {};
    }
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
    if (it->is_boolean()) return it->get<bool>() ? "1" : "0";
    throw ParseError(line, key, "expected string or unsigned integer");
}

const std::vector<std::string> kCsvHeader = {"hash", "blockNumber", "timeStamp", "from", "to",
                                             "value", "gas", "gasPrice", "isError"};

}  // namespace

bool is_address(std::string_view s) {
    return s.size() == 42 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X') && is_hex_body(s.substr(2));
}

bool is_tx_hash(std::string_view s) {
    return s.size() == 66 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X') && is_hex_body(s.substr(2));
}

std::string normalize_address(std::string_view s) {
    if (!is_address(s)) throw std::invalid_argument("malformed address '" + std::string(s) + "'");
    return lower(s);
}

TxFormat parse_tx_format(std::string_view s) {
    if (s == "jsonl") return TxFormat::Jsonl;
    if (s == "csv") return TxFormat::Csv;
    throw config_error("unknown transaction format '" + std::string(s) + "' (expected jsonl or csv)");
}

void sort_transactions(std::vector<Transaction>& txs) {
    std::stable_sort(txs.begin(), txs.end(), [](const Transaction& a, const Transaction& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        if (a.block_number != b.block_number) return a.block_number < b.block_number;
        return a.hash < b.hash;
    });
}

Ledger::Ledger(std::vector<Transaction> txs, LabelMap labels, std::uint64_t snapshot_time)
    : txs_(std::move(txs)), labels_(std::move(labels)), snapshot_(snapshot_time) {
    sort_transactions(txs_);
    if (!txs_.empty() && snapshot_ < txs_.back().timestamp)
        throw data_error("snapshot time " + std::to_string(snapshot_) +
                         " precedes the last transaction at " + std::to_string(txs_.back().timestamp));
    std::unordered_set<std::string> seen;
    for (const auto& tx : txs_)
        if (!seen.insert(tx.hash).second) throw data_error("duplicate transaction hash " + tx.hash);
}

std::vector<Transaction> parse_transactions(std::istream& in, TxFormat format) {
    std::vector<Transaction> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;

    auto add = [&](Transaction tx, std::size_t ln) {
        if (!seen.insert(tx.hash).second) throw ParseError(ln, "hash", "duplicate transaction hash " + tx.hash);
        out.push_back(std::move(tx));
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        if (format == TxFormat::Jsonl) {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(lineno, "<record>", std::string("invalid JSON: ") + e.what());
            }
            if (!obj.is_object()) throw ParseError(lineno, "<record>", "expected a JSON object");
            RawRecord r{json_field(obj, "hash", lineno, true),
                        json_field(obj, "blockNumber", lineno, true),
                        json_field(obj, "timeStamp", lineno, true),
                        json_field(obj, "from", lineno, true),
                        json_field(obj, "to", lineno, false),
                        json_field(obj, "value", lineno, true),
                        json_field(obj, "gas", lineno, true),
                        json_field(obj, "gasPrice", lineno, true),
                        json_field(obj, "isError", lineno, false)};
            add(build(r, lineno), lineno);
        } else {
            std::vector<std::string> fields;
            try {
                fields = csv::split_line(line);
            } catch (const std::invalid_argument& e) {
                throw ParseError(lineno, "<record>", e.what());
            }
            if (header.empty()) {
                if (fields != kCsvHeader)
                    throw ParseError(lineno, "<header>", "expected header hash,blockNumber,timeStamp,from,to,value,gas,gasPrice,isError");
                header = fields;
                continue;
            }
            if (fields.size() != kCsvHeader.size())
                throw ParseError(lineno, "<record>", "expected 9 fields, got " + std::to_string(fields.size()));
            RawRecord r{fields[0], fields[1], fields[2], fields[3], fields[4],
                        fields[5], fields[6], fields[7], fields[8]};
            add(build(r, lineno), lineno);
        }
    }
    sort_transactions(out);
    return out;
}

std::vector<Transaction> parse_transactions(std::string_view text, TxFormat format) {
    std::istringstream in{std::string(text)};
    return parse_transactions(in, format);
}

void write_transactions(std::ostream& out, const std::vector<Transaction>& txs, TxFormat format) {
    if (format == TxFormat::Csv) out << csv::join(kCsvHeader) << '\n';
    for (const auto& tx : txs) {
        std::string value = tx.value.str();
        std::string gas_price = tx.gas_price.str();
        if (format == TxFormat::Jsonl) {
            // Key order is fixed so that output is byte-stable.
            json obj = json::object();
            obj["blockNumber"] = std::to_string(tx.block_number);
            obj["timeStamp"] = std::to_string(tx.timestamp);
            obj["hash"] = tx.hash;
            obj["from"] = tx.from;
            obj["to"] = tx.to.value_or("");
            obj["value"] = value;
            obj["gas"] = std::to_string(tx.gas);
            obj["gasPrice"] = gas_price;
            obj["isError"] = tx.is_error ? "1" : "0";
            out << obj.dump() << '\n';
        } else {
            out << csv::join({tx.hash, std::to_string(tx.block_number), std::to_string(tx.timestamp),
                              tx.from, tx.to.value_or(""), value, std::to_string(tx.gas), gas_price,
                              tx.is_error ? "1" : "0"})
                << '\n';
        }
    }
}

LabelMap load_labels(std::istream& in) {
    LabelMap labels;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        try {
            f = csv::split_line(line);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, "<record>", e.what());
        }
        if (!have_header) {
            if (f != std::vector<std::string>{"address", "klass", "activity", "source"})
                throw ParseError(lineno, "<header>", "expected header address,klass,activity,source");
            have_header = true;
            continue;
        }
        if (f.size() != 4) throw ParseError(lineno, "<record>", "expected 4 fields");
        AccountLabel label;
        if (!is_address(f[0])) throw ParseError(lineno, "address", "malformed address '" + f[0] + "'");
        label.address = lower(f[0]);
        try {
            label.klass = parse_klass(f[1]);
        } catch (const Error& e) {
            throw ParseError(lineno, "klass", e.what());
        }
        label.activity = f[2];
        try {
            label.source = parse_source(f[3]);
        } catch (const Error& e) {
            throw ParseError(lineno, "source", e.what());
        }
        if (label.activity.empty()) throw ParseError(lineno, "activity", "empty activity");
        if (label.klass == Klass::Benign && label.activity != kBenignActivity)
            throw ParseError(lineno, "activity", "benign accounts must carry activity 'benign'");
        if (label.klass == Klass::Malicious && label.activity == kBenignActivity)
            throw ParseError(lineno, "activity", "malicious account labeled with activity 'benign'");

        auto [it, inserted] = labels.emplace(label.address, label);
        if (!inserted && it->second.activity != label.activity) {
            throw data_error("address " + label.address + " carries two labels ('" + it->second.activity +
                             "' and '" + label.activity + "'); each account must have exactly one activity");
        }
    }
    if (!have_header) throw ParseError(1, "<header>", "missing header address,klass,activity,source");
    return labels;
}

void write_labels(std::ostream& out, const LabelMap& labels) {
    out << "address,klass,activity,source\n";
    for (const auto& [addr, l] : labels)
        out << csv::join({addr, std::string(to_string(l.klass)), l.activity, std::string(to_string(l.source))})
            << '\n';
}

}  // namespace malscope
