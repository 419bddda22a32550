#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "malscope/error.hpp"
#include "malscope/txio.hpp"

namespace malscope {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw config_error("malformed endpoint URL '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

bool is_rate_limit_message(const json& body) {
    auto it = body.find("result");
    if (it == body.end() || !it->is_string()) return false;
    auto text = it->get<std::string>();
    return text.find("rate limit") != std::string::npos;
}

/// Spaces consecutive requests by at least min_delay.
class Pacer {
public:
    explicit Pacer(std::chrono::milliseconds min_delay) : min_delay_(min_delay) {}
    void wait() {
        auto now = std::chrono::steady_clock::now();
        if (started_ && now < last_ + min_delay_) std::this_thread::sleep_until(last_ + min_delay_);
        last_ = std::chrono::steady_clock::now();
        started_ = true;
    }

private:
    std::chrono::milliseconds min_delay_;
    std::chrono::steady_clock::time_point last_{};
    bool started_ = false;
};

/// One page as raw JSON rows; handles retries and rate limiting.
std::vector<json> fetch_page(httplib::Client& client, const Endpoint& ep, const FetchOptions& opts,
                             std::string_view address, std::size_t page, Pacer& pacer) {
    httplib::Params params{{"module", "account"},       {"action", "txlist"},
                           {"address", std::string(address)}, {"startblock", "0"},
                           {"endblock", "99999999"},     {"page", std::to_string(page)},
                           {"offset", std::to_string(opts.page_size)},
                           {"sort", "asc"},              {"apikey", opts.api_key}};
    std::string query = httplib::detail::params_to_query_str(params);
    std::string target = ep.path + "?" + query;

    int failures = 0;
    int rate_limited = 0;
    auto backoff = [&](int n) {
        std::this_thread::sleep_for(opts.backoff_base * (1LL << std::min(n, 16)));
    };

    for (;;) {
        pacer.wait();
        auto res = client.Get(target);
        std::string why;
        if (!res) {
            why = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429) {
            if (++rate_limited > opts.max_rate_limit_waits)
                throw Error(ErrorKind::Network, "rate limit persisted for page " + std::to_string(page));
            backoff(rate_limited - 1);
            continue;
        } else if (res->status != 200) {
            why = "HTTP " + std::to_string(res->status);
        } else {
            json body;
            try {
                body = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::Network, std::string("unparseable response body: ") + e.what());
            }
            if (is_rate_limit_message(body)) {
                if (++rate_limited > opts.max_rate_limit_waits)
                    throw Error(ErrorKind::Network, "rate limit persisted for page " + std::to_string(page));
                backoff(rate_limited - 1);
                continue;
            }
            auto result = body.find("result");
            if (result == body.end()) throw Error(ErrorKind::Network, "response has no 'result' field");
            if (result->is_array()) return result->get<std::vector<json>>();
            // status "0" with a message such as "No transactions found".
            std::string status = body.value("status", "");
            std::string message = body.value("message", "");
            if (status == "0" && message.find("No transactions") != std::string::npos) return {};
            throw Error(ErrorKind::Network, "endpoint error: " + message + " " + result->dump());
        }
        if (++failures >= opts.max_attempts)
            throw Error(ErrorKind::Network, "request for page " + std::to_string(page) + " failed after " +
                                                std::to_string(failures) + " attempts (" + why + ")");
        backoff(failures - 1);
    }
}

}  // namespace

std::vector<Transaction> fetch_account_transactions(const FetchOptions& opts, std::string_view address) {
    if (opts.page_size == 0) throw config_error("page_size must be positive");
    std::string addr = normalize_address(address);
    Endpoint ep = split_endpoint(opts.endpoint);
    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(opts.timeout);
    client.set_read_timeout(opts.timeout);
    Pacer pacer(opts.min_delay);

    // Concatenate pages as JSONL and hand them to the ordinary parser.
    std::ostringstream lines;
    for (std::size_t page = 1;; ++page) {
        auto rows = fetch_page(client, ep, opts, addr, page, pacer);
        for (const auto& row : rows) lines << row.dump() << '\n';
        if (rows.size() < opts.page_size) break;
    }
    return parse_transactions(lines.str(), TxFormat::Jsonl);
}

std::vector<Transaction> fetch_accounts(const FetchOptions& opts, const std::vector<std::string>& addresses) {
    std::vector<Transaction> all;
    std::unordered_set<std::string> seen;
    for (const auto& address : addresses) {
        for (auto& tx : fetch_account_transactions(opts, address))
            if (seen.insert(tx.hash).second) all.push_back(std::move(tx));
    }
    sort_transactions(all);
    return all;
}

std::string api_key_from_env(const char* var) {
    const char* v = std::getenv(var);
    return v ? std::string(v) : std::string();
}

}  // namespace malscope
