#include "malscope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "archetypes_builtin.hpp"
#include "malscope/error.hpp"
#include "malscope/rng.hpp"

namespace malscope {

namespace {

const std::map<std::string, std::vector<std::string>> kRequired = {
    {"benign_regular", {"span_days", "neighbors", "mean_gap_hours", "inflow_probability", "value_ether", "gas_price_gwei"}},
    {"phishing_like",
     {"campaign_hours", "victims", "victim_value_ether", "cashouts", "cashout_delay_hours", "gas_price_gwei"}},
    {"hack_like",
     {"funding_ether", "idle_days", "theft_ether", "fan_out", "fan_out_spacing_seconds", "gas_price_gwei"}},
    {"gambling_like",
     {"span_days", "period_hours", "period_jitter", "bet_ether", "win_probability", "payout_multiplier",
      "gas_price_gwei"}},
};

const std::vector<std::string> kPoolKeys = {"accounts", "casinos", "links_per_account", "transfers_per_link",
                                            "value_ether", "gas_price_gwei"};

Range range_from_json(const nlohmann::json& j, const std::string& where) {
    Range r;
    if (j.is_number()) r = {j.get<double>(), j.get<double>()};
    else if (j.is_array() && j.size() == 2) r = {j[0].get<double>(), j[1].get<double>()};
    else throw config_error(where + " must be a number or a [lo, hi] pair");
    if (!(r.lo <= r.hi) || r.lo < 0.0) throw config_error(where + " must satisfy 0 <= lo <= hi");
    return r;
}

std::map<std::string, Range> ranges_from_json(const nlohmann::json& j, const std::vector<std::string>& keys,
                                              const std::string& where) {
    std::map<std::string, Range> out;
    for (const auto& k : keys) {
        if (!j.contains(k)) throw config_error(where + " is missing '" + k + "'");
        out[k] = range_from_json(j.at(k), where + "." + k);
    }
    return out;
}

std::string hex(std::uint64_t v, int digits) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s(static_cast<std::size_t>(digits), '0');
    for (int i = digits - 1; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = kHex[v & 0xf];
        v >>= 4;
    }
    return s;
}

class Builder {
public:
    Builder(const ArchetypeLibrary& lib, std::uint64_t seed) : lib_(lib), seed_(seed), rng_(derive_seed(seed, "synth")) {}

    Rng& rng() { return rng_; }

    double draw(const Range& r) { return r.lo == r.hi ? r.lo : rng_.uniform(r.lo, r.hi); }
    std::size_t draw_count(const Range& r) {
        const auto lo = static_cast<std::uint64_t>(std::llround(r.lo));
        const auto hi = static_cast<std::uint64_t>(std::llround(r.hi));
        return static_cast<std::size_t>(lo + rng_.index(hi - lo + 1));
    }
    // Log-uniform amounts spread small and large payments evenly across scales.
    double draw_amount(const Range& r) {
        if (r.lo <= 0.0 || r.lo == r.hi) return draw(r);
        return std::exp(rng_.uniform(std::log(r.lo), std::log(r.hi)));
    }

    std::string fresh_address() {
        for (;;) {
            std::string a = "0x" + hex(rng_.bits(), 16) + hex(rng_.bits(), 16) + hex(rng_.bits(), 8);
            if (used_.insert(a).second) return a;
        }
    }

    void transfer(const std::string& from, const std::string& to, std::uint64_t t, double ether, double gwei) {
        Transaction tx;
        const std::uint64_t n = counter_++;
        tx.hash = "0x" + hex(derive_seed(seed_, n * 4), 16) + hex(derive_seed(seed_, n * 4 + 1), 16) +
                  hex(derive_seed(seed_, n * 4 + 2), 16) + hex(derive_seed(seed_, n * 4 + 3), 16);
        tx.timestamp = t;
        tx.block_number = 10'000'000 + (t - lib_.start_time) / 13;
        tx.from = from;
        tx.to = to;
        tx.value = Wei(static_cast<std::uint64_t>(std::llround(std::max(ether, 0.0) * 1e9))) * 1'000'000'000u;
        tx.gas = 21000;
        tx.gas_price = Wei(static_cast<std::uint64_t>(std::llround(gwei * 1e3))) * 1'000'000u;
        txs_.push_back(std::move(tx));
    }

    std::uint64_t time_in(double start_days, double span_days) {
        return lib_.start_time + static_cast<std::uint64_t>(std::llround((start_days + rng_.uniform() * span_days) * 86400.0));
    }

    std::vector<Transaction> take() { return std::move(txs_); }

private:
    const ArchetypeLibrary& lib_;
    std::uint64_t seed_;
    Rng rng_;
    std::set<std::string> used_;
    std::vector<Transaction> txs_;
    std::uint64_t counter_ = 0;
};

struct Pool {
    std::vector<std::string> accounts;
    std::vector<std::string> casinos;
};

Pool build_pool(Builder& b, const ArchetypeLibrary& lib) {
    const auto& p = lib.pool;
    Pool pool;
    const std::size_t n = b.draw_count(p.at("accounts"));
    const std::size_t c = b.draw_count(p.at("casinos"));
    for (std::size_t i = 0; i < n; ++i) pool.accounts.push_back(b.fresh_address());
    for (std::size_t i = 0; i < c; ++i) pool.casinos.push_back(b.fresh_address());
    if (n < 2) return pool;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t links = b.draw_count(p.at("links_per_account"));
        for (std::size_t l = 0; l < links; ++l) {
            std::size_t j = b.rng().index(n - 1);
            if (j >= i) ++j;
            const std::size_t k = b.draw_count(p.at("transfers_per_link"));
            for (std::size_t t = 0; t < k; ++t) {
                const bool forward = b.rng().bernoulli(0.5);
                b.transfer(forward ? pool.accounts[i] : pool.accounts[j], forward ? pool.accounts[j] : pool.accounts[i],
                           b.time_in(0.0, lib.horizon_days), b.draw_amount(p.at("value_ether")),
                           b.draw(p.at("gas_price_gwei")));
            }
        }
    }
    return pool;
}

const std::string& pick(Builder& b, const std::vector<std::string>& v) { return v[b.rng().index(v.size())]; }

void benign_regular(Builder& b, const ArchetypeLibrary& lib, const Pool& pool, const std::string& me) {
    const auto& p = lib.params("benign_regular");
    const double span = std::min(b.draw(p.at("span_days")), lib.horizon_days);
    const double start = b.rng().uniform() * (lib.horizon_days - span);
    std::vector<std::string> neighbors;
    const std::size_t k = std::max<std::size_t>(1, std::min(b.draw_count(p.at("neighbors")), pool.accounts.size()));
    std::vector<std::string> shuffled = pool.accounts;
    b.rng().shuffle(shuffled.begin(), shuffled.end());
    neighbors.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(k));
    const double mean_gap = b.draw(p.at("mean_gap_hours")) * 3600.0;
    const double p_in = b.draw(p.at("inflow_probability"));
    const double end = (start + span) * 86400.0;
    double t = start * 86400.0;
    // the first transfer funds the account
    bool first = true;
    while (true) {
        t += -std::log(1.0 - b.rng().uniform()) * mean_gap;
        if (t >= end) break;
        const std::string& other = pick(b, neighbors);
        const bool inflow = first || b.rng().bernoulli(p_in);
        first = false;
        const auto ts = lib.start_time + static_cast<std::uint64_t>(std::llround(t));
        const double v = b.draw_amount(p.at("value_ether"));
        const double g = b.draw(p.at("gas_price_gwei"));
        if (inflow) b.transfer(other, me, ts, v, g);
        else b.transfer(me, other, ts, v, g);
    }
    if (first) b.transfer(pick(b, neighbors), me, lib.start_time + static_cast<std::uint64_t>(start * 86400.0),
                          b.draw_amount(p.at("value_ether")), b.draw(p.at("gas_price_gwei")));
}

void phishing_like(Builder& b, const ArchetypeLibrary& lib, const Pool& pool, const std::string& me) {
    const auto& p = lib.params("phishing_like");
    const double campaign = b.draw(p.at("campaign_hours")) * 3600.0;
    const double start = b.rng().uniform() * (lib.horizon_days * 86400.0 - campaign - 3.0 * 86400.0);
    const std::size_t victims = b.draw_count(p.at("victims"));
    double total = 0.0;
    double last = start;
    for (std::size_t i = 0; i < victims; ++i) {
        const double t = start + b.rng().uniform() * campaign;
        last = std::max(last, t);
        const double v = b.draw_amount(p.at("victim_value_ether"));
        total += v;
        b.transfer(b.fresh_address(), me, lib.start_time + static_cast<std::uint64_t>(std::llround(t)), v,
                   b.draw(p.at("gas_price_gwei")));
    }
    const std::size_t cashouts = std::max<std::size_t>(1, b.draw_count(p.at("cashouts")));
    double t = last;
    for (std::size_t i = 0; i < cashouts; ++i) {
        t += b.draw(p.at("cashout_delay_hours")) * 3600.0;
        b.transfer(me, pick(b, pool.accounts), lib.start_time + static_cast<std::uint64_t>(std::llround(t)),
                   0.95 * total / static_cast<double>(cashouts), b.draw(p.at("gas_price_gwei")));
    }
}

void hack_like(Builder& b, const ArchetypeLibrary& lib, const Pool& pool, const std::string& me) {
    const auto& p = lib.params("hack_like");
    const double idle = b.draw(p.at("idle_days"));
    const double start = b.rng().uniform() * std::max(0.0, lib.horizon_days - idle - 1.0);
    const auto t0 = lib.start_time + static_cast<std::uint64_t>(std::llround(start * 86400.0));
    b.transfer(pick(b, pool.accounts), me, t0, b.draw_amount(p.at("funding_ether")), b.draw(p.at("gas_price_gwei")));
    // theft and fan-out share one epoch
    const std::uint64_t e = lib.epoch_seconds;
    const std::uint64_t epoch_start = (t0 + static_cast<std::uint64_t>(std::llround(idle * 86400.0))) / e * e;
    const std::size_t fan = std::max<std::size_t>(1, b.draw_count(p.at("fan_out")));
    const double spacing = b.draw(p.at("fan_out_spacing_seconds"));
    const double budget = static_cast<double>(e) - 2.0;
    const double step = std::min(spacing, budget / static_cast<double>(fan + 1));
    const double theft = b.draw_amount(p.at("theft_ether"));
    b.transfer(b.fresh_address(), me, epoch_start, theft, b.draw(p.at("gas_price_gwei")));
    for (std::size_t i = 0; i < fan; ++i) {
        const auto t = epoch_start + 1 + static_cast<std::uint64_t>(std::floor(step * static_cast<double>(i + 1)));
        b.transfer(me, b.fresh_address(), t, 0.99 * theft / static_cast<double>(fan), b.draw(p.at("gas_price_gwei")));
    }
}

void gambling_like(Builder& b, const ArchetypeLibrary& lib, const Pool& pool, const std::string& me) {
    const auto& p = lib.params("gambling_like");
    const std::vector<std::string>& houses = pool.casinos.empty() ? pool.accounts : pool.casinos;
    const std::string& casino = pick(b, houses);
    const double span = std::min(b.draw(p.at("span_days")), lib.horizon_days);
    const double start = b.rng().uniform() * (lib.horizon_days - span) * 86400.0;
    const double period = b.draw(p.at("period_hours")) * 3600.0;
    const double jitter = b.draw(p.at("period_jitter"));
    const double end = start + span * 86400.0;
    b.transfer(pick(b, pool.accounts), me, lib.start_time + static_cast<std::uint64_t>(std::llround(start)),
               b.draw(p.at("bet_ether")) * 3.0, b.draw(p.at("gas_price_gwei")));
    for (double t = start + period; t < end; t += period) {
        const double at = t + (b.rng().uniform() * 2.0 - 1.0) * jitter * period;
        const auto ts = lib.start_time + static_cast<std::uint64_t>(std::llround(at));
        const double bet = b.draw(p.at("bet_ether"));
        b.transfer(me, casino, ts, bet, b.draw(p.at("gas_price_gwei")));
        if (b.rng().bernoulli(b.draw(p.at("win_probability"))))
            b.transfer(casino, me, ts + 60 + b.rng().index(540), bet * b.draw(p.at("payout_multiplier")),
                       b.draw(p.at("gas_price_gwei")));
    }
}

}  // namespace

ArchetypeLibrary ArchetypeLibrary::from_json(const nlohmann::json& j) {
    ArchetypeLibrary lib;
    lib.version = j.value("version", std::string{});
    if (lib.version != kArchetypeVersion)
        throw config_error("unsupported archetype file version '" + lib.version + "' (expected " + kArchetypeVersion + ")");
    lib.start_time = j.at("start_time").get<std::uint64_t>();
    lib.horizon_days = j.at("horizon_days").get<double>();
    lib.epoch_seconds = j.at("epoch_seconds").get<std::uint64_t>();
    if (lib.horizon_days < 2.0 || lib.epoch_seconds == 0) throw config_error("archetype horizon or epoch is invalid");
    lib.pool = ranges_from_json(j.at("pool"), kPoolKeys, "pool");
    for (const auto& [name, keys] : kRequired) {
        if (!j.at("archetypes").contains(name)) throw config_error("archetype file lacks '" + name + "'");
        lib.archetypes[name] = ranges_from_json(j.at("archetypes").at(name), keys, name);
    }
    return lib;
}

nlohmann::json ArchetypeLibrary::to_json() const {
    auto ranges = [](const std::map<std::string, Range>& m) {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& [k, r] : m) o[k] = {r.lo, r.hi};
        return o;
    };
    nlohmann::json a = nlohmann::json::object();
    for (const auto& [name, m] : archetypes) a[name] = ranges(m);
    return {{"version", version},
            {"start_time", start_time},
            {"horizon_days", horizon_days},
            {"epoch_seconds", epoch_seconds},
            {"pool", ranges(pool)},
            {"archetypes", a}};
}

ArchetypeLibrary ArchetypeLibrary::builtin() { return from_json(nlohmann::json::parse(kBuiltinArchetypes)); }

const std::map<std::string, Range>& ArchetypeLibrary::params(const std::string& archetype) const {
    auto it = archetypes.find(archetype);
    if (it == archetypes.end()) throw config_error("unknown archetype '" + archetype + "'");
    return it->second;
}

SynthPlan SynthPlan::from_json(const nlohmann::json& j) {
    SynthPlan plan;
    for (const auto& e : j.at("entries")) {
        PlanEntry p;
        p.archetype = e.at("archetype").get<std::string>();
        if (!kRequired.contains(p.archetype)) throw config_error("unknown archetype '" + p.archetype + "'");
        p.count = e.at("count").get<std::size_t>();
        p.klass = e.contains("klass") ? parse_klass(e["klass"].get<std::string>())
                                      : (p.archetype == "benign_regular" ? Klass::Benign : Klass::Malicious);
        p.activity = e.value("activity", p.klass == Klass::Benign ? std::string(kBenignActivity) : p.archetype);
        if ((p.klass == Klass::Benign) != (p.activity == kBenignActivity))
            throw config_error("plan entry '" + p.activity + "': benign accounts carry the activity 'benign'");
        if (e.contains("source")) p.source = parse_source(e["source"].get<std::string>());
        if (e.contains("params")) {
            const auto& keys = kRequired.at(p.archetype);
            for (const auto& [k, v] : e["params"].items()) {
                if (std::find(keys.begin(), keys.end(), k) == keys.end())
                    throw config_error("archetype '" + p.archetype + "' has no parameter '" + k + "'");
                p.overrides[k] = range_from_json(v, p.activity + ".params." + k);
            }
        }
        plan.entries.push_back(std::move(p));
    }
    return plan;
}

nlohmann::json SynthPlan::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json o = {{"activity", e.activity},
                            {"archetype", e.archetype},
                            {"count", e.count},
                            {"klass", to_string(e.klass)},
                            {"source", to_string(e.source)}};
        for (const auto& [k, r] : e.overrides) o["params"][k] = {r.lo, r.hi};
        arr.push_back(std::move(o));
    }
    return {{"entries", arr}};
}

std::size_t SynthPlan::total() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
}

SynthLedger generate_ledger(const SynthPlan& plan, const ArchetypeLibrary& lib, std::uint64_t seed) {
    if (plan.total() == 0) throw config_error("synthetic plan contains zero accounts");
    Builder b(lib, seed);
    const Pool pool = build_pool(b, lib);
    if (pool.accounts.empty()) throw config_error("synthetic background pool is empty");

    SynthLedger out;
    LabelMap labels;
    for (const auto& e : plan.entries) {
        ArchetypeLibrary local = lib;
        for (const auto& [k, r] : e.overrides) local.archetypes[e.archetype][k] = r;
        for (std::size_t i = 0; i < e.count; ++i) {
            const std::string me = b.fresh_address();
            if (e.archetype == "benign_regular") benign_regular(b, local, pool, me);
            else if (e.archetype == "phishing_like") phishing_like(b, local, pool, me);
            else if (e.archetype == "hack_like") hack_like(b, local, pool, me);
            else if (e.archetype == "gambling_like") gambling_like(b, local, pool, me);
            else throw config_error("unknown archetype '" + e.archetype + "'");
            labels[me] = AccountLabel{me, e.klass, e.activity, e.source};
            out.archetype_of[me] = e.archetype;
        }
    }
    auto txs = b.take();
    std::uint64_t last = 0;
    for (const auto& tx : txs) last = std::max(last, tx.timestamp);
    out.ledger = Ledger(std::move(txs), std::move(labels), last + 86400);
    return out;
}

SynthLedger generate_ledger(const SynthPlan& plan, std::uint64_t seed) {
    return generate_ledger(plan, ArchetypeLibrary::builtin(), seed);
}

}  // namespace malscope
