#include "malscope/splits.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "malscope/error.hpp"
#include "malscope/rng.hpp"

namespace malscope {

std::string_view to_string(SplitConfig c) {
    static constexpr std::string_view names[] = {"C0", "C1", "C2", "C3", "C4", "C5"};
    return names[static_cast<int>(c)];
}

SplitConfig parse_split_config(std::string_view s) {
    for (int i = 0; i <= 5; ++i)
        if (to_string(static_cast<SplitConfig>(i)) == s) return static_cast<SplitConfig>(i);
    throw config_error("unknown split configuration '" + std::string(s) + "' (expected C0..C5)");
}

std::size_t train_share(std::size_t n) { return (4 * n + 4) / 5; }

namespace {

void check_base_dataset(const LabeledDataset& data) {
    if (data.size() < 5) throw data_error("dataset too small to split (" + std::to_string(data.size()) + " rows)");
    if (data.count(Klass::Malicious) == 0 || data.count(Klass::Benign) == 0)
        throw data_error("dataset must contain both malicious and benign accounts");
}

bool is_focus(const LabeledRow& r, std::string_view focus) {
    return r.klass == Klass::Malicious && r.activity == focus;
}

}  // namespace

SplitPair make_c0(const LabeledDataset& data, std::uint64_t seed) {
    check_base_dataset(data);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(idx.begin(), idx.end());
    const std::size_t n_train = train_share(idx.size());
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> ts(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(tr.begin(), tr.end());
    std::sort(ts.begin(), ts.end());
    return {SplitConfig::C0, {}, seed, data.subset(tr), data.subset(ts)};
}

SplitPair derive_config(const SplitPair& base, SplitConfig config, std::string_view focus) {
    if (base.config != SplitConfig::C0) throw config_error("derived configurations start from a C0 split");
    if (config == SplitConfig::C5) throw config_error("C5 is stratified and built with make_c5, not derived");
    if (config != SplitConfig::C0 && base.train.count_activity(focus) + base.test.count_activity(focus) == 0)
        throw data_error("focus activity '" + std::string(focus) + "' is absent from the split");

    auto not_focus = [&](const LabeledRow& r) { return !is_focus(r, focus); };
    SplitPair out{config, std::string(focus), base.seed, base.train, base.test};
    switch (config) {
        case SplitConfig::C0: break;
        case SplitConfig::C1: out.test = base.test.filter(not_focus); break;
        case SplitConfig::C2: out.train = base.train.filter(not_focus); break;
        case SplitConfig::C3:
            out.train = base.train.filter(not_focus);
            out.test = base.test.filter(not_focus);
            break;
        case SplitConfig::C4:
            out.train = base.train.merged(base.test.filter([&](const LabeledRow& r) { return is_focus(r, focus); }));
            out.test = base.test.filter(not_focus);
            break;
        case SplitConfig::C5: break;
    }
    return out;
}

SplitPair make_c5(const LabeledDataset& data, std::uint64_t seed) {
    check_base_dataset(data);
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data.rows()[i];
        strata[r.klass == Klass::Malicious ? r.activity : std::string(kBenignActivity)].push_back(i);
    }
    std::vector<std::size_t> tr, ts;
    for (auto& [name, idx] : strata) {
        Rng rng(derive_seed(seed, name));
        rng.shuffle(idx.begin(), idx.end());
        const std::size_t n_train = train_share(idx.size());
        tr.insert(tr.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        ts.insert(ts.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(tr.begin(), tr.end());
    std::sort(ts.begin(), ts.end());
    return {SplitConfig::C5, {}, seed, data.subset(tr), data.subset(ts)};
}

SplitPair make_split(const LabeledDataset& data, SplitConfig config, std::string_view focus, std::uint64_t seed) {
    if (config == SplitConfig::C5) return make_c5(data, seed);
    auto base = make_c0(data, seed);
    if (config == SplitConfig::C0) return base;
    return derive_config(base, config, focus);
}

SplitPair make_newdata_eval(const LabeledDataset& original, const LabeledDataset& new_malicious,
                            const SplitPair& base) {
    if (new_malicious.empty()) throw data_error("new malicious dataset is empty");
    std::set<std::string> common;
    {
        const auto known = original.addresses();
        for (const auto& a : new_malicious.addresses())
            if (known.contains(a)) common.insert(a);
    }
    auto overlap = [&](const LabeledRow& r) { return common.contains(r.address); };

    SplitPair out;
    out.config = base.config;
    out.focus_activity = base.focus_activity;
    out.seed = base.seed;
    out.train = base.train.filter([&](const LabeledRow& r) { return !overlap(r); });
    out.test = base.test.filter([](const LabeledRow& r) { return r.klass == Klass::Benign; });
    for (const auto& r : new_malicious.rows()) {
        if (r.klass != Klass::Malicious) continue;
        LabeledRow row = r;
        row.source = Source::Db;
        out.test.add(std::move(row));
    }
    out.test = out.test.merged(base.train.filter(overlap));

    for (const auto& r : out.train.rows())
        for (const auto& t : out.test.rows())
            if (r.address == t.address) throw std::logic_error("new-data split leaks address " + r.address);
    return out;
}

SplitManifest manifest_of(const SplitPair& split) {
    SplitManifest m{split.config, split.focus_activity, split.seed, {}, {}};
    for (const auto& r : split.train.rows()) m.train_addresses.push_back(r.address);
    for (const auto& r : split.test.rows()) m.test_addresses.push_back(r.address);
    return m;
}

void write_manifest(std::ostream& out, const SplitManifest& m) {
    nlohmann::ordered_json j;
    j["config"] = std::string(to_string(m.config));
    j["focus_activity"] = m.focus_activity;
    j["seed"] = m.seed;
    j["train_addresses"] = m.train_addresses;
    j["test_addresses"] = m.test_addresses;
    out << j.dump(2) << '\n';
}

SplitManifest read_manifest(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        SplitManifest m;
        m.config = parse_split_config(j.at("config").get<std::string>());
        m.focus_activity = j.at("focus_activity").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.train_addresses = j.at("train_addresses").get<std::vector<std::string>>();
        m.test_addresses = j.at("test_addresses").get<std::vector<std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Input, std::string("malformed split manifest: ") + e.what());
    }
}

SplitPair materialize(const SplitManifest& m, const LabeledDataset& data) {
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < data.size(); ++i) where.emplace(data.rows()[i].address, i);
    auto pick = [&](const std::vector<std::string>& addrs) {
        std::vector<std::size_t> idx;
        for (const auto& a : addrs) {
            auto it = where.find(a);
            if (it == where.end()) throw data_error("manifest address " + a + " is not in the dataset");
            idx.push_back(it->second);
        }
        return data.subset(idx);
    };
    return {m.config, m.focus_activity, m.seed, pick(m.train_addresses), pick(m.test_addresses)};
}

}  // namespace malscope
