#include "malscope/ts_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "malscope/csv.hpp"
#include "malscope/error.hpp"

namespace malscope::ts {

namespace {

std::string fmt(double v) { return csv::format_double(v); }

struct ParsedId {
    std::string name;
    std::map<std::string, std::string> args;
};

ParsedId split_id(std::string_view id) {
    ParsedId p;
    auto open = id.find('(');
    if (open == std::string_view::npos) {
        p.name = std::string(id);
        return p;
    }
    if (id.back() != ')') throw config_error("malformed formula id '" + std::string(id) + "'");
    p.name = std::string(id.substr(0, open));
    std::string_view body = id.substr(open + 1, id.size() - open - 2);
    while (!body.empty()) {
        auto comma = body.find(',');
        std::string_view item = body.substr(0, comma);
        auto eq = item.find('=');
        if (eq == std::string_view::npos) throw config_error("malformed formula id '" + std::string(id) + "'");
        p.args.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    return p;
}

const std::string& arg(const ParsedId& p, const char* key, std::string_view id) {
    auto it = p.args.find(key);
    if (it == p.args.end())
        throw config_error("formula id '" + std::string(id) + "' is missing argument '" + key + "'");
    return it->second;
}

double arg_double(const ParsedId& p, const char* key, std::string_view id) {
    try {
        return csv::parse_double(arg(p, key, id));
    } catch (const std::invalid_argument&) {
        throw config_error("formula id '" + std::string(id) + "': bad value for '" + key + "'");
    }
}

int arg_int(const ParsedId& p, const char* key, std::string_view id) {
    double v = arg_double(p, key, id);
    if (v != std::floor(v)) throw config_error("formula id '" + std::string(id) + "': '" + key + "' must be integral");
    return static_cast<int>(v);
}

std::vector<double> sorted_copy(std::span<const double> s) {
    std::vector<double> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

std::string Formula::id() const {
    switch (kind) {
        case Kind::Quantile: return "quantile(q=" + fmt(q) + ")";
        case Kind::Median: return "median";
        case Kind::Mean: return "mean";
        case Kind::FftCoefficient0Real: return "fft_coefficient(coeff=0,attr=real)";
        case Kind::EnergyRatioByChunks:
            return "energy_ratio_by_chunks(num_segments=" + std::to_string(num_segments) +
                   ",segment_focus=" + std::to_string(segment_focus) + ")";
        case Kind::IndexMassQuantile: return "index_mass_quantile(q=" + fmt(q) + ")";
        case Kind::LinearTrendPvalue: return "linear_trend(attr=pvalue)";
        case Kind::CwtCoefficient0: return "cwt_coefficients(coeff=0,w=" + std::to_string(width) + ")";
    }
    return {};
}

Formula Formula::parse(std::string_view id) {
    ParsedId p = split_id(id);
    Formula f;
    if (p.name == "quantile") {
        f.kind = Kind::Quantile;
        f.q = arg_double(p, "q", id);
        if (f.q < 0.0 || f.q > 1.0) throw config_error("quantile q outside [0,1]");
    } else if (p.name == "median") {
        f.kind = Kind::Median;
    } else if (p.name == "mean") {
        f.kind = Kind::Mean;
    } else if (p.name == "fft_coefficient") {
        f.kind = Kind::FftCoefficient0Real;
        if (arg_int(p, "coeff", id) != 0 || arg(p, "attr", id) != "real")
            throw config_error("only fft_coefficient(coeff=0,attr=real) is supported");
    } else if (p.name == "energy_ratio_by_chunks") {
        f.kind = Kind::EnergyRatioByChunks;
        f.num_segments = arg_int(p, "num_segments", id);
        f.segment_focus = arg_int(p, "segment_focus", id);
        if (f.num_segments < 1 || f.segment_focus < 0 || f.segment_focus >= f.num_segments)
            throw config_error("energy_ratio_by_chunks: need 0 <= segment_focus < num_segments");
    } else if (p.name == "index_mass_quantile") {
        f.kind = Kind::IndexMassQuantile;
        f.q = arg_double(p, "q", id);
    } else if (p.name == "linear_trend") {
        f.kind = Kind::LinearTrendPvalue;
        if (arg(p, "attr", id) != "pvalue") throw config_error("only linear_trend(attr=pvalue) is supported");
    } else if (p.name == "cwt_coefficients") {
        f.kind = Kind::CwtCoefficient0;
        f.width = arg_int(p, "w", id);
        if (arg_int(p, "coeff", id) != 0) throw config_error("only cwt coefficient 0 is supported");
        if (f.width < 1) throw config_error("cwt width must be positive");
    } else {
        throw config_error("unknown series formula '" + std::string(id) + "'");
    }
    return f;
}

double quantile(std::span<const double> series, double q) {
    if (series.empty()) return 0.0;
    auto v = sorted_copy(series);
    double h = q * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

double median(std::span<const double> series) { return quantile(series, 0.5); }

double mean(std::span<const double> series) {
    if (series.empty()) return 0.0;
    double s = 0.0;
    for (double v : series) s += v;
    return s / static_cast<double>(series.size());
}

Result energy_ratio_by_chunks(std::span<const double> series, int num_segments, int segment_focus) {
    double total = 0.0;
    for (double v : series) total += v * v;
    if (series.empty() || total == 0.0) return {0.0, true};
    // Leading n % S segments take one extra element.
    const std::size_t n = series.size();
    const std::size_t s = static_cast<std::size_t>(num_segments);
    const std::size_t base = n / s, extra = n % s;
    const std::size_t k = static_cast<std::size_t>(segment_focus);
    const std::size_t begin = k * base + std::min(k, extra);
    const std::size_t len = base + (k < extra ? 1 : 0);
    double part = 0.0;
    for (std::size_t i = begin; i < begin + len; ++i) part += series[i] * series[i];
    return {part / total, false};
}

Result index_mass_quantile(std::span<const double> series, double q) {
    double total = 0.0;
    for (double v : series) total += std::abs(v);
    if (series.empty() || total == 0.0) return {0.0, true};
    double cum = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        cum += std::abs(series[i]);
        if (cum / total >= q) return {static_cast<double>(i + 1) / static_cast<double>(series.size()), false};
    }
    return {1.0, false};
}

Result linear_trend_pvalue(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 2) return {0.0, true};
    if (n == 2) return {series[0] == series[1] ? 1.0 : 0.0, false};

    const double xbar = static_cast<double>(n - 1) / 2.0;
    double ybar = 0.0;
    for (double y : series) ybar += y;
    ybar /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = static_cast<double>(i) - xbar, dy = series[i] - ybar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    double r = (syy == 0.0) ? 0.0 : std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    constexpr double tiny = 1e-20;
    double t = r * std::sqrt(df / ((1.0 - r + tiny) * (1.0 + r + tiny)));
    // P(|T| > t) for Student's t with df degrees of freedom.
    double p = boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
    return {std::clamp(p, 0.0, 1.0), false};
}

std::vector<double> ricker(std::size_t points, double width) {
    const double amp = 2.0 / (std::sqrt(3.0 * width) * std::pow(std::numbers::pi, 0.25));
    const double wsq = width * width;
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        double x = static_cast<double>(i) - (static_cast<double>(points) - 1.0) / 2.0;
        double xsq = x * x;
        out[i] = amp * (1.0 - xsq / wsq) * std::exp(-xsq / (2.0 * wsq));
    }
    return out;
}

Result cwt_coefficient0(std::span<const double> series, int width) {
    if (series.empty()) return {0.0, true};
    const std::size_t n = series.size();
    const std::size_t m = std::min<std::size_t>(10 * static_cast<std::size_t>(width), n);
    auto wavelet = ricker(m, width);
    // 'same' convolution: output index 0 is full-convolution index (m - 1) / 2.
    const std::size_t center = (m - 1) / 2;
    double acc = 0.0;
    for (std::size_t k = 0; k <= center && k < n; ++k) acc += series[k] * wavelet[center - k];
    return {acc, false};
}

Result evaluate(const Formula& f, std::span<const double> series) {
    if (series.empty()) return {0.0, true};
    switch (f.kind) {
        case Kind::Quantile: return {quantile(series, f.q), false};
        case Kind::Median: return {median(series), false};
        case Kind::Mean: return {mean(series), false};
        case Kind::FftCoefficient0Real: {
            double s = 0.0;
            for (double v : series) s += v;
            return {s, false};
        }
        case Kind::EnergyRatioByChunks: return energy_ratio_by_chunks(series, f.num_segments, f.segment_focus);
        case Kind::IndexMassQuantile: return index_mass_quantile(series, f.q);
        case Kind::LinearTrendPvalue: return linear_trend_pvalue(series);
        case Kind::CwtCoefficient0: return cwt_coefficient0(series, f.width);
    }
    return {0.0, true};
}

Result ts_feature(std::string_view formula_id, std::span<const double> series) {
    return evaluate(Formula::parse(formula_id), series);
}

}  // namespace malscope::ts
