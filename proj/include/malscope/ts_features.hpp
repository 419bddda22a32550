#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace malscope::ts {

/// Value of a series feature; `degenerate` marks an undefined substrate
/// (empty series, zero energy, too few points) for which value is 0.
struct Result {
    double value = 0.0;
    bool degenerate = false;
};

enum class Kind {
    Quantile,
    Median,
    Mean,
    FftCoefficient0Real,
    EnergyRatioByChunks,
    IndexMassQuantile,
    LinearTrendPvalue,
    CwtCoefficient0,
};

/// A parameterized series formula. Textual ids look like
/// `quantile(q=0.7)` or `cwt_coefficients(coeff=0,w=20)`.
struct Formula {
    Kind kind = Kind::Mean;
    double q = 0.0;
    int num_segments = 0;
    int segment_focus = 0;
    int width = 0;

    std::string id() const;
    static Formula parse(std::string_view id);
};

Result evaluate(const Formula& f, std::span<const double> series);
Result ts_feature(std::string_view formula_id, std::span<const double> series);

/// Linear-interpolation quantile (position q * (n - 1) in sorted order).
double quantile(std::span<const double> series, double q);
double median(std::span<const double> series);
double mean(std::span<const double> series);

Result energy_ratio_by_chunks(std::span<const double> series, int num_segments, int segment_focus);
Result index_mass_quantile(std::span<const double> series, double q);
/// Two-sided p-value of the least-squares slope against the sample index.
Result linear_trend_pvalue(std::span<const double> series);

/// Ricker ("Mexican hat") wavelet sampled at `points` positions centered on 0.
std::vector<double> ricker(std::size_t points, double width);
/// First coefficient of the same-length convolution of the series with a
/// Ricker wavelet of the given width (wavelet length min(10 * width, n)).
Result cwt_coefficient0(std::span<const double> series, int width);

}  // namespace malscope::ts
