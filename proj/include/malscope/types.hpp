#pragma once

#include <string>
#include <string_view>

namespace malscope {

enum class Klass { Malicious, Benign };

/// Where a labeled row came from: the original dataset, newly observed
/// malicious accounts, generated adversarial vectors, or the synthetic ledger.
enum class Source { Da, Db, Dg, Synthetic };

inline constexpr std::string_view kBenignActivity = "benign";

std::string_view to_string(Klass k);
std::string_view to_string(Source s);
Klass parse_klass(std::string_view s);
Source parse_source(std::string_view s);

}  // namespace malscope
