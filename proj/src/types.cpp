#include "malscope/types.hpp"

#include "malscope/error.hpp"

namespace malscope {

std::string_view to_string(Klass k) { return k == Klass::Malicious ? "malicious" : "benign"; }

std::string_view to_string(Source s) {
    switch (s) {
        case Source::Da: return "Da";
        case Source::Db: return "Db";
        case Source::Dg: return "Dg";
        case Source::Synthetic: return "synthetic";
    }
    return "?";
}

Klass parse_klass(std::string_view s) {
    if (s == "malicious") return Klass::Malicious;
    if (s == "benign") return Klass::Benign;
    throw data_error("unknown class '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
    if (s == "Da") return Source::Da;
    if (s == "Db") return Source::Db;
    if (s == "Dg") return Source::Dg;
    if (s == "synthetic") return Source::Synthetic;
    throw data_error("unknown source '" + std::string(s) + "'");
}

}  // namespace malscope
