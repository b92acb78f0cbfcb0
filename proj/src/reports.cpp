#include "galerkin/reports.hpp"

#include <boost/uuid/detail/sha1.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace galerkin {

std::string sha1_hex(const std::string& data) {
    boost::uuids::detail::sha1 h;
    h.process_bytes(data.data(), data.size());
    boost::uuids::detail::sha1::digest_type d;
    h.get_digest(d);
    char buf[41];
    for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", d[i]);
    return std::string(buf, 40);
}

std::string blob_hash(const std::string& data) {
    return sha1_hex("blob " + std::to_string(data.size()) + '\0' + data);
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_blob_hash(const std::filesystem::path& p) { return blob_hash(read_text(p)); }

void write_text(const std::filesystem::path& p, const std::string& s) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << s;
}

nlohmann::json to_json(const RunManifest& m, const std::filesystem::path& out_dir) {
    nlohmann::json j;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["tool_version"] = m.version;
    j["wall_time_s"] = m.wall_time;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : m.outputs) {
        const auto full = f.is_absolute() ? f : out_dir / f;
        files.push_back({{"path", f.string()}, {"blob", file_blob_hash(full)}});
    }
    j["outputs"] = files;
    for (auto it = m.extra.begin(); it != m.extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

std::string csv_table(const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) throw std::invalid_argument("csv needs one name per column");
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
    os << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? ", " : "") << columns[c].at(r);
        os << "\n";
    }
    return os.str();
}

LogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log-log fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::domain_error("log-log fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LogFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

}  // namespace galerkin
