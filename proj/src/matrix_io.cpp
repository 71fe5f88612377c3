#include "modeboost/binary_io.hpp"
#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/features.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace modeboost::features {

namespace {

constexpr std::string_view kMagic = "MBFM1";
constexpr std::uint16_t kVersion = 1;

void check_shape(const FeatureMatrix& m) {
    const std::size_t F = m.feature_count();
    if (m.values.size() != m.rows * F || m.entity.size() != m.rows || m.step.size() != m.rows ||
        m.target_values.size() != m.horizons.size() || m.target_levels.size() != m.horizons.size()) {
        throw Error(ErrorCode::CorruptFile, "feature matrix shape is inconsistent");
    }
    for (std::size_t h = 0; h < m.horizons.size(); ++h) {
        if (m.target_values[h].size() != m.rows || m.target_levels[h].size() != m.rows)
            throw Error(ErrorCode::CorruptFile, "target column length differs from row count");
    }
}

void rebuild_entity_column(FeatureMatrix& m) {
    const std::size_t code = m.feature_index("entity_code");
    m.entity.resize(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double v = m.at(r, code);
        if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(m.entity_names.size())) {
            throw Error(ErrorCode::CorruptFile, "row " + std::to_string(r) + " has an invalid entity code");
        }
        m.entity[r] = static_cast<std::uint32_t>(v);
    }
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view s, const std::string& where) {
    double v = 0.0;
    if (s == "nan" || s == "NaN") return std::nan("");
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::MalformedRow, where + ": not a number '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

void write_matrix_binary(const FeatureMatrix& m, const std::filesystem::path& path) {
    check_shape(m);
    binary::Writer w;
    w.bytes(kMagic);
    w.integer(kVersion);
    w.integer(static_cast<std::uint8_t>(m.scaled ? 1 : 0));
    w.integer(static_cast<std::int64_t>(m.grid_start.time_since_epoch().count()));
    w.integer(static_cast<std::uint64_t>(m.split.train_end));
    w.integer(static_cast<std::uint64_t>(m.split.valid_end));
    w.integer(static_cast<std::uint64_t>(m.split.length));
    w.integer(static_cast<std::uint32_t>(m.feature_names.size()));
    for (const auto& n : m.feature_names) w.string(n);
    w.integer(static_cast<std::uint32_t>(m.entity_names.size()));
    for (const auto& n : m.entity_names) w.string(n);
    w.integer(static_cast<std::uint32_t>(m.horizons.size()));
    for (int h : m.horizons) w.integer(static_cast<std::int32_t>(h));
    w.integer(static_cast<std::uint64_t>(m.rows));
    for (std::size_t r = 0; r < m.rows; ++r) {
        w.f64(static_cast<double>(m.step[r]));
        for (double v : m.row(r)) w.f64(v);
        for (const auto& col : m.target_values) w.f64(col[r]);
        for (const auto& col : m.target_levels) w.f64(static_cast<double>(col[r]));
    }
    csv::write_file_atomic(path, w.data());
}

FeatureMatrix read_matrix_binary(const std::filesystem::path& path) {
    const std::string data = csv::read_file(path);
    binary::Reader in(data);
    if (data.size() < kMagic.size() || in.bytes(kMagic.size()) != kMagic) {
        throw Error(ErrorCode::CorruptFile, path.string() + ": not an MBFM1 feature matrix");
    }
    const auto version = in.integer<std::uint16_t>();
    if (version != kVersion) {
        throw Error(ErrorCode::VersionMismatch, path.string() + ": matrix version " + std::to_string(version));
    }
    FeatureMatrix m;
    m.scaled = in.integer<std::uint8_t>() != 0;
    m.grid_start = MinuteStamp{std::chrono::minutes{in.integer<std::int64_t>()}};
    m.split.train_end = in.integer<std::uint64_t>();
    m.split.valid_end = in.integer<std::uint64_t>();
    m.split.length = in.integer<std::uint64_t>();
    m.feature_names.resize(in.integer<std::uint32_t>());
    for (auto& n : m.feature_names) n = in.string();
    m.entity_names.resize(in.integer<std::uint32_t>());
    for (auto& n : m.entity_names) n = in.string();
    m.horizons.resize(in.integer<std::uint32_t>());
    for (auto& h : m.horizons) h = in.integer<std::int32_t>();
    m.rows = in.integer<std::uint64_t>();
    const std::size_t F = m.feature_names.size();
    const std::size_t H = m.horizons.size();
    const std::size_t per_row = 1 + F + 2 * H;
    if (in.remaining() != m.rows * per_row * 8) {
        throw Error(ErrorCode::CorruptFile, path.string() + ": payload size does not match the row count");
    }
    m.values.resize(m.rows * F);
    m.step.resize(m.rows);
    m.target_values.assign(H, std::vector<double>(m.rows));
    m.target_levels.assign(H, std::vector<int>(m.rows));
    for (std::size_t r = 0; r < m.rows; ++r) {
        m.step[r] = static_cast<std::uint32_t>(in.f64());
        for (std::size_t f = 0; f < F; ++f) m.values[r * F + f] = in.f64();
        for (std::size_t h = 0; h < H; ++h) m.target_values[h][r] = in.f64();
        for (std::size_t h = 0; h < H; ++h) m.target_levels[h][r] = static_cast<int>(in.f64());
    }
    rebuild_entity_column(m);
    return m;
}

void write_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
    check_shape(m);
    std::ostringstream out;
    out << "# format=MBFM1-csv\n";
    out << "# scaled=" << (m.scaled ? 1 : 0) << '\n';
    out << "# grid_start=" << format_minute(m.grid_start) << '\n';
    out << "# split=" << m.split.train_end << ',' << m.split.valid_end << ',' << m.split.length << '\n';
    out << "# entities=";
    for (std::size_t i = 0; i < m.entity_names.size(); ++i) out << (i ? "|" : "") << m.entity_names[i];
    out << '\n';
    out << "step";
    for (const auto& n : m.feature_names) out << ',' << n;
    for (int h : m.horizons) out << ",target_h" << h;
    for (int h : m.horizons) out << ",level_h" << h;
    out << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        out << m.step[r];
        for (double v : m.row(r)) out << ',' << fmt(v);
        for (const auto& col : m.target_values) out << ',' << fmt(col[r]);
        for (const auto& col : m.target_levels) out << ',' << col[r];
        out << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
    const std::string text = csv::read_file(path);
    std::istringstream in(text);
    std::string line;
    FeatureMatrix m;
    bool have_header = false;
    bool have_split = false;
    std::size_t F = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto body = std::string_view(line).substr(1);
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            auto key = body.substr(0, eq);
            while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
            const auto value = body.substr(eq + 1);
            if (key == "scaled") {
                m.scaled = value == "1";
            } else if (key == "grid_start") {
                auto ts = parse_timestamp(value);
                if (!ts) throw Error(ErrorCode::UnparseableTimestamp, path.string() + ": grid_start");
                m.grid_start = floor_to_minute(*ts);
            } else if (key == "split") {
                const auto parts = split_list(value, ',');
                if (parts.size() != 3) throw Error(ErrorCode::CorruptFile, path.string() + ": bad split line");
                m.split.train_end = static_cast<std::size_t>(parse_number(parts[0], path.string()));
                m.split.valid_end = static_cast<std::size_t>(parse_number(parts[1], path.string()));
                m.split.length = static_cast<std::size_t>(parse_number(parts[2], path.string()));
                have_split = true;
            } else if (key == "entities") {
                m.entity_names = split_list(value, '|');
            }
            continue;
        }
        const auto fields = csv::split_row(line);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (!have_header) {
            if (fields.empty() || fields.front() != "step") {
                throw Error(ErrorCode::MissingColumn, where + ": header must start with 'step'");
            }
            for (std::size_t i = 1; i < fields.size(); ++i) {
                const auto& f = fields[i];
                if (f.rfind("target_h", 0) == 0) {
                    m.horizons.push_back(static_cast<int>(parse_number(std::string_view(f).substr(8), where)));
                } else if (f.rfind("level_h", 0) == 0) {
                    continue;
                } else {
                    m.feature_names.push_back(f);
                }
            }
            F = m.feature_names.size();
            m.target_values.assign(m.horizons.size(), {});
            m.target_levels.assign(m.horizons.size(), {});
            have_header = true;
            continue;
        }
        const std::size_t H = m.horizons.size();
        if (fields.size() != 1 + F + 2 * H) throw Error(ErrorCode::MalformedRow, where + ": wrong field count");
        m.step.push_back(static_cast<std::uint32_t>(parse_number(fields[0], where)));
        for (std::size_t f = 0; f < F; ++f) m.values.push_back(parse_number(fields[1 + f], where));
        for (std::size_t h = 0; h < H; ++h) m.target_values[h].push_back(parse_number(fields[1 + F + h], where));
        for (std::size_t h = 0; h < H; ++h)
            m.target_levels[h].push_back(static_cast<int>(parse_number(fields[1 + F + H + h], where)));
    }
    if (!have_header || !have_split) throw Error(ErrorCode::CorruptFile, path.string() + ": missing header or split");
    m.rows = m.step.size();
    rebuild_entity_column(m);
    return m;
}

void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        write_matrix_csv(m, path);
    } else {
        write_matrix_binary(m, path);
    }
}

FeatureMatrix read_matrix(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? read_matrix_csv(path) : read_matrix_binary(path);
}

}  // namespace modeboost::features
