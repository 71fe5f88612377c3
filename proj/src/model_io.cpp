#include "modeboost/binary_io.hpp"
#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/gbtree.hpp"

#include <json.hpp>

#include <cmath>

namespace modeboost {

namespace {

constexpr std::string_view kMagic = "MBGB1";

void write_labels(binary::Writer& w, const labeling::LabelModel& m) {
    w.f64(m.config.d);
    w.integer(static_cast<std::uint8_t>(m.config.peak_scope));
    w.integer(static_cast<std::uint8_t>(m.config.peak_kind));
    w.integer(static_cast<std::uint8_t>(m.config.mode));
    w.integer(static_cast<std::uint32_t>(m.peaks.size()));
    for (double v : m.peaks) w.f64(v);
    w.integer(static_cast<std::uint32_t>(m.tertiles.size()));
    for (const auto& t : m.tertiles) {
        w.f64(t[0]);
        w.f64(t[1]);
    }
}

labeling::LabelModel read_labels(binary::Reader& r) {
    labeling::LabelModel m;
    m.config.d = r.f64();
    const auto scope = r.integer<std::uint8_t>();
    const auto kind = r.integer<std::uint8_t>();
    const auto mode = r.integer<std::uint8_t>();
    if (scope > 1 || kind > 1 || mode > 1) throw Error(ErrorCode::CorruptFile, "bad label configuration");
    m.config.peak_scope = static_cast<labeling::PeakScope>(scope);
    m.config.peak_kind = static_cast<labeling::PeakKind>(kind);
    m.config.mode = static_cast<labeling::LabelMode>(mode);
    m.peaks.resize(r.integer<std::uint32_t>());
    for (auto& v : m.peaks) v = r.f64();
    m.tertiles.resize(r.integer<std::uint32_t>());
    for (auto& t : m.tertiles) {
        t[0] = r.f64();
        t[1] = r.f64();
    }
    return m;
}

void check_tree(const Tree& t, std::size_t features) {
    if (t.nodes.empty()) throw Error(ErrorCode::CorruptFile, "empty tree");
    const auto n = static_cast<std::int64_t>(t.nodes.size());
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& node = t.nodes[i];
        if (node.is_leaf()) {
            if (!std::isfinite(node.weight)) throw Error(ErrorCode::CorruptFile, "non-finite leaf weight");
            continue;
        }
        // Children always follow their parent, which also rules out cycles.
        const auto self = static_cast<std::int64_t>(i);
        if (static_cast<std::size_t>(node.feature) >= features || node.left <= self || node.right <= self ||
            node.left >= n || node.right >= n || !std::isfinite(node.threshold)) {
            throw Error(ErrorCode::CorruptFile, "tree node " + std::to_string(i) + " is malformed");
        }
    }
}

void check_model(const Ensemble& e) {
    const auto C = static_cast<std::size_t>(e.classes_per_round());
    if (e.num_classes < 1 || e.base_scores.size() != C || e.trees.size() % C != 0) {
        throw Error(ErrorCode::CorruptFile, "inconsistent class layout");
    }
    for (const auto& t : e.trees) check_tree(t, e.feature_names.size());
    if (e.scaler && e.scaler->feature_names() != e.feature_names) {
        throw Error(ErrorCode::CorruptFile, "embedded scaler features differ from the model's");
    }
}

}  // namespace

std::string serialize(const Ensemble& e) {
    binary::Writer w;
    w.bytes(kMagic);
    w.integer(Ensemble::kFormatVersion);
    w.integer(static_cast<std::uint8_t>(e.task));
    w.integer(static_cast<std::uint32_t>(e.num_classes));
    w.integer(static_cast<std::int32_t>(e.horizon));
    w.f64(e.learning_rate);
    w.string(e.config_hash);
    w.integer(static_cast<std::uint32_t>(e.feature_names.size()));
    for (const auto& n : e.feature_names) w.string(n);
    w.integer(static_cast<std::uint32_t>(e.base_scores.size()));
    for (double b : e.base_scores) w.f64(b);
    w.integer(static_cast<std::uint8_t>(e.scaler ? 1 : 0));
    if (e.scaler) e.scaler->write(w);
    w.integer(static_cast<std::uint8_t>(e.labels ? 1 : 0));
    if (e.labels) write_labels(w, *e.labels);
    w.integer(static_cast<std::uint32_t>(e.trees.size()));
    for (const auto& t : e.trees) {
        w.integer(static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            w.integer(n.feature);
            w.f64(n.threshold);
            w.integer(static_cast<std::uint8_t>(n.default_left ? 1 : 0));
            w.integer(n.left);
            w.integer(n.right);
            w.f64(n.weight);
            w.f64(n.gain);
            w.f64(n.cover);
        }
    }
    return w.take();
}

Ensemble deserialize(std::string_view bytes) {
    binary::Reader r(bytes);
    if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
        throw Error(ErrorCode::CorruptFile, "not an MBGB1 model");
    }
    const auto version = r.integer<std::uint16_t>();
    if (version != Ensemble::kFormatVersion) {
        throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) + ", expected " +
                                                    std::to_string(Ensemble::kFormatVersion));
    }
    Ensemble e;
    const auto task = r.integer<std::uint8_t>();
    if (task > 1) throw Error(ErrorCode::CorruptFile, "unknown task code");
    e.task = static_cast<Task>(task);
    e.num_classes = static_cast<int>(r.integer<std::uint32_t>());
    e.horizon = r.integer<std::int32_t>();
    e.learning_rate = r.f64();
    e.config_hash = r.string();
    e.feature_names.resize(r.integer<std::uint32_t>());
    for (auto& n : e.feature_names) n = r.string();
    e.base_scores.resize(r.integer<std::uint32_t>());
    for (auto& b : e.base_scores) b = r.f64();
    if (r.integer<std::uint8_t>() != 0) e.scaler = Scaler::read(r);
    if (r.integer<std::uint8_t>() != 0) e.labels = read_labels(r);
    const auto tree_count = r.integer<std::uint32_t>();
    // Each node takes 45 bytes, so counts beyond the payload are corrupt.
    if (tree_count > r.remaining() / 4) throw Error(ErrorCode::CorruptFile, "tree count exceeds payload");
    e.trees.resize(tree_count);
    for (auto& t : e.trees) {
        const auto nodes = r.integer<std::uint32_t>();
        if (nodes > r.remaining() / 45) throw Error(ErrorCode::CorruptFile, "node count exceeds payload");
        t.nodes.resize(nodes);
        for (auto& n : t.nodes) {
            n.feature = r.integer<std::int32_t>();
            n.threshold = r.f64();
            n.default_left = r.integer<std::uint8_t>() != 0;
            n.left = r.integer<std::int32_t>();
            n.right = r.integer<std::int32_t>();
            n.weight = r.f64();
            n.gain = r.f64();
            n.cover = r.f64();
        }
    }
    if (!r.done()) throw Error(ErrorCode::CorruptFile, "trailing bytes after model");
    check_model(e);
    return e;
}

void save(const Ensemble& e, const std::filesystem::path& path) { csv::write_file_atomic(path, serialize(e)); }

Ensemble load(const std::filesystem::path& path) { return deserialize(csv::read_file(path)); }

std::string to_json(const Ensemble& e) {
    using nlohmann::json;
    json j;
    j["format"] = std::string(kMagic);
    j["version"] = Ensemble::kFormatVersion;
    j["task"] = std::string(to_string(e.task));
    j["num_classes"] = e.num_classes;
    j["horizon"] = e.horizon;
    j["learning_rate"] = e.learning_rate;
    j["config_hash"] = e.config_hash;
    j["feature_names"] = e.feature_names;
    j["base_scores"] = e.base_scores;
    if (e.scaler) {
        json s;
        s["mode"] = std::string(to_string(e.scaler->mode()));
        s["columns"] = json::array();
        for (const auto& c : e.scaler->columns()) {
            s["columns"].push_back({{"categorical", c.categorical}, {"offset", c.offset}, {"spread", c.spread}});
        }
        j["scaler"] = s;
    }
    if (e.labels) {
        const auto& m = *e.labels;
        json l;
        l["d"] = m.config.d;
        l["peak_scope"] = std::string(labeling::to_string(m.config.peak_scope));
        l["peak_kind"] = std::string(labeling::to_string(m.config.peak_kind));
        l["mode"] = std::string(labeling::to_string(m.config.mode));
        l["peaks"] = m.peaks;
        l["tertiles"] = json::array();
        for (const auto& t : m.tertiles) l["tertiles"].push_back({t[0], t[1]});
        j["labels"] = l;
    }
    j["trees"] = json::array();
    for (const auto& t : e.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) {
                nodes.push_back({{"leaf", n.weight}, {"cover", n.cover}});
            } else {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"default_left", n.default_left},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"gain", n.gain},
                                 {"cover", n.cover}});
            }
        }
        j["trees"].push_back(std::move(nodes));
    }
    return j.dump(1);
}

Ensemble from_json(std::string_view text) {
    using nlohmann::json;
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != kMagic) throw Error(ErrorCode::CorruptFile, "not a model export");
        if (j.at("version").get<int>() != Ensemble::kFormatVersion) {
            throw Error(ErrorCode::VersionMismatch, "model export version " + j.at("version").dump());
        }
        Ensemble e;
        e.task = parse_task(j.at("task").get<std::string>());
        e.num_classes = j.at("num_classes").get<int>();
        e.horizon = j.at("horizon").get<int>();
        e.learning_rate = j.at("learning_rate").get<double>();
        e.config_hash = j.at("config_hash").get<std::string>();
        e.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        e.base_scores = j.at("base_scores").get<std::vector<double>>();
        if (j.contains("scaler")) {
            const auto& s = j["scaler"];
            std::vector<Scaler::Column> cols;
            for (const auto& c : s.at("columns")) {
                cols.push_back({c.at("categorical").get<bool>(), c.at("offset").get<double>(),
                                c.at("spread").get<double>()});
            }
            e.scaler = Scaler(parse_scale_mode(s.at("mode").get<std::string>()), e.feature_names, std::move(cols));
        }
        if (j.contains("labels")) {
            const auto& l = j["labels"];
            labeling::LabelModel m;
            m.config.d = l.at("d").get<double>();
            m.config.peak_scope = labeling::parse_peak_scope(l.at("peak_scope").get<std::string>());
            m.config.peak_kind = labeling::parse_peak_kind(l.at("peak_kind").get<std::string>());
            m.config.mode = labeling::parse_label_mode(l.at("mode").get<std::string>());
            m.peaks = l.at("peaks").get<std::vector<double>>();
            for (const auto& t : l.at("tertiles")) m.tertiles.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
            e.labels = std::move(m);
        }
        for (const auto& jt : j.at("trees")) {
            Tree t;
            for (const auto& jn : jt) {
                TreeNode n;
                if (jn.contains("leaf")) {
                    n.weight = jn.at("leaf").get<double>();
                } else {
                    n.feature = jn.at("feature").get<std::int32_t>();
                    n.threshold = jn.at("threshold").get<double>();
                    n.default_left = jn.at("default_left").get<bool>();
                    n.left = jn.at("left").get<std::int32_t>();
                    n.right = jn.at("right").get<std::int32_t>();
                    n.gain = jn.at("gain").get<double>();
                }
                n.cover = jn.at("cover").get<double>();
                t.nodes.push_back(n);
            }
            e.trees.push_back(std::move(t));
        }
        check_model(e);
        return e;
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::CorruptFile, std::string("malformed model JSON: ") + ex.what());
    }
}

}  // namespace modeboost
