#include "modeboost/gbtree.hpp"

#include "modeboost/error.hpp"
#include "modeboost/metrics.hpp"
#include "modeboost/parallel.hpp"
#include "modeboost/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace modeboost {

std::string_view to_string(Task t) { return t == Task::Regression ? "regression" : "classification"; }

Task parse_task(std::string_view s) {
    if (s == "regression" || s == "reg") return Task::Regression;
    if (s == "classification" || s == "clf") return Task::Classification;
    throw Error(ErrorCode::InvalidConfig, "unknown task '" + std::string(s) + "'");
}

void TrainParams::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (num_rounds < 0) bad("num_rounds must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate must lie in (0, 1]");
    if (max_depth < 0) bad("max_depth must be >= 0");
    if (!(min_child_weight >= 0.0)) bad("min_child_weight must be >= 0");
    if (!(lambda >= 0.0)) bad("lambda must be >= 0");
    if (!(gamma >= 0.0)) bad("gamma must be >= 0");
    if (!(subsample > 0.0 && subsample <= 1.0)) bad("subsample must lie in (0, 1]");
    if (!(colsample > 0.0 && colsample <= 1.0)) bad("colsample must lie in (0, 1]");
    if (num_bins < 2 || num_bins > 256) bad("num_bins must lie in [2, 256]");
    if (early_stopping_rounds < 0) bad("early_stopping_rounds must be >= 0");
    if (task == Task::Classification && num_classes < 2) bad("num_classes must be >= 2");
    if (base_score && !std::isfinite(*base_score)) bad("base_score must be finite");
}

double Tree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        const double v = x[static_cast<std::size_t>(n.feature)];
        const bool left = std::isnan(v) ? n.default_left : v < n.threshold;
        i = static_cast<std::size_t>(left ? n.left : n.right);
    }
    return nodes[i].weight;
}

std::size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

std::size_t Ensemble::node_count() const {
    std::size_t n = 0;
    for (const auto& t : trees) n += t.nodes.size();
    return n;
}

void Ensemble::margins(std::span<const double> x, std::span<double> out) const {
    const std::size_t C = static_cast<std::size_t>(classes_per_round());
    for (std::size_t k = 0; k < C; ++k) out[k] = base_scores[k];
    for (std::size_t i = 0; i < trees.size(); ++i) out[i % C] += trees[i].predict(x);
}

namespace {

void softmax(std::span<double> m) {
    const double mx = *std::max_element(m.begin(), m.end());
    double sum = 0.0;
    for (double& v : m) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : m) v /= sum;
}

std::size_t argmax(std::span<const double> m) {
    return static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
}

}  // namespace

double Ensemble::predict_row(std::span<const double> raw) const {
    std::vector<double> x(raw.begin(), raw.end());
    if (scaler) scaler->transform_row(x);
    std::vector<double> m(static_cast<std::size_t>(classes_per_round()));
    margins(x, m);
    return task == Task::Regression ? m[0] : static_cast<double>(argmax(m));
}

std::vector<double> Ensemble::predict_proba_row(std::span<const double> raw) const {
    if (task != Task::Classification) throw Error(ErrorCode::WrongTask, "predict_proba needs a classifier");
    std::vector<double> x(raw.begin(), raw.end());
    if (scaler) scaler->transform_row(x);
    std::vector<double> m(static_cast<std::size_t>(num_classes));
    margins(x, m);
    softmax(m);
    return m;
}

void Ensemble::check_features(std::span<const std::string> names) const {
    if (!std::equal(names.begin(), names.end(), feature_names.begin(), feature_names.end())) {
        throw Error(ErrorCode::FeatureMismatch, "input features do not match the model's feature names");
    }
}

namespace {

template <typename Fn>
void for_each_scaled_row(const Ensemble& e, std::span<const double> rows, std::size_t cols, bool apply_scaler,
                         std::size_t jobs, Fn&& fn) {
    const std::size_t n = cols == 0 ? 0 : rows.size() / cols;
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, jobs, [&](std::size_t c) {
        std::vector<double> x(cols);
        std::vector<double> m(static_cast<std::size_t>(e.classes_per_round()));
        for (std::size_t r = c * kChunk; r < std::min(n, (c + 1) * kChunk); ++r) {
            std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, x.begin());
            if (apply_scaler && e.scaler) e.scaler->transform_row(x);
            e.margins(x, m);
            fn(r, std::span<double>(m));
        }
    });
}

}  // namespace

std::vector<double> Ensemble::predict(const features::FeatureMatrix& m, std::size_t jobs) const {
    check_features(m.feature_names);
    std::vector<double> out(m.rows);
    for_each_scaled_row(*this, m.values, m.feature_count(), !m.scaled, jobs, [&](std::size_t r, std::span<double> mg) {
        out[r] = task == Task::Regression ? mg[0] : static_cast<double>(argmax(mg));
    });
    return out;
}

std::vector<double> Ensemble::predict_proba(const features::FeatureMatrix& m, std::size_t jobs) const {
    if (task != Task::Classification) throw Error(ErrorCode::WrongTask, "predict_proba needs a classifier");
    check_features(m.feature_names);
    const std::size_t C = static_cast<std::size_t>(num_classes);
    std::vector<double> out(m.rows * C);
    for_each_scaled_row(*this, m.values, m.feature_count(), !m.scaled, jobs, [&](std::size_t r, std::span<double> mg) {
        softmax(mg);
        std::copy(mg.begin(), mg.end(), out.begin() + static_cast<std::ptrdiff_t>(r * C));
    });
    return out;
}

std::vector<double> Ensemble::predict_rows(std::span<const double> raw_rows, std::size_t jobs) const {
    const std::size_t cols = feature_names.size();
    std::vector<double> out(cols == 0 ? 0 : raw_rows.size() / cols);
    for_each_scaled_row(*this, raw_rows, cols, true, jobs, [&](std::size_t r, std::span<double> mg) {
        out[r] = task == Task::Regression ? mg[0] : static_cast<double>(argmax(mg));
    });
    return out;
}

std::map<std::string, double> feature_importance(const Ensemble& e) {
    std::map<std::string, double> gains;
    for (const auto& name : e.feature_names) gains[name] = 0.0;
    for (const auto& t : e.trees) {
        for (const auto& n : t.nodes) {
            if (!n.is_leaf()) gains[e.feature_names[static_cast<std::size_t>(n.feature)]] += n.gain;
        }
    }
    return gains;
}

std::size_t estimated_resident_bytes(const Ensemble& e) {
    std::size_t bytes = sizeof(Ensemble);
    for (const auto& t : e.trees) bytes += sizeof(Tree) + t.nodes.size() * sizeof(TreeNode);
    for (const auto& n : e.feature_names) bytes += sizeof(std::string) + n.size();
    bytes += e.base_scores.size() * sizeof(double);
    if (e.scaler) bytes += e.scaler->columns().size() * (sizeof(Scaler::Column) + sizeof(std::string));
    if (e.labels) bytes += e.labels->peaks.size() * sizeof(double) + e.labels->tertiles.size() * 2 * sizeof(double);
    return bytes;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Quantized {
    std::vector<std::vector<double>> cuts;  // per feature, ascending
    std::vector<std::uint32_t> offsets;     // histogram offset per feature
    std::uint32_t total_bins = 0;
    std::vector<std::uint16_t> bins;        // column-major: f * rows + r
    std::size_t rows = 0;

    std::uint16_t bin(std::size_t f, std::size_t r) const { return bins[f * rows + r]; }
};

Quantized quantize(const DataView& x, const TrainParams& p) {
    Quantized q;
    q.rows = x.rows;
    q.cuts.resize(x.cols);
    q.offsets.resize(x.cols);
    q.bins.resize(x.rows * x.cols);
    std::vector<double> col(x.rows);
    for (std::size_t f = 0; f < x.cols; ++f) {
        for (std::size_t r = 0; r < x.rows; ++r) col[r] = x.values[r * x.cols + f];
        std::vector<double> sorted = col;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> distinct = sorted;
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        auto& cuts = q.cuts[f];
        if (p.exact_greedy || distinct.size() <= static_cast<std::size_t>(p.num_bins)) {
            cuts = std::move(distinct);
        } else {
            const std::size_t n = sorted.size();
            for (int b = 0; b < p.num_bins; ++b) cuts.push_back(sorted[static_cast<std::size_t>(b) * n / p.num_bins]);
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        }
        if (cuts.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(ErrorCode::InvalidConfig, "too many distinct values for exact split search");
        }
        q.offsets[f] = q.total_bins;
        q.total_bins += static_cast<std::uint32_t>(cuts.size());
        for (std::size_t r = 0; r < x.rows; ++r) {
            const auto it = std::upper_bound(cuts.begin(), cuts.end(), col[r]);
            q.bins[f * x.rows + r] = static_cast<std::uint16_t>(std::max<std::ptrdiff_t>(0, it - cuts.begin() - 1));
        }
    }
    return q;
}

struct HistBin {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t n = 0;
};

struct Split {
    int feature = -1;
    std::uint32_t bin = 0;
    double gain = 0.0;
    double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Quantized& q, const TrainParams& p, std::span<const double> g, std::span<const double> h,
                std::vector<std::size_t> features)
        : q_(q), p_(p), g_(g), h_(h), features_(std::move(features)) {}

    Tree build(std::vector<std::uint32_t>& rows, std::vector<std::uint32_t>& split_bins) {
        tree_.nodes.clear();
        bins_.clear();
        std::vector<HistBin> hist(q_.total_bins);
        fill(rows, hist);
        double G = 0.0, H = 0.0;
        for (std::uint32_t r : rows) {
            G += g_[r];
            H += h_[r];
        }
        grow(std::span<std::uint32_t>(rows), 0, hist, G, H);
        split_bins = std::move(bins_);
        return std::move(tree_);
    }

private:
    void fill(std::span<const std::uint32_t> rows, std::vector<HistBin>& hist) const {
        const bool parallel = p_.jobs > 1 && rows.size() * features_.size() > 200000;
        parallel_for(features_.size(), parallel ? p_.jobs : 1, [&](std::size_t i) {
            const std::size_t f = features_[i];
            HistBin* base = hist.data() + q_.offsets[f];
            const std::uint16_t* col = q_.bins.data() + f * q_.rows;
            for (std::uint32_t r : rows) {
                HistBin& b = base[col[r]];
                b.g += g_[r];
                b.h += h_[r];
                ++b.n;
            }
        });
    }

    double score(double G, double H) const { return G * G / (H + p_.lambda); }

    double leaf_weight(double G, double H) const {
        const double denom = H + p_.lambda;
        return denom > 0.0 ? -G / denom * p_.learning_rate : 0.0;
    }

    Split best_split(const std::vector<HistBin>& hist, double G, double H, std::size_t n) const {
        Split best;
        const double parent = score(G, H);
        for (std::size_t f : features_) {
            const auto nb = static_cast<std::uint32_t>(q_.cuts[f].size());
            const HistBin* base = hist.data() + q_.offsets[f];
            double gl = 0.0, hl = 0.0;
            std::size_t nl = 0;
            for (std::uint32_t b = 1; b < nb; ++b) {
                gl += base[b - 1].g;
                hl += base[b - 1].h;
                nl += base[b - 1].n;
                if (nl == 0) continue;
                if (nl == n) break;
                const double gr = G - gl, hr = H - hl;
                if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
                const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent) - p_.gamma;
                if (gain > best.gain) best = Split{static_cast<int>(f), b, gain, gl, hl, gr, hr};
            }
        }
        return best;
    }

    std::int32_t grow(std::span<std::uint32_t> rows, int depth, std::vector<HistBin>& hist, double G, double H) {
        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.push_back(TreeNode{});
        bins_.push_back(0);
        tree_.nodes[id].cover = H;
        Split s;
        if (depth < p_.max_depth && rows.size() >= 2) s = best_split(hist, G, H, rows.size());
        if (s.feature < 0) {
            tree_.nodes[id].weight = leaf_weight(G, H);
            return id;
        }
        const auto f = static_cast<std::size_t>(s.feature);
        const std::uint16_t* col = q_.bins.data() + f * q_.rows;
        auto mid = std::stable_partition(rows.begin(), rows.end(), [&](std::uint32_t r) { return col[r] < s.bin; });
        auto left = rows.subspan(0, static_cast<std::size_t>(mid - rows.begin()));
        auto right = rows.subspan(left.size());

        std::vector<HistBin> small(q_.total_bins);
        const bool left_small = left.size() <= right.size();
        fill(left_small ? left : right, small);
        for (std::size_t fi : features_) {
            for (std::uint32_t b = q_.offsets[fi]; b < q_.offsets[fi] + q_.cuts[fi].size(); ++b) {
                hist[b].g -= small[b].g;
                hist[b].h -= small[b].h;
                hist[b].n -= small[b].n;
            }
        }
        std::vector<HistBin>& lh = left_small ? small : hist;
        std::vector<HistBin>& rh = left_small ? hist : small;

        auto& node = tree_.nodes[id];
        node.feature = s.feature;
        node.threshold = q_.cuts[f][s.bin];
        node.gain = s.gain;
        bins_[id] = s.bin;
        const auto l = grow(left, depth + 1, lh, s.gl, s.hl);
        const auto r = grow(right, depth + 1, rh, s.gr, s.hr);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    const Quantized& q_;
    const TrainParams& p_;
    std::span<const double> g_;
    std::span<const double> h_;
    std::vector<std::size_t> features_;
    Tree tree_;
    std::vector<std::uint32_t> bins_;
};

double leaf_by_bins(const Tree& t, const std::vector<std::uint32_t>& split_bins, const Quantized& q, std::size_t r) {
    std::size_t i = 0;
    while (!t.nodes[i].is_leaf()) {
        const auto& n = t.nodes[i];
        const bool left = q.bin(static_cast<std::size_t>(n.feature), r) < split_bins[i];
        i = static_cast<std::size_t>(left ? n.left : n.right);
    }
    return t.nodes[i].weight;
}

void validate_inputs(const DataView& x, std::span<const std::string> names, std::span<const double> y,
                     const TrainParams& p) {
    if (x.rows < 2 || x.cols == 0) throw Error(ErrorCode::EmptyMatrix, "training needs at least 2 rows and 1 feature");
    if (x.values.size() != x.rows * x.cols) throw Error(ErrorCode::LengthMismatch, "matrix size mismatch");
    if (names.size() != x.cols) throw Error(ErrorCode::FeatureMismatch, "feature name count differs from columns");
    if (y.size() != x.rows) throw Error(ErrorCode::LengthMismatch, "target count differs from row count");
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        if (!std::isfinite(x.values[i])) {
            throw Error(ErrorCode::NonFiniteFeature, "non-finite value in feature '" + names[i % x.cols] + "' row " +
                                                         std::to_string(i / x.cols));
        }
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "non-finite target");
        if (p.task == Task::Classification && (v < 0 || v >= p.num_classes || v != std::floor(v))) {
            throw Error(ErrorCode::LabelOutOfRange, "class label " + std::to_string(v) + " outside 0.." +
                                                        std::to_string(p.num_classes - 1));
        }
    }
}

// Mean loss over rows given margins laid out row-major rows x C.
double mean_loss(Task task, std::size_t C, std::span<const double> margins, std::span<const double> y) {
    long double sum = 0.0L;
    std::vector<double> m(C);
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (task == Task::Regression) {
            const double e = margins[r] - y[r];
            sum += e * e;
        } else {
            std::copy_n(margins.begin() + static_cast<std::ptrdiff_t>(r * C), C, m.begin());
            softmax(m);
            sum -= std::log(std::max(m[static_cast<std::size_t>(y[r])], 1e-15));
        }
    }
    const double mean = static_cast<double>(sum / y.size());
    return task == Task::Regression ? std::sqrt(mean) : mean;
}

double report_objective(Task task, std::size_t C, std::span<const double> margins, std::span<const double> y) {
    if (task == Task::Regression) return mean_loss(task, C, margins, y);
    std::vector<int> truth(y.size()), pred(y.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
        truth[r] = static_cast<int>(y[r]);
        pred[r] = static_cast<int>(argmax(margins.subspan(r * C, C)));
    }
    return 1.0 - macro_f1(truth, pred, static_cast<int>(C));
}

}  // namespace

TrainResult fit(const DataView& x, std::span<const std::string> feature_names, std::span<const double> y,
                const TrainParams& p, const ValidationSet* valid, const TrainObserver* observer) {
    p.validate();
    validate_inputs(x, feature_names, y, p);
    if (valid) {
        if (valid->x.cols != x.cols) throw Error(ErrorCode::FeatureMismatch, "validation columns differ");
        if (valid->y.size() != valid->x.rows) throw Error(ErrorCode::LengthMismatch, "validation target count");
        if (valid->x.rows == 0) valid = nullptr;
    }

    TrainResult result;
    Ensemble& e = result.model;
    e.task = p.task;
    e.num_classes = p.task == Task::Classification ? p.num_classes : 1;
    e.learning_rate = p.learning_rate;
    e.feature_names.assign(feature_names.begin(), feature_names.end());
    const std::size_t C = static_cast<std::size_t>(e.classes_per_round());
    const std::size_t n = x.rows;

    if (p.task == Task::Regression) {
        long double s = 0.0L;
        for (double v : y) s += v;
        e.base_scores = {p.base_score ? *p.base_score : static_cast<double>(s / n)};
    } else if (p.base_score) {
        e.base_scores.assign(C, *p.base_score);
    } else {
        std::vector<double> counts(C, 0.0);
        for (double v : y) counts[static_cast<std::size_t>(v)] += 1.0;
        for (double c : counts) e.base_scores.push_back(std::log(std::max(c / n, 1e-6)));
    }

    const Quantized q = quantize(x, p);
    Xoshiro256 rng(p.seed);

    std::vector<double> margins(n * C), vmargins;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < C; ++k) margins[r * C + k] = e.base_scores[k];
    if (valid) {
        vmargins.resize(valid->x.rows * C);
        for (std::size_t r = 0; r < valid->x.rows; ++r)
            for (std::size_t k = 0; k < C; ++k) vmargins[r * C + k] = e.base_scores[k];
    }

    std::vector<double> g(n), h(n), prob(C);
    std::vector<std::uint32_t> rows;
    std::vector<std::uint32_t> split_bins;
    std::vector<std::size_t> all_features(x.cols);
    std::iota(all_features.begin(), all_features.end(), 0);
    const auto col_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(p.colsample * static_cast<double>(x.cols) + 0.5)));

    double best_loss = std::numeric_limits<double>::infinity();
    int best_round = 0;
    std::vector<double> round_grad(n * C), round_hess(n * C);

    for (int round = 0; round < p.num_rounds; ++round) {
        std::vector<std::uint32_t> sampled;
        sampled.reserve(n);
        for (std::size_t r = 0; r < n; ++r) {
            if (p.subsample >= 1.0 || rng.uniform() < p.subsample) sampled.push_back(static_cast<std::uint32_t>(r));
        }
        if (sampled.empty()) {
            sampled.resize(n);
            std::iota(sampled.begin(), sampled.end(), 0u);
        }

        // Gradients for every class come from the margins at the start of the round.
        for (std::size_t r = 0; r < n; ++r) {
            if (p.task == Task::Regression) {
                round_grad[r] = margins[r] - y[r];
                round_hess[r] = 1.0;
            } else {
                std::copy_n(margins.begin() + static_cast<std::ptrdiff_t>(r * C), C, prob.begin());
                softmax(prob);
                for (std::size_t k = 0; k < C; ++k) {
                    const double target = static_cast<std::size_t>(y[r]) == k ? 1.0 : 0.0;
                    round_grad[r * C + k] = prob[k] - target;
                    round_hess[r * C + k] = prob[k] * (1.0 - prob[k]);
                }
            }
        }

        for (std::size_t k = 0; k < C; ++k) {
            for (std::size_t r = 0; r < n; ++r) {
                g[r] = round_grad[r * C + k];
                h[r] = round_hess[r * C + k];
            }
            std::vector<std::size_t> feats = all_features;
            if (col_count < x.cols) {
                for (std::size_t i = 0; i < col_count; ++i) {
                    const std::size_t j = i + static_cast<std::size_t>(rng.below(x.cols - i));
                    std::swap(feats[i], feats[j]);
                }
                feats.resize(col_count);
                std::sort(feats.begin(), feats.end());
            }
            rows = sampled;
            TreeBuilder builder(q, p, g, h, std::move(feats));
            Tree tree = builder.build(rows, split_bins);
            for (std::size_t r = 0; r < n; ++r) margins[r * C + k] += leaf_by_bins(tree, split_bins, q, r);
            if (valid) {
                for (std::size_t r = 0; r < valid->x.rows; ++r) vmargins[r * C + k] += tree.predict(valid->x.row(r));
            }
            e.trees.push_back(std::move(tree));
        }

        RoundRecord rec;
        rec.round = round + 1;
        rec.train_loss = mean_loss(p.task, C, margins, y);
        if (valid) rec.valid_loss = mean_loss(p.task, C, vmargins, valid->y);
        result.history.push_back(rec);

        const double tracked = valid ? rec.valid_loss : rec.train_loss;
        if (tracked < best_loss) {
            best_loss = tracked;
            best_round = round + 1;
        }

        if (observer && observer->on_report && observer->every > 0 && (round + 1) % observer->every == 0) {
            const double objective = valid ? report_objective(p.task, C, vmargins, valid->y)
                                           : report_objective(p.task, C, margins, y);
            if (observer->on_report(round + 1, objective)) {
                result.stopped_by_observer = true;
                break;
            }
        }
        if (valid && p.early_stopping_rounds > 0 && round + 1 - best_round >= p.early_stopping_rounds) break;
    }

    if (valid && p.early_stopping_rounds > 0 && best_round > 0) {
        e.trees.resize(static_cast<std::size_t>(best_round) * C);
    }
    result.best_round = valid && p.early_stopping_rounds > 0 ? best_round : static_cast<int>(e.rounds());
    return result;
}

}  // namespace modeboost
