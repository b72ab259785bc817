#include "pollen/gbm.hpp"

#include "pollen/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace pollen {

using nlohmann::json;

void Matrix::push_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) cols_ = values.size();
    if (values.size() != cols_)
        fail(ErrorKind::WrongFeatureCount, "row has " + std::to_string(values.size()) + " entries, expected " +
                                               std::to_string(cols_));
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

void GBMConfig::validate() const {
    if (n_trees < 1) fail(ErrorKind::InvalidArgument, "n_trees must be >= 1");
    if (max_depth < 0) fail(ErrorKind::InvalidArgument, "max_depth must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        fail(ErrorKind::InvalidArgument, "learning_rate must lie in (0, 1]");
    if (min_samples_leaf < 1) fail(ErrorKind::InvalidArgument, "min_samples_leaf must be >= 1");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
        fail(ErrorKind::InvalidArgument, "subsample_fraction must lie in (0, 1]");
}

double Tree::evaluate(std::span<const double> x) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(k)];
        k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
}

int Tree::depth() const {
    std::function<int(int)> walk = [&](int k) -> int {
        const auto& n = nodes[static_cast<std::size_t>(k)];
        return n.is_leaf() ? 0 : 1 + std::max(walk(n.left), walk(n.right));
    };
    return nodes.empty() ? 0 : walk(0);
}

double variance_reduction(double left_sum, double left_n, double right_sum, double right_n) {
    const double total = left_sum + right_sum;
    return left_sum * left_sum / left_n + right_sum * right_sum / right_n - total * total / (left_n + right_n);
}

bool negligible_gain(double gain, double sum_of_squares) { return !(gain > 1e-12 * sum_of_squares); }

namespace {

double split_point(double lo, double hi) {
    const double mid = std::midpoint(lo, hi);
    return mid < hi ? mid : lo;
}

// Reorders nodes depth-first (node, left subtree, right subtree) so a tree
// has one canonical layout regardless of how it was grown.
Tree canonical(const Tree& grown) {
    Tree out;
    std::function<int(int)> copy = [&](int k) -> int {
        const auto& src = grown.nodes[static_cast<std::size_t>(k)];
        const int index = static_cast<int>(out.nodes.size());
        out.nodes.push_back(src);
        if (!src.is_leaf()) {
            const int l = copy(src.left);
            const int r = copy(src.right);
            out.nodes[static_cast<std::size_t>(index)].left = l;
            out.nodes[static_cast<std::size_t>(index)].right = r;
        }
        return index;
    };
    copy(0);
    return out;
}

// One feature column in ascending value order (ties by row index). Values
// are replaced by their rank among the column's distinct values.
struct SortedColumn {
    struct Entry {
        std::uint32_t rank;
        std::uint32_t row;
    };
    std::vector<Entry> entries;
    std::vector<double> distinct;
};

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
};

// Grows one tree level by level. Each level makes one pass over every
// presorted column; rows carry the index of the frontier node they sit in,
// so all nodes of the level are scanned together.
class TreeGrower {
public:
    TreeGrower(const Matrix& x, const std::vector<SortedColumn>& order, const GBMConfig& cfg)
        : x_(x), order_(order), cfg_(cfg), slot_(x.rows(), kNone), inverse_(x.rows() + 1, 0.0) {
        for (std::size_t c = 1; c <= x.rows(); ++c) inverse_[c] = 1.0 / static_cast<double>(c);
    }

    Tree grow(std::span<const double> residual, const std::vector<bool>& sampled) {
        for (std::size_t r = 0; r < x_.rows(); ++r) slot_[r] = sampled[r] ? 0 : kNone;
        Tree tree;
        tree.nodes.push_back(TreeNode{});
        std::vector<int> frontier{0};
        for (int depth = 0; depth < cfg_.max_depth && !frontier.empty(); ++depth) {
            const auto best = find_splits(residual, frontier.size());
            std::vector<int> next;
            std::vector<std::uint32_t> remap(frontier.size() * 2, kNone);
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                if (best[s].feature < 0) continue;
                const int left = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back(TreeNode{});
                tree.nodes.push_back(TreeNode{});
                auto& node = tree.nodes[static_cast<std::size_t>(frontier[s])];
                node.feature = best[s].feature;
                node.threshold = best[s].threshold;
                node.left = left;
                node.right = left + 1;
                remap[2 * s] = static_cast<std::uint32_t>(next.size());
                next.push_back(left);
                remap[2 * s + 1] = static_cast<std::uint32_t>(next.size());
                next.push_back(left + 1);
            }
            // Rows of nodes that stopped splitting keep their leaf; record it
            // before the slot ids are reused.
            leaf_of_slot(frontier, best, residual, tree);
            for (std::size_t r = 0; r < x_.rows(); ++r) {
                const auto s = slot_[r];
                if (s == kNone) continue;
                if (best[s].feature < 0) {
                    slot_[r] = kNone;
                    continue;
                }
                const bool left = x_(r, static_cast<std::size_t>(best[s].feature)) <= best[s].threshold;
                slot_[r] = remap[2 * s + (left ? 0 : 1)];
            }
            frontier = std::move(next);
        }
        std::vector<BestSplit> none(frontier.size());
        leaf_of_slot(frontier, none, residual, tree);
        return canonical(tree);
    }

private:
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

    struct SlotScan {
        std::size_t n = 0;
        double total = 0.0;
        double sumsq = 0.0;
        std::size_t count = 0;
        double sum = 0.0;
        std::uint32_t last = 0;
    };

    // Leaf means for frontier nodes that will not split, summed in feature-0
    // order so the result does not depend on row ids.
    void leaf_of_slot(const std::vector<int>& frontier, const std::vector<BestSplit>& best,
                      std::span<const double> residual, Tree& tree) const {
        std::vector<double> sum(frontier.size(), 0.0);
        std::vector<std::size_t> count(frontier.size(), 0);
        for (const auto& e : order_[0].entries) {
            const auto s = slot_[e.row];
            if (s == kNone || best[s].feature >= 0) continue;
            sum[s] += residual[e.row];
            ++count[s];
        }
        for (std::size_t s = 0; s < frontier.size(); ++s)
            if (best[s].feature < 0)
                tree.nodes[static_cast<std::size_t>(frontier[s])].value =
                    count[s] > 0 ? sum[s] / static_cast<double>(count[s]) : 0.0;
    }

    // Candidates are ranked by sum_l^2/n_l + sum_r^2/n_r, which differs from
    // the variance reduction only by a per-node constant. Features are
    // scanned in index order and thresholds ascending, so strict improvement
    // keeps the lowest feature and then the smallest threshold on ties.
    std::vector<BestSplit> find_splits(std::span<const double> residual, std::size_t slots) {
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        scan_.assign(slots, SlotScan{});
        for (const auto& e : order_[0].entries) {
            const auto s = slot_[e.row];
            if (s == kNone) continue;
            const double r = residual[e.row];
            ++scan_[s].n;
            scan_[s].total += r;
            scan_[s].sumsq += r * r;
        }
        std::vector<BestSplit> best(slots);
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            for (auto& sc : scan_) {
                sc.count = 0;
                sc.sum = 0.0;
            }
            const auto& distinct = order_[f].distinct;
            for (const auto& [rank, row] : order_[f].entries) {
                const auto s = slot_[row];
                if (s == kNone) continue;
                auto& sc = scan_[s];
                if (sc.count >= min_leaf && rank != sc.last && sc.n - sc.count >= min_leaf) {
                    const double right = sc.total - sc.sum;
                    const double score = sc.sum * sc.sum * inverse_[sc.count] + right * right * inverse_[sc.n - sc.count];
                    if (score > best[s].score)
                        best[s] = {static_cast<int>(f), split_point(distinct[sc.last], distinct[rank]), score};
                }
                sc.sum += residual[row];
                ++sc.count;
                sc.last = rank;
            }
        }
        for (std::size_t s = 0; s < slots; ++s) {
            if (best[s].feature < 0) continue;
            const auto& sc = scan_[s];
            const double gain = best[s].score - sc.total * sc.total / static_cast<double>(sc.n);
            if (sc.n < 2 * min_leaf || negligible_gain(gain, sc.sumsq)) best[s] = BestSplit{};
        }
        return best;
    }

    const Matrix& x_;
    const std::vector<SortedColumn>& order_;
    const GBMConfig& cfg_;
    std::vector<std::uint32_t> slot_;
    std::vector<double> inverse_;
    std::vector<SlotScan> scan_;
};

double mean_squared(std::span<const double> y, std::span<const double> pred) {
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - pred[i]) * (y[i] - pred[i]);
    return ss / static_cast<double>(y.size());
}

} // namespace

FitResult fit(const Matrix& x, std::span<const double> y, const GBMConfig& cfg, const std::string& catalog_version) {
    cfg.validate();
    if (y.size() != x.rows())
        fail(ErrorKind::LengthMismatch, "target length " + std::to_string(y.size()) + " != rows " +
                                            std::to_string(x.rows()));
    if (x.cols() == 0) fail(ErrorKind::WrongFeatureCount, "training matrix has no features");
    const std::size_t needed = std::max<std::size_t>(2 * static_cast<std::size_t>(cfg.min_samples_leaf), 2);
    if (x.rows() < needed)
        fail(ErrorKind::TooFewRows, "need at least " + std::to_string(needed) + " rows, got " + std::to_string(x.rows()));
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (double v : x.row(r))
            if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "non-finite feature in row " + std::to_string(r));
        if (!std::isfinite(y[r])) fail(ErrorKind::NonFinite, "non-finite target in row " + std::to_string(r));
    }

    const std::size_t n = x.rows();
    std::vector<SortedColumn> order(x.cols());
    std::vector<std::uint32_t> idx(n);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
        auto& column = order[f];
        column.entries.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double v = x(idx[j], f);
            if (column.distinct.empty() || v > column.distinct.back()) column.distinct.push_back(v);
            column.entries[j] = {static_cast<std::uint32_t>(column.distinct.size() - 1), idx[j]};
        }
    }

    FitResult result;
    GBMModel& model = result.model;
    model.config = cfg;
    model.learning_rate = cfg.learning_rate;
    model.catalog_version = catalog_version;
    model.feature_count = x.cols();
    model.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    std::vector<double> pred(n, model.base_prediction);
    std::vector<double> residual(n);
    result.curve.push_back(mean_squared(y, pred));

    std::mt19937_64 rng(cfg.seed);
    std::vector<bool> sampled(n, true);
    std::vector<std::uint32_t> shuffled(n);
    const auto sample_size = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.subsample_fraction * static_cast<double>(n))), needed, n);

    TreeGrower grower(x, order, cfg);
    for (int m = 0; m < cfg.n_trees; ++m) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
        if (sample_size < n) {
            std::iota(shuffled.begin(), shuffled.end(), 0u);
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            std::fill(sampled.begin(), sampled.end(), false);
            for (std::size_t i = 0; i < sample_size; ++i) sampled[shuffled[i]] = true;
        }
        Tree tree = grower.grow(residual, sampled);
        for (std::size_t i = 0; i < n; ++i) pred[i] += model.learning_rate * tree.evaluate(x.row(i));
        model.trees.push_back(std::move(tree));
        result.curve.push_back(mean_squared(y, pred));
    }
    return result;
}

double predict(const GBMModel& model, std::span<const double> x) {
    if (x.size() != model.feature_count)
        fail(ErrorKind::WrongFeatureCount, "expected " + std::to_string(model.feature_count) + " features, got " +
                                               std::to_string(x.size()));
    for (double v : x)
        if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "non-finite feature value");
    double total = 0.0;
    for (const auto& t : model.trees) total += t.evaluate(x);
    return model.base_prediction + model.learning_rate * total;
}

std::vector<std::size_t> split_counts(const GBMModel& model) {
    std::vector<std::size_t> counts(model.feature_count, 0);
    for (const auto& t : model.trees)
        for (const auto& node : t.nodes)
            if (!node.is_leaf()) ++counts[static_cast<std::size_t>(node.feature)];
    return counts;
}

std::optional<SplitCandidate> split_search(std::span<const double> values, std::span<const double> targets,
                                           std::size_t min_leaf) {
    if (values.size() != targets.size())
        fail(ErrorKind::LengthMismatch, "values and targets differ in length");
    const std::size_t n = values.size();
    const double leaf = static_cast<double>(std::max<std::size_t>(min_leaf, 1));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    double total = 0.0, sumsq = 0.0;
    for (double t : targets) {
        total += t;
        sumsq += t * t;
    }
    std::optional<SplitCandidate> best;
    double left_n = 0.0, left_sum = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        left_n += 1.0;
        left_sum += targets[idx[j]];
        const double lo = values[idx[j]];
        const double hi = values[idx[j + 1]];
        if (!(hi > lo)) continue;
        const double right_n = static_cast<double>(n) - left_n;
        if (left_n < leaf || right_n < leaf) continue;
        const double gain = variance_reduction(left_sum, left_n, total - left_sum, right_n);
        if (negligible_gain(gain, sumsq)) continue;
        if (!best || gain > best->gain) best = SplitCandidate{split_point(lo, hi), gain};
    }
    return best;
}

namespace {

constexpr const char* kModelFormat = "pollen-gbm";
constexpr int kModelVersion = 1;

json node_to_json(const Tree& t, int k) {
    const auto& n = t.nodes[static_cast<std::size_t>(k)];
    if (n.is_leaf()) return json{{"leaf", n.value}};
    return json{{"feature", n.feature},
                {"threshold", n.threshold},
                {"left", node_to_json(t, n.left)},
                {"right", node_to_json(t, n.right)}};
}

int node_from_json(const json& j, Tree& t) {
    const int index = static_cast<int>(t.nodes.size());
    t.nodes.push_back(TreeNode{});
    if (j.contains("leaf")) {
        t.nodes[static_cast<std::size_t>(index)].value = j.at("leaf").get<double>();
        return index;
    }
    TreeNode node;
    node.feature = j.at("feature").get<int>();
    node.threshold = j.at("threshold").get<double>();
    if (node.feature < 0 || !std::isfinite(node.threshold))
        fail(ErrorKind::FormatError, "invalid split node in model document");
    node.left = node_from_json(j.at("left"), t);
    node.right = node_from_json(j.at("right"), t);
    t.nodes[static_cast<std::size_t>(index)] = node;
    return index;
}

} // namespace

std::string model_to_json(const GBMModel& model, int indent) {
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(node_to_json(t, 0));
    const auto& c = model.config;
    json doc{{"format", kModelFormat},
             {"version", kModelVersion},
             {"catalog_version", model.catalog_version},
             {"feature_count", model.feature_count},
             {"base_prediction", model.base_prediction},
             {"learning_rate", model.learning_rate},
             {"config",
              {{"n_trees", c.n_trees},
               {"max_depth", c.max_depth},
               {"learning_rate", c.learning_rate},
               {"min_samples_leaf", c.min_samples_leaf},
               {"subsample_fraction", c.subsample_fraction},
               {"seed", c.seed}}},
             {"trees", std::move(trees)}};
    return doc.dump(indent);
}

GBMModel model_from_json(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        if (doc.value("format", std::string{}) != kModelFormat)
            fail(ErrorKind::FormatError, "not a pollen-gbm model document");
        if (doc.at("version").get<int>() != kModelVersion)
            fail(ErrorKind::FormatError, "unsupported model version");
        GBMModel model;
        const auto& c = doc.at("config");
        model.config.n_trees = c.at("n_trees").get<int>();
        model.config.max_depth = c.at("max_depth").get<int>();
        model.config.learning_rate = c.at("learning_rate").get<double>();
        model.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
        model.config.subsample_fraction = c.at("subsample_fraction").get<double>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        model.catalog_version = doc.at("catalog_version").get<std::string>();
        model.feature_count = doc.at("feature_count").get<std::size_t>();
        model.base_prediction = doc.at("base_prediction").get<double>();
        model.learning_rate = doc.at("learning_rate").get<double>();
        for (const auto& jt : doc.at("trees")) {
            Tree t;
            node_from_json(jt, t);
            for (const auto& node : t.nodes)
                if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= model.feature_count)
                    fail(ErrorKind::FormatError, "split feature index exceeds feature_count");
            model.trees.push_back(std::move(t));
        }
        return model;
    } catch (const json::exception& e) {
        fail(ErrorKind::FormatError, std::string("model document: ") + e.what());
    }
}

} // namespace pollen
