#include "fcev/learning/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcev/common/error.hpp"

namespace fcev::learning {

void Dataset::push(std::span<const double> features, double target) {
    if (n_features == 0) n_features = features.size();
    if (features.size() != n_features) throw ShapeError("dataset row has wrong feature count");
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(target);
}

void Dataset::validate() const {
    if (y.empty()) throw ValidationError("training set is empty");
    if (n_features == 0 || x.size() != y.size() * n_features) throw ValidationError("training set shape mismatch");
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("training set has a non-finite feature");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("training set has a non-finite target");
    }
}

BinnedMatrix::BinnedMatrix(const Dataset& data, std::size_t max_bins) : rows_(data.rows()) {
    max_bins = std::clamp<std::size_t>(max_bins, 2, 65535);
    const std::size_t nf = data.n_features;
    edges_.resize(nf);
    bins_.resize(nf * rows_);
    std::vector<double> col(rows_);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t r = 0; r < rows_; ++r) col[r] = data.x[r * nf + f];
        std::vector<double> sorted = col;
        std::sort(sorted.begin(), sorted.end());
        // distinct values with multiplicities
        std::vector<double> uniq;
        std::vector<std::size_t> count;
        for (double v : sorted) {
            if (uniq.empty() || v != uniq.back()) {
                uniq.push_back(v);
                count.push_back(1);
            } else {
                ++count.back();
            }
        }
        auto& edges = edges_[f];
        if (uniq.size() <= max_bins) {
            for (std::size_t i = 0; i + 1 < uniq.size(); ++i) edges.push_back(0.5 * (uniq[i] + uniq[i + 1]));
        } else {
            const double per_bin = static_cast<double>(rows_) / static_cast<double>(max_bins);
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < uniq.size() && edges.size() + 1 < max_bins; ++i) {
                acc += static_cast<double>(count[i]);
                if (acc >= per_bin) {
                    edges.push_back(0.5 * (uniq[i] + uniq[i + 1]));
                    acc = 0.0;
                }
            }
        }
        for (std::size_t r = 0; r < rows_; ++r) {
            bins_[f * rows_ + r] =
                static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), col[r]) - edges.begin());
        }
    }
}

namespace {

struct Builder {
    const BinnedMatrix& bins;
    std::span<const double> y;
    const TreeParams& params;
    Rng& rng;
    std::vector<RegressionTree::Node>& nodes;
    std::vector<std::uint16_t>& split_bins;
    std::vector<std::uint32_t>& rows;
    std::vector<double> hist_sum;
    std::vector<std::uint32_t> hist_cnt;
    std::vector<std::size_t> feature_order;

    std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const auto id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        split_bins.push_back(0);
        const std::size_t n = end - begin;
        double sum = 0.0, lo = y[rows[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            const double v = y[rows[i]];
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        nodes[id].value = sum / static_cast<double>(n);
        const bool depth_ok = params.max_depth == 0 || depth < params.max_depth;
        if (!depth_ok || n < 2 * params.min_leaf || lo == hi) return id;

        std::int32_t feature = -1;
        std::size_t split = 0;
        if (params.completely_random) {
            std::tie(feature, split) = random_split(begin, end);
        } else {
            std::tie(feature, split) = best_split(begin, end, sum);
        }
        if (feature < 0) return id;

        const auto f = static_cast<std::size_t>(feature);
        auto mid_it = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                            rows.begin() + static_cast<std::ptrdiff_t>(end),
                                            [&](std::uint32_t r) { return bins.bin(f, r) <= split; });
        const auto mid = static_cast<std::size_t>(mid_it - rows.begin());
        if (mid == begin || mid == end) return id;

        nodes[id].feature = feature;
        nodes[id].threshold = bins.edge(f, split);
        split_bins[id] = static_cast<std::uint16_t>(split);
        const auto left = grow(begin, mid, depth + 1);
        const auto right = grow(mid, end, depth + 1);
        nodes[id].left = left;
        nodes[id].right = right;
        return id;
    }

    std::pair<std::int32_t, std::size_t> random_split(std::size_t begin, std::size_t end) {
        const std::size_t nf = bins.features();
        for (std::size_t attempt = 0; attempt < nf; ++attempt) {
            const std::size_t f = rng.index(nf);
            std::uint16_t bmin = 65535, bmax = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto b = bins.bin(f, rows[i]);
                bmin = std::min(bmin, b);
                bmax = std::max(bmax, b);
            }
            if (bmin == bmax) continue;
            const std::size_t split = bmin + rng.index(static_cast<std::size_t>(bmax - bmin));
            return {static_cast<std::int32_t>(f), split};
        }
        return {-1, 0};
    }

    std::pair<std::int32_t, std::size_t> best_split(std::size_t begin, std::size_t end, double sum) {
        const std::size_t nf = bins.features();
        const std::size_t n = end - begin;
        std::size_t tries = params.max_features == 0 ? nf : std::min(params.max_features, nf);
        feature_order.resize(nf);
        std::iota(feature_order.begin(), feature_order.end(), 0);
        if (tries < nf) {
            for (std::size_t i = 0; i < tries; ++i) std::swap(feature_order[i], feature_order[i + rng.index(nf - i)]);
            std::sort(feature_order.begin(), feature_order.begin() + static_cast<std::ptrdiff_t>(tries));
        }
        const double parent = sum * sum / static_cast<double>(n);
        double best_gain = 0.0;
        std::int32_t best_f = -1;
        std::size_t best_b = 0;
        for (std::size_t k = 0; k < tries; ++k) {
            const std::size_t f = feature_order[k];
            const std::size_t nb = bins.bin_count(f);
            if (nb < 2) continue;
            hist_sum.assign(nb, 0.0);
            hist_cnt.assign(nb, 0);
            for (std::size_t i = begin; i < end; ++i) {
                const auto r = rows[i];
                const auto b = bins.bin(f, r);
                hist_sum[b] += y[r];
                ++hist_cnt[b];
            }
            double sl = 0.0;
            std::size_t nl = 0;
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                sl += hist_sum[b];
                nl += hist_cnt[b];
                if (hist_cnt[b] == 0) continue;
                const std::size_t nr = n - nl;
                if (nl < params.min_leaf) continue;
                if (nr < params.min_leaf) break;
                const double sr = sum - sl;
                const double gain =
                    sl * sl / static_cast<double>(nl) + sr * sr / static_cast<double>(nr) - parent;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = static_cast<std::int32_t>(f);
                    best_b = b;
                }
            }
        }
        // Ignore gains at round-off level relative to the node's sum of squares.
        if (best_f >= 0 && !(best_gain > 1e-14 * std::max(parent, 1e-300))) return {-1, 0};
        return {best_f, best_b};
    }
};

}  // namespace

RegressionTree RegressionTree::fit(const BinnedMatrix& bins, std::span<const double> targets,
                                   std::vector<std::uint32_t> rows, const TreeParams& params, Rng& rng) {
    if (rows.empty()) throw ValidationError("cannot fit a tree on zero rows");
    RegressionTree tree;
    TreeParams p = params;
    p.min_leaf = std::max<std::size_t>(1, p.min_leaf);
    Builder b{bins, targets, p, rng, tree.nodes_, tree.split_bins_, rows, {}, {}, {}};
    b.grow(0, rows.size(), 0);
    return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& nd = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    return nodes_[i].value;
}

double RegressionTree::predict_binned(const BinnedMatrix& bins, std::size_t row) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& nd = nodes_[i];
        const auto f = static_cast<std::size_t>(nd.feature);
        i = static_cast<std::size_t>(bins.bin(f, row) <= split_bins_[i] ? nd.left : nd.right);
    }
    return nodes_[i].value;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (nodes_[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
        }
    }
    return deepest;
}

void RegressionTree::save(ByteWriter& out) const {
    out.u64(nodes_.size());
    for (const auto& n : nodes_) {
        out.i32(n.feature);
        out.f64(n.threshold);
        out.i32(n.left);
        out.i32(n.right);
        out.f64(n.value);
    }
}

RegressionTree RegressionTree::load(ByteReader& in) {
    RegressionTree t;
    const auto count = in.u64();
    if (count == 0 || count > (1ULL << 31)) throw ParseError("tree node count out of range");
    t.nodes_.resize(count);
    for (auto& n : t.nodes_) {
        n.feature = in.i32();
        n.threshold = in.f64();
        n.left = in.i32();
        n.right = in.i32();
        n.value = in.f64();
        const auto c = static_cast<std::int64_t>(count);
        if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= c || n.right >= c)) {
            throw ParseError("tree node child index out of range");
        }
    }
    return t;
}

}  // namespace fcev::learning
