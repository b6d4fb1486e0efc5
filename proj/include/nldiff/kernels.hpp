#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/random.hpp"

namespace nldiff {

// ---------------------------------------------------------------------------
// Spatial kernel J
// ---------------------------------------------------------------------------

enum class SpatialFamily { gaussian, box, custom_table };

using Offset = std::array<int, 2>;

struct KernelSample {
    Offset offset{0, 0};
    double weight = 0.0;
};

inline std::string offset_string(const Offset& d, int dim) {
    return dim == 1 ? "(" + std::to_string(d[0]) + ")"
                    : "(" + std::to_string(d[0]) + "," + std::to_string(d[1]) + ")";
}

/// Samples of J on the integer offsets of a grid, rescaled so that
/// node_volume * sum(weights) == 1.
///
/// Offsets are limited to what two nodes of the grid can actually realise
/// (|d_a| <= counts_a - 1), the discrete counterpart of restricting J to a
/// ball containing all differences x - y.
class SpatialKernelTable {
public:
    const Grid& grid() const { return grid_; }
    SpatialFamily family() const { return family_; }
    double radius() const { return radius_; }
    const std::vector<Offset>& offsets() const { return offsets_; }
    const std::vector<double>& weights() const { return weights_; }
    // node_volume * sum of the raw samples; the raw samples were divided by it.
    double normalization() const { return normalization_; }
    std::size_t size() const { return offsets_.size(); }

    double mass() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return grid_.node_volume() * s;
    }

    double max_weight() const {
        double m = 0.0;
        for (double w : weights_) m = std::max(m, w);
        return m;
    }

    // Weight of an offset, 0 when the offset is not stored.
    double weight_at(const Offset& d) const {
        auto it = std::lower_bound(offsets_.begin(), offsets_.end(), d);
        if (it == offsets_.end() || *it != d) return 0.0;
        return weights_[static_cast<std::size_t>(it - offsets_.begin())];
    }

    friend SpatialKernelTable make_spatial_kernel(const Grid&, SpatialFamily, double,
                                                  const std::vector<KernelSample>*);

private:
    Grid grid_;
    SpatialFamily family_ = SpatialFamily::gaussian;
    double radius_ = 0.0;
    std::vector<Offset> offsets_;  // sorted lexicographically
    std::vector<double> weights_;
    double normalization_ = 1.0;
};

// Gaussian samples are exp(-|x|^2 / radius^2), cut off at |x| >= 4 radius.
// Box samples are 1/|B_radius| on the closed ball. Custom samples are taken
// as given and must be even and non-negative.
inline SpatialKernelTable make_spatial_kernel(const Grid& grid, SpatialFamily family, double radius,
                                              const std::vector<KernelSample>* table = nullptr) {
    if (family != SpatialFamily::custom_table && !(radius > 0.0))
        throw ConfigError("spatial kernel radius must be positive");

    const int dim = grid.dim();
    std::array<int, 2> reach{0, 0};
    for (int a = 0; a < dim; ++a) reach[a] = static_cast<int>(grid.counts()[a]) - 1;

    std::map<Offset, double> raw;
    if (family == SpatialFamily::custom_table) {
        if (table == nullptr || table->empty()) throw ConfigError("custom spatial kernel needs a table");
        std::map<Offset, double> given;
        std::vector<std::string> bad;
        for (const auto& s : *table) {
            Offset d = s.offset;
            if (dim == 1) d[1] = 0;
            if (!given.emplace(d, s.weight).second) bad.push_back(offset_string(d, dim) + " duplicated");
        }
        for (const auto& [d, w] : given) {
            if (!(w >= 0.0) || !std::isfinite(w)) bad.push_back(offset_string(d, dim) + " negative or non-finite");
            auto mirror = given.find(Offset{-d[0], -d[1]});
            if (mirror == given.end())
                bad.push_back(offset_string(d, dim) + " has no mirror offset");
            else if (mirror->second != w)
                bad.push_back(offset_string(d, dim) + " weight differs from its mirror");
        }
        if (!bad.empty()) throw ValidationError("custom spatial kernel table is not even and non-negative", bad);
        for (const auto& [d, w] : given) {
            if (std::abs(d[0]) > reach[0] || std::abs(d[1]) > reach[1] || w == 0.0) continue;
            raw.emplace(d, w);
        }
        double r2 = 0.0;
        for (const auto& [d, w] : raw) {
            double q = 0.0;
            for (int a = 0; a < dim; ++a) q += (d[a] * grid.spacing()[a]) * (d[a] * grid.spacing()[a]);
            r2 = std::max(r2, q);
        }
        radius = std::sqrt(r2);
    } else {
        const double cutoff = family == SpatialFamily::gaussian ? 4.0 * radius : radius;
        std::array<int, 2> span{0, 0};
        for (int a = 0; a < dim; ++a)
            span[a] = std::min(reach[a], static_cast<int>(std::ceil(cutoff / grid.spacing()[a])));
        const double ball = dim == 1 ? 2.0 * radius : M_PI * radius * radius;
        for (int d0 = -span[0]; d0 <= span[0]; ++d0) {
            for (int d1 = -span[1]; d1 <= span[1]; ++d1) {
                const double x0 = d0 * grid.spacing()[0];
                const double x1 = dim == 2 ? d1 * grid.spacing()[1] : 0.0;
                const double r2 = x0 * x0 + x1 * x1;
                double w = 0.0;
                if (family == SpatialFamily::gaussian) {
                    if (r2 < cutoff * cutoff) w = std::exp(-r2 / (radius * radius));
                } else if (r2 <= radius * radius * (1.0 + 1e-12)) {
                    w = 1.0 / ball;
                }
                if (w > 0.0) raw.emplace(Offset{d0, d1}, w);
            }
        }
    }
    if (raw.empty()) throw ConfigError("spatial kernel has no support on this grid");

    SpatialKernelTable k;
    k.grid_ = grid;
    k.family_ = family;
    k.radius_ = radius;
    double sum = 0.0;
    for (const auto& [d, w] : raw) sum += w;
    k.normalization_ = grid.node_volume() * sum;
    for (const auto& [d, w] : raw) {
        k.offsets_.push_back(d);
        k.weights_.push_back(w / k.normalization_);
    }
    return k;
}

// Custom table CSV: one "d0,weight" (1D) or "d0,d1,weight" (2D) per line,
// '#' starts a comment.
inline std::vector<KernelSample> read_kernel_table_csv(std::istream& is, int dim) {
    std::vector<KernelSample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> cols;
        double v;
        while (ss >> v) cols.push_back(v);
        if (cols.empty()) continue;
        if (cols.size() != static_cast<std::size_t>(dim) + 1)
            throw FormatError("kernel table line " + std::to_string(lineno) + ": expected " +
                              std::to_string(dim + 1) + " columns");
        KernelSample s;
        for (int a = 0; a < dim; ++a) {
            if (cols[a] != std::floor(cols[a]))
                throw FormatError("kernel table line " + std::to_string(lineno) + ": offsets must be integers");
            s.offset[a] = static_cast<int>(cols[a]);
        }
        s.weight = cols[dim];
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mollifier
// ---------------------------------------------------------------------------

/// The standard bump rho(s) = c exp(-1/(1 - s^2)) on (-1, 1), with c fixing
/// the unit integral. rho_n(s) = n rho(n s).
class Mollifier {
public:
    static const Mollifier& standard() {
        static const Mollifier m;
        return m;
    }

    double constant() const { return c_; }

    double profile(double s) const {
        const double a = std::abs(s);
        if (a >= 1.0) return 0.0;
        return c_ * std::exp(-1.0 / (1.0 - a * a));
    }

    double scaled(double s, int n) const { return n * profile(n * s); }

    // I_alpha = \int rho(s) |s|^alpha ds, via s = v^2 so the integrand stays
    // smooth at the origin.
    double moment(double alpha) const {
        constexpr int m = 200000;
        double sum = 0.0;
        for (int k = 0; k < m; ++k) {
            const double v = (k + 0.5) / m;
            sum += profile(v * v) * std::pow(v, 2.0 * alpha) * 2.0 * v;
        }
        return 2.0 * sum / m;
    }

    /// Symmetric midpoint rule on (-1, 1) with weights summing to one.
    /// nodes[k] > 0 stands for the pair +-nodes[k], each carrying weights[k];
    /// an odd count adds a centre node with centre_weight.
    struct Rule {
        std::vector<double> nodes;
        std::vector<double> weights;
        double centre_weight = 0.0;
    };

    Rule rule(std::size_t count) const {
        Rule r;
        const std::size_t half = count / 2;
        const double step = 2.0 / static_cast<double>(count);
        double total = 0.0;
        for (std::size_t k = 0; k < half; ++k) {
            const double xi = count % 2 == 0 ? (static_cast<double>(k) + 0.5) * step
                                             : (static_cast<double>(k) + 1.0) * step;
            const double w = profile(xi) * step;
            r.nodes.push_back(xi);
            r.weights.push_back(w);
            total += 2.0 * w;
        }
        if (count % 2 == 1) {
            r.centre_weight = profile(0.0) * step;
            total += r.centre_weight;
        }
        for (double& w : r.weights) w /= total;
        r.centre_weight /= total;
        return r;
    }

private:
    Mollifier() {
        constexpr int m = 200000;
        double sum = 0.0;
        for (int k = 0; k < m; ++k) {
            const double s = -1.0 + (k + 0.5) * (2.0 / m);
            sum += std::exp(-1.0 / (1.0 - s * s));
        }
        c_ = 1.0 / (sum * (2.0 / m));
    }
    double c_ = 1.0;
};

// ---------------------------------------------------------------------------
// Range kernel A
// ---------------------------------------------------------------------------

/// Piecewise-linear exponent function p(sigma) on sigma >= 0, constant past
/// the last knot.
class ExponentTable {
public:
    ExponentTable() = default;
    explicit ExponentTable(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
        if (knots_.empty()) throw ConfigError("exponent table is empty");
        if (knots_.front().first != 0.0) throw ConfigError("exponent table must start at sigma = 0");
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            if (!std::isfinite(knots_[i].second)) throw ConfigError("exponent table has a non-finite value");
            if (i > 0 && !(knots_[i].first > knots_[i - 1].first))
                throw ConfigError("exponent table sigma values must increase strictly");
            if (i > 0 && knots_[i].second > knots_[i - 1].second)
                throw ConfigError("exponent table must be non-increasing");
        }
    }

    double operator()(double sigma) const {
        if (knots_.size() == 1 || sigma <= 0.0) return knots_.front().second;
        if (sigma >= knots_.back().first) return knots_.back().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), sigma,
                                   [](double s, const auto& k) { return s < k.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double f = (sigma - lo.first) / (hi.first - lo.first);
        return lo.second + f * (hi.second - lo.second);
    }

    double at_zero() const { return knots_.front().second; }
    double slope_at_zero() const {
        if (knots_.size() == 1) return 0.0;
        return (knots_[1].second - knots_[0].second) / (knots_[1].first - knots_[0].first);
    }
    double min_value() const { return knots_.back().second; }
    double max_value() const { return knots_.front().second; }
    double last_knot() const { return knots_.back().first; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    bool operator==(const ExponentTable&) const = default;

private:
    std::vector<std::pair<double, double>> knots_;
};

enum class RangeFamily { linear, p_laplacian, variable_exponent, spatial_exponent, bilateral_gaussian, mollified, custom };

inline const char* to_string(RangeFamily f) {
    switch (f) {
        case RangeFamily::linear: return "linear";
        case RangeFamily::p_laplacian: return "p_laplacian";
        case RangeFamily::variable_exponent: return "variable_exponent";
        case RangeFamily::spatial_exponent: return "spatial_exponent";
        case RangeFamily::bilateral_gaussian: return "bilateral_gaussian";
        case RangeFamily::mollified: return "mollified";
        case RangeFamily::custom: return "custom";
    }
    return "?";
}

/// A(t, x, y, s): the diffusion law applied to the difference s = u(y) - u(x).
///
/// Every built-in family is odd in s by construction (the formulas only use
/// |s| and s), so A(-s) == -A(s) holds bit-for-bit.
class RangeKernel {
public:
    static RangeKernel linear() {
        RangeKernel k;
        k.family_ = RangeFamily::linear;
        k.p_ = 2.0;
        return k;
    }

    static RangeKernel p_laplacian(double p) {
        if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("p_laplacian requires finite p > 1");
        RangeKernel k;
        k.family_ = RangeFamily::p_laplacian;
        k.p_ = p;
        k.alpha_ = std::min(1.0, p - 1.0);
        return k;
    }

    // s * exp(-s^2/h^2). h = +inf is accepted and collapses to the linear law.
    static RangeKernel bilateral_gaussian(double h) {
        if (!(h > 0.0)) throw ConfigError("bilateral range scale h must be positive");
        RangeKernel k;
        k.family_ = RangeFamily::bilateral_gaussian;
        k.h_ = h;
        k.monotone_ = false;
        return k;
    }

    // |s|^{p(|s|)-2} s. Requires p(0) >= 2 so the law stays Lipschitz at 0.
    static RangeKernel variable_exponent(ExponentTable table) {
        if (table.at_zero() < 2.0) throw ConfigError("variable exponent needs p(0) >= 2");
        RangeKernel k;
        k.family_ = RangeFamily::variable_exponent;
        k.table_ = std::make_shared<const ExponentTable>(std::move(table));
        k.monotone_ = k.sampled_monotone(k.table_->last_knot() + 1.0) && k.table_->min_value() >= 1.0;
        return k;
    }

    // |s|^{q(x,y)-2} s with q(x,y) = p(|u0(y) - u0(x)|) frozen from the initial data.
    static RangeKernel spatial_exponent(ExponentTable table, const Field& u0) {
        if (!(table.min_value() > 1.0)) throw ConfigError("spatial exponent table values must exceed 1");
        RangeKernel k;
        k.family_ = RangeFamily::spatial_exponent;
        k.alpha_ = std::min(1.0, table.min_value() - 1.0);
        k.table_ = std::make_shared<const ExponentTable>(std::move(table));
        k.pair_source_ = std::make_shared<const std::vector<double>>(u0.values());
        return k;
    }

    static RangeKernel custom(std::string name, std::function<double(double)> fn, bool monotone, double alpha) {
        RangeKernel k;
        k.family_ = RangeFamily::custom;
        k.name_ = std::move(name);
        k.custom_ = std::make_shared<const std::function<double(double)>>(std::move(fn));
        k.monotone_ = monotone;
        k.alpha_ = alpha;
        return k;
    }

    friend RangeKernel mollify_range_kernel(const RangeKernel& base, int n, std::size_t quad_count);

    double operator()(double t, std::size_t x, std::size_t y, double s) const {
        switch (family_) {
            case RangeFamily::linear: return s;
            case RangeFamily::p_laplacian: return power_law(p_, s);
            case RangeFamily::bilateral_gaussian: return s * std::exp(-(s * s) / (h_ * h_));
            case RangeFamily::variable_exponent: return power_law((*table_)(std::abs(s)), s);
            case RangeFamily::spatial_exponent: {
                const auto& u0 = *pair_source_;
                return power_law((*table_)(std::abs(u0[y] - u0[x])), s);
            }
            case RangeFamily::mollified: {
                // Pairs +-xi are summed together so A_n(0) == 0 and A_n(-s) == -A_n(s) exactly.
                const RangeKernel& b = *base_;
                const double inv_n = 1.0 / n_;
                double acc = rule_->centre_weight * b(t, x, y, s);
                for (std::size_t k = 0; k < rule_->nodes.size(); ++k) {
                    const double shift = rule_->nodes[k] * inv_n;
                    acc += rule_->weights[k] * (b(t, x, y, s - shift) + b(t, x, y, s + shift));
                }
                return acc;
            }
            case RangeFamily::custom: return (*custom_)(s);
        }
        return 0.0;
    }

    // Evaluation for kernels that do not depend on the node pair.
    double operator()(double s) const { return (*this)(0.0, 0, 0, s); }

    RangeFamily family() const { return family_; }
    double p() const { return p_; }
    double h() const { return h_; }
    double holder_alpha() const { return alpha_; }
    bool monotone() const { return monotone_; }
    // Mollified kernels are Lipschitz whatever the Hölder exponent of their base.
    bool lipschitz() const { return family_ == RangeFamily::mollified || alpha_ >= 1.0; }
    bool pair_dependent() const {
        return family_ == RangeFamily::spatial_exponent || (base_ && base_->pair_dependent());
    }
    const RangeKernel* base() const { return base_.get(); }
    int mollifier_n() const { return n_; }
    std::size_t quad_count() const { return quad_count_; }
    const ExponentTable* exponent_table() const { return table_.get(); }
    const std::vector<double>* pair_source() const { return pair_source_.get(); }
    const std::string& name() const { return name_; }

    std::string describe() const {
        switch (family_) {
            case RangeFamily::p_laplacian: return "p_laplacian(p=" + format_double(p_) + ")";
            case RangeFamily::bilateral_gaussian: return "bilateral_gaussian(h=" + format_double(h_) + ")";
            case RangeFamily::mollified:
                return "mollified(" + base_->describe() + ", n=" + std::to_string(n_) + ")";
            case RangeFamily::custom: return "custom(" + name_ + ")";
            default: return to_string(family_);
        }
    }

private:
    RangeKernel() = default;

    // |s|^{q-2} s with the s = 0 case returned directly, so no 0^{negative}
    // is ever evaluated.
    static double power_law(double q, double s) {
        if (s == 0.0) return 0.0;
        const double a = std::abs(s);
        if (q == 2.0) return s;
        if (q == 3.0) return a * s;
        if (q == 1.5) return s / std::sqrt(a);
        return std::pow(a, q - 2.0) * s;
    }

    bool sampled_monotone(double range) const {
        constexpr int m = 4000;
        double prev = (*this)(0.0);
        for (int k = 1; k <= m; ++k) {
            const double v = (*this)(range * k / m);
            if (v < prev - 1e-12) return false;
            prev = v;
        }
        return true;
    }

    RangeFamily family_ = RangeFamily::linear;
    double p_ = 2.0;
    double h_ = 1.0;
    double alpha_ = 1.0;
    bool monotone_ = true;
    std::string name_;
    std::shared_ptr<const ExponentTable> table_;
    std::shared_ptr<const std::vector<double>> pair_source_;
    std::shared_ptr<const std::function<double(double)>> custom_;
    std::shared_ptr<const RangeKernel> base_;
    std::shared_ptr<const Mollifier::Rule> rule_;
    int n_ = 0;
    std::size_t quad_count_ = 0;
};

/// A_n = rho_n * A, evaluated by a symmetric midpoint rule with quad_count
/// nodes over [s - 1/n, s + 1/n].
inline RangeKernel mollify_range_kernel(const RangeKernel& base, int n, std::size_t quad_count) {
    if (n < 1) throw ConfigError("mollifier index n must be >= 1");
    if (quad_count < 64) throw ConfigError("mollifier quadrature needs at least 64 nodes");
    RangeKernel k;
    k.family_ = RangeFamily::mollified;
    k.base_ = std::make_shared<const RangeKernel>(base);
    k.rule_ = std::make_shared<const Mollifier::Rule>(Mollifier::standard().rule(quad_count));
    k.n_ = n;
    k.quad_count_ = quad_count;
    k.alpha_ = base.holder_alpha();
    k.monotone_ = base.monotone();
    return k;
}

// Node pairs on which pair-dependent kernels reach their extreme exponents;
// (0,0) for all others. Sampling routines below evaluate A on these pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> probe_pairs(const RangeKernel& A,
                                                                    const SpatialKernelTable& J) {
    std::vector<std::pair<std::size_t, std::size_t>> out{{0, 0}};
    const RangeKernel* k = &A;
    while (k->family() == RangeFamily::mollified) k = k->base();
    if (k->family() != RangeFamily::spatial_exponent) return out;
    const Grid& g = J.grid();
    const auto& u0 = *k->pair_source();
    const auto& table = *k->exponent_table();
    double lo = kInfinity, hi = -kInfinity;
    std::pair<std::size_t, std::size_t> arg_lo{0, 0}, arg_hi{0, 0};
    for (std::size_t x = 0; x < g.size(); ++x) {
        const auto [i0, i1] = g.multi_index(x);
        for (const auto& d : J.offsets()) {
            const long j0 = static_cast<long>(i0) + d[0];
            const long j1 = static_cast<long>(i1) + d[1];
            if (j0 < 0 || j1 < 0 || j0 >= static_cast<long>(g.count(0)) || j1 >= static_cast<long>(g.count(1)))
                continue;
            const std::size_t y = g.flat_index(static_cast<std::size_t>(j0), static_cast<std::size_t>(j1));
            const double q = table(std::abs(u0[y] - u0[x]));
            if (q < lo) lo = q, arg_lo = {x, y};
            if (q > hi) hi = q, arg_hi = {x, y};
        }
    }
    out.push_back(arg_lo);
    out.push_back(arg_hi);
    return out;
}

// sup |A(s)/s| for 1e-8 <= |s| <= range. Kernels that are not Lipschitz at 0
// exceed any bound near the origin; the cutoff keeps the estimate finite.
inline double sample_growth_constant(const RangeKernel& A, double range,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs = {{0, 0}}) {
    constexpr int m = 4000;
    constexpr double s_min = 1e-8;
    double best = 0.0;
    for (const auto& [x, y] : pairs) {
        for (int k = 0; k <= m; ++k) {
            const double geo = s_min * std::pow(range / s_min, static_cast<double>(k) / m);
            const double lin = std::max(s_min, range * k / m);
            for (double s : {geo, lin, -geo, -lin}) best = std::max(best, std::abs(A(0.0, x, y, s) / s));
        }
    }
    return best;
}

// Largest finite-difference slope of A on a fine grid of [-range, range],
// refined geometrically near 0.
inline double sample_lipschitz_constant(const RangeKernel& A, double range,
                                        const std::vector<std::pair<std::size_t, std::size_t>>& pairs = {{0, 0}}) {
    std::vector<double> s;
    constexpr int m = 20000;
    for (int k = -m; k <= m; ++k) s.push_back(range * k / m);
    for (int k = 0; k <= 400; ++k) {
        const double g = 1e-9 * std::pow(range * 1e-4 / 1e-9, k / 400.0);
        s.push_back(g);
        s.push_back(-g);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    double best = 0.0;
    for (const auto& [x, y] : pairs) {
        double prev = A(0.0, x, y, s[0]);
        for (std::size_t i = 1; i < s.size(); ++i) {
            const double v = A(0.0, x, y, s[i]);
            best = std::max(best, std::abs(v - prev) / (s[i] - s[i - 1]));
            prev = v;
        }
    }
    return best;
}

// sup |A(s1) - A(s2)| / |s1 - s2|^alpha over all pairs of a symmetric grid
// on [-range, range] plus random pairs.
inline double sample_holder_constant(const RangeKernel& A, double alpha, double range, std::uint64_t seed = 42,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs = {{0, 0}}) {
    constexpr int m = 300;
    std::vector<double> s;
    for (int k = -m; k <= m; ++k) s.push_back(range * k / m);
    Rng rng(seed);
    double best = 0.0;
    for (const auto& [x, y] : pairs) {
        std::vector<double> v(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) v[i] = A(0.0, x, y, s[i]);
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j)
                best = std::max(best, std::abs(v[j] - v[i]) / std::pow(s[j] - s[i], alpha));
        for (int k = 0; k < 2000; ++k) {
            const double a = rng.uniform(-range, range), b = rng.uniform(-range, range);
            if (a == b) continue;
            best = std::max(best, std::abs(A(0.0, x, y, a) - A(0.0, x, y, b)) / std::pow(std::abs(a - b), alpha));
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Reaction f
// ---------------------------------------------------------------------------

enum class ReactionFamily { zero, linear_decay, affine, logistic, custom_table };

inline const char* to_string(ReactionFamily f) {
    switch (f) {
        case ReactionFamily::zero: return "zero";
        case ReactionFamily::linear_decay: return "linear_decay";
        case ReactionFamily::affine: return "affine";
        case ReactionFamily::logistic: return "logistic";
        case ReactionFamily::custom_table: return "custom_table";
    }
    return "?";
}

/// f(t, x, s). The growth constant C_f and Lipschitz constant L_f are exact
/// for the linear families and sampled on [-working_range, working_range]
/// for the others.
class Reaction {
public:
    static Reaction zero() { return Reaction(ReactionFamily::zero); }

    // -rate * s
    static Reaction linear_decay(double rate) {
        Reaction f(ReactionFamily::linear_decay);
        f.a_ = rate;
        f.c_f_ = std::abs(rate);
        f.l_f_ = std::abs(rate);
        f.non_increasing_ = rate >= 0.0;
        return f;
    }

    // a + b s with a >= 0
    static Reaction affine(double a, double b) {
        if (!(a >= 0.0)) throw ConfigError("affine reaction needs a >= 0 so that f(0) >= 0");
        Reaction f(ReactionFamily::affine);
        f.a_ = a;
        f.b_ = b;
        f.c_f_ = std::max(a, std::abs(b));
        f.l_f_ = std::abs(b);
        f.non_increasing_ = b <= 0.0;
        return f;
    }

    // r s (1 - s/K)
    static Reaction logistic(double r, double capacity, double working_range = 2.0) {
        if (!(capacity > 0.0)) throw ConfigError("logistic carrying capacity must be positive");
        Reaction f(ReactionFamily::logistic);
        f.a_ = r;
        f.b_ = capacity;
        f.range_ = working_range;
        f.l_f_ = std::abs(r) * (1.0 + 2.0 * working_range / capacity);
        f.c_f_ = f.sampled_growth();
        f.non_increasing_ = r == 0.0;
        return f;
    }

    // Piecewise-linear f(s) through (s, f) knots, constant beyond the ends.
    static Reaction custom_table(std::vector<std::pair<double, double>> knots, double working_range = 2.0) {
        if (knots.size() < 2) throw ConfigError("reaction table needs at least two knots");
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (!(knots[i].first > knots[i - 1].first)) throw ConfigError("reaction table s values must increase");
        Reaction f(ReactionFamily::custom_table);
        f.knots_ = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(knots));
        f.range_ = working_range;
        double lf = 0.0;
        bool dec = true;
        for (std::size_t i = 1; i < f.knots_->size(); ++i) {
            const auto& [s0, f0] = (*f.knots_)[i - 1];
            const auto& [s1, f1] = (*f.knots_)[i];
            lf = std::max(lf, std::abs(f1 - f0) / (s1 - s0));
            dec = dec && f1 <= f0;
        }
        f.l_f_ = lf;
        f.non_increasing_ = dec;
        f.c_f_ = f.sampled_growth();
        return f;
    }

    double operator()(double /*t*/, std::size_t /*x*/, double s) const {
        switch (family_) {
            case ReactionFamily::zero: return 0.0;
            case ReactionFamily::linear_decay: return -a_ * s;
            case ReactionFamily::affine: return a_ + b_ * s;
            case ReactionFamily::logistic: return a_ * s * (1.0 - s / b_);
            case ReactionFamily::custom_table: return table_value(s);
        }
        return 0.0;
    }
    double operator()(double s) const { return (*this)(0.0, 0, s); }

    ReactionFamily family() const { return family_; }
    bool is_zero() const { return family_ == ReactionFamily::zero; }
    double growth_constant() const { return c_f_; }
    double lipschitz_constant() const { return l_f_; }
    bool non_increasing() const { return non_increasing_; }
    double working_range() const { return range_; }
    // decay rate / a / r
    double first_parameter() const { return a_; }
    // b / capacity
    double second_parameter() const { return b_; }

private:
    explicit Reaction(ReactionFamily f) : family_(f) {}

    double table_value(double s) const {
        const auto& k = *knots_;
        if (s <= k.front().first) return k.front().second;
        if (s >= k.back().first) return k.back().second;
        auto it = std::upper_bound(k.begin(), k.end(), s, [](double v, const auto& p) { return v < p.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        return lo.second + (s - lo.first) / (hi.first - lo.first) * (hi.second - lo.second);
    }

    double sampled_growth() const {
        constexpr int m = 20000;
        double best = 0.0;
        for (int k = -m; k <= m; ++k) {
            const double s = range_ * k / m;
            best = std::max(best, std::abs((*this)(s)) / (1.0 + std::abs(s)));
        }
        return best;
    }

    ReactionFamily family_;
    double a_ = 0.0;
    double b_ = 0.0;
    double range_ = 2.0;
    double c_f_ = 0.0;
    double l_f_ = 0.0;
    bool non_increasing_ = true;
    std::shared_ptr<const std::vector<std::pair<double, double>>> knots_;
};

// ---------------------------------------------------------------------------
// Structural assumptions
// ---------------------------------------------------------------------------

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> items;

    bool all_passed() const {
        return std::all_of(items.begin(), items.end(), [](const auto& c) { return c.passed; });
    }
    const AssumptionCheck* find(const std::string& name) const {
        for (const auto& c : items)
            if (c.name == name) return &c;
        return nullptr;
    }
    std::string failures() const {
        std::string out;
        for (const auto& c : items)
            if (!c.passed) out += (out.empty() ? "" : "; ") + c.name + ": " + c.detail;
        return out;
    }
};

/// Samples every structural requirement on J, A, f and u0 and reports each
/// one; nothing is thrown for a failed item.
inline ValidationReport validate_assumptions(const SpatialKernelTable& J, const RangeKernel& A, const Reaction& f,
                                             const Field& u0, std::uint64_t seed = 42) {
    ValidationReport rep;
    auto add = [&](std::string name, bool ok, std::string detail) {
        rep.items.push_back({std::move(name), ok, ok ? std::string() : std::move(detail)});
    };
    const Grid& g = J.grid();
    const int dim = g.dim();

    {
        std::string bad;
        for (std::size_t i = 0; i < J.size(); ++i) {
            const Offset& d = J.offsets()[i];
            if (J.weight_at(Offset{-d[0], -d[1]}) != J.weights()[i]) {
                bad = "offset " + offset_string(d, dim) + " differs from its mirror";
                break;
            }
        }
        add("J evenness", bad.empty(), bad);
    }
    {
        std::string bad;
        for (std::size_t i = 0; i < J.size(); ++i)
            if (!(J.weights()[i] >= 0.0)) {
                bad = "offset " + offset_string(J.offsets()[i], dim) + " is negative";
                break;
            }
        add("J non-negativity", bad.empty(), bad);
    }
    add("J unit integral", std::abs(J.mass() - 1.0) <= 1e-10, "mass " + format_double(J.mass()));

    double scale = 1.0;
    for (double v : u0.values())
        if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
    const double s_range = 2.0 * scale;

    Rng rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> pairs = probe_pairs(A, J);
    for (int k = 0; k < 16; ++k) pairs.emplace_back(rng.index(g.size()), rng.index(g.size()));
    {
        std::string bad;
        for (const auto& [x, y] : pairs) {
            const double v = A(0.0, x, y, 0.0);
            if (v != 0.0) {
                bad = "A(0) = " + format_double(v);
                break;
            }
        }
        add("A(0) = 0", bad.empty(), bad);
    }
    std::string odd_bad, sign_bad, sym_bad;
    for (int k = 0; k < 1000; ++k) {
        const auto [x, y] = pairs[static_cast<std::size_t>(k) % pairs.size()];
        const double s = rng.uniform(-s_range, s_range);
        const double t = rng.uniform(0.0, 1.0);
        const double ap = A(t, x, y, s), am = A(t, x, y, -s);
        if (odd_bad.empty() && std::abs(ap + am) > 1e-12 * std::max(1.0, std::abs(ap)))
            odd_bad = "A(-s) != -A(s) at s = " + format_double(s);
        if (sign_bad.empty() && (ap * s < 0.0 || am * (-s) < 0.0))
            sign_bad = "A(s) s < 0 at s = " + format_double(ap * s < 0.0 ? s : -s);
        const double swapped = A(t, y, x, s);
        if (sym_bad.empty() && std::abs(ap - swapped) > 1e-12 * std::max(1.0, std::abs(ap)))
            sym_bad = "A(x,y,s) != A(y,x,s) for nodes " + std::to_string(x) + ", " + std::to_string(y);
    }
    add("A odd symmetry", odd_bad.empty(), odd_bad);
    add("A sign condition", sign_bad.empty(), sign_bad);
    add("A pair symmetry", sym_bad.empty(), sym_bad);

    {
        std::string bad;
        for (int k = 0; k < 64; ++k) {
            const std::size_t x = rng.index(g.size());
            const double t = rng.uniform(0.0, 1.0);
            const double v = f(t, x, 0.0);
            if (!(v >= 0.0)) {
                bad = "f(t,x,0) = " + format_double(v);
                break;
            }
        }
        add("f(.,.,0) >= 0", bad.empty(), bad);
    }
    {
        std::string bad;
        const double r = std::max(f.working_range(), s_range);
        const double cf = f.growth_constant();
        const int m = 2000;
        for (int k = -m; k <= m && bad.empty(); ++k) {
            const double s = (f.family() == ReactionFamily::logistic || f.family() == ReactionFamily::custom_table)
                                 ? f.working_range() * k / m
                                 : r * k / m;
            if (std::abs(f(s)) > cf * (1.0 + std::abs(s)) * (1.0 + 1e-12) + 1e-300)
                bad = "|f(" + format_double(s) + ")| exceeds C_f (1 + |s|) with C_f = " + format_double(cf);
        }
        add("f growth bound", bad.empty(), bad);
    }
    {
        std::string bad;
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (!std::isfinite(u0[i])) {
                bad = "node " + std::to_string(i) + " is not finite";
                break;
            }
        add("u0 finite", bad.empty(), bad);
    }
    {
        std::string bad;
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (u0[i] < 0.0) {
                bad = "node " + std::to_string(i) + " has value " + format_double(u0[i]);
                break;
            }
        add("u0 non-negativity", bad.empty(), bad);
    }
    return rep;
}

}  // namespace nldiff
