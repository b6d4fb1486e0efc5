#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nldiff/errors.hpp"

namespace nldiff {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Uniform cell-centred grid over a box in one or two dimensions.
///
/// Nodes are ordered row-major: the last axis varies fastest, so in 2D the
/// flat index of node (i0, i1) is i0 * counts[1] + i1. Every node carries the
/// same quadrature weight node_volume(), which makes sums over node pairs
/// exactly symmetric.
class Grid {
public:
    Grid() = default;

    int dim() const { return dim_; }
    const std::vector<Interval>& extents() const { return extents_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    const std::vector<double>& spacing() const { return spacing_; }
    double node_volume() const { return node_volume_; }
    double total_measure() const { return total_measure_; }
    std::size_t size() const { return size_; }

    // Count along an axis, 1 for axes beyond dim() so 1D code can treat the
    // grid as n x 1.
    std::size_t count(int axis) const { return axis < dim_ ? counts_[axis] : 1; }

    std::array<std::size_t, 2> multi_index(std::size_t flat) const {
        if (dim_ == 1) return {flat, 0};
        return {flat / counts_[1], flat % counts_[1]};
    }

    std::size_t flat_index(std::size_t i0, std::size_t i1 = 0) const {
        return dim_ == 1 ? i0 : i0 * counts_[1] + i1;
    }

    double axis_coordinate(int axis, std::size_t i) const {
        return extents_[axis].lo + (static_cast<double>(i) + 0.5) * spacing_[axis];
    }

    double coordinate(std::size_t flat, int axis) const {
        return axis_coordinate(axis, multi_index(flat)[axis]);
    }

    // Index of the node whose cell contains the point; points outside the box
    // are clamped to the boundary cells.
    std::size_t nearest_index(const std::vector<double>& point) const {
        std::array<std::size_t, 2> idx{0, 0};
        for (int a = 0; a < dim_; ++a) {
            double r = std::floor((point[a] - extents_[a].lo) / spacing_[a]);
            if (r < 0.0) r = 0.0;
            const double top = static_cast<double>(counts_[a] - 1);
            if (r > top) r = top;
            idx[a] = static_cast<std::size_t>(r);
        }
        return flat_index(idx[0], idx[1]);
    }

    bool operator==(const Grid& other) const {
        return dim_ == other.dim_ && extents_ == other.extents_ && counts_ == other.counts_;
    }

    friend Grid build_grid(int dim, std::vector<Interval> extents, std::vector<std::size_t> counts);

private:
    int dim_ = 0;
    std::vector<Interval> extents_;
    std::vector<std::size_t> counts_;
    std::vector<double> spacing_;
    double node_volume_ = 0.0;
    double total_measure_ = 0.0;
    std::size_t size_ = 0;
};

inline Grid build_grid(int dim, std::vector<Interval> extents, std::vector<std::size_t> counts) {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2, got " + std::to_string(dim));
    if (extents.size() != static_cast<std::size_t>(dim) || counts.size() != static_cast<std::size_t>(dim))
        throw ConfigError("grid extents and counts must each have " + std::to_string(dim) + " entries");
    Grid g;
    g.dim_ = dim;
    g.size_ = 1;
    g.node_volume_ = 1.0;
    g.total_measure_ = 1.0;
    for (int a = 0; a < dim; ++a) {
        if (counts[a] < 2) throw ConfigError("grid count on axis " + std::to_string(a) + " must be >= 2");
        if (!(extents[a].hi > extents[a].lo) || !std::isfinite(extents[a].length()))
            throw ConfigError("grid extent on axis " + std::to_string(a) + " is empty");
        const double h = extents[a].length() / static_cast<double>(counts[a]);
        g.spacing_.push_back(h);
        g.node_volume_ *= h;
        g.total_measure_ *= extents[a].length();
        g.size_ *= counts[a];
    }
    g.extents_ = std::move(extents);
    g.counts_ = std::move(counts);
    return g;
}

/// One real value per grid node.
class Field {
public:
    Field() = default;
    Field(Grid grid, double value) : grid_(std::move(grid)), values_(grid_.size(), value) {}
    Field(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw ContractViolation("field has " + std::to_string(values_.size()) + " values for a grid of " +
                                    std::to_string(grid_.size()) + " nodes");
    }

    template <typename Fn>
    static Field from_function(const Grid& grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(i);
        return Field(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    double min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : values_) m = v < m ? v : m;
        return m;
    }
    double max() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double v : values_) m = v > m ? v : m;
        return m;
    }
    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Field&) const = default;

private:
    Grid grid_;
    std::vector<double> values_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b)) throw ContractViolation(std::string(where) + ": fields live on different grids");
}

inline double integrate(const Grid& grid, const Field& field) {
    require_same_grid(grid, field.grid(), "integrate");
    double sum = 0.0;
    for (double v : field.values()) sum += v;
    return grid.node_volume() * sum;
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// p = kInfinity gives the max norm.
inline double lp_norm(const Grid& grid, const Field& field, double p) {
    require_same_grid(grid, field.grid(), "lp_norm");
    if (!(p >= 1.0)) throw ConfigError("lp_norm requires p >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : field.values()) m = std::max(m, std::abs(v));
        return m;
    }
    double sum = 0.0;
    for (double v : field.values()) sum += std::pow(std::abs(v), p);
    return std::pow(grid.node_volume() * sum, 1.0 / p);
}

inline Field operator-(const Field& a, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "field difference");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
    return Field(a.grid(), std::move(v));
}

// Field CSV layout:
//   # nldiff-field v1
//   # dim <d>
//   # extents <lo0> <hi0> [<lo1> <hi1>]
//   # counts <n0> [<n1>]
//   one value per line, row-major, 17 significant digits
inline void write_field_csv(std::ostream& os, const Field& field) {
    const Grid& g = field.grid();
    os << "# nldiff-field v1\n";
    os << "# dim " << g.dim() << "\n";
    os << "# extents";
    for (const auto& e : g.extents()) os << ' ' << format_double(e.lo) << ' ' << format_double(e.hi);
    os << "\n# counts";
    for (auto c : g.counts()) os << ' ' << c;
    os << "\n";
    for (double v : field.values()) os << format_double(v) << "\n";
}

inline Field read_field_csv(std::istream& is) {
    std::string line;
    auto header = [&](const std::string& key) {
        if (!std::getline(is, line)) throw FormatError("field csv: missing '" + key + "' header");
        const std::string prefix = "# " + key;
        if (line.rfind(prefix, 0) != 0) throw FormatError("field csv: expected '" + prefix + "', got '" + line + "'");
        return std::istringstream(line.substr(prefix.size()));
    };
    if (!std::getline(is, line) || line != "# nldiff-field v1") throw FormatError("field csv: bad magic line");
    int dim = 0;
    header("dim") >> dim;
    if (dim != 1 && dim != 2) throw FormatError("field csv: bad dim");
    std::vector<Interval> extents(dim);
    {
        auto ss = header("extents");
        for (auto& e : extents)
            if (!(ss >> e.lo >> e.hi)) throw FormatError("field csv: bad extents");
    }
    std::vector<std::size_t> counts(dim);
    {
        auto ss = header("counts");
        for (auto& c : counts)
            if (!(ss >> c)) throw FormatError("field csv: bad counts");
    }
    Grid grid;
    try {
        grid = build_grid(dim, extents, counts);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("field csv: ") + e.what());
    }
    std::vector<double> values;
    values.reserve(grid.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str()) throw FormatError("field csv: bad value '" + line + "'");
        values.push_back(v);
    }
    if (values.size() != grid.size())
        throw FormatError("field csv: expected " + std::to_string(grid.size()) + " values, got " +
                          std::to_string(values.size()));
    return Field(grid, std::move(values));
}

}  // namespace nldiff
