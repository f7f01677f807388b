#include "rvfield/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rvfield/format.hpp"

namespace rvf {

namespace {

void require_same_dim(const MultiIndex& a, const MultiIndex& b) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("multi-index dimensions differ: " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
    }
}

}  // namespace

bool MultiIndex::is_zero() const noexcept {
    return std::all_of(coords_.begin(), coords_.end(), [](Coord c) { return c == 0; });
}

Coord MultiIndex::sup_norm() const noexcept {
    Coord m = 0;
    for (Coord c : coords_) m = std::max(m, c < 0 ? -c : c);
    return m;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
    require_same_dim(*this, other);
    MultiIndex out = *this;
    for (std::size_t k = 0; k < dim(); ++k) out.coords_[k] += other.coords_[k];
    return out;
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
    require_same_dim(*this, other);
    MultiIndex out = *this;
    for (std::size_t k = 0; k < dim(); ++k) out.coords_[k] -= other.coords_[k];
    return out;
}

MultiIndex MultiIndex::operator-() const {
    MultiIndex out = *this;
    for (auto& c : out.coords_) c = -c;
    return out;
}

bool MultiIndex::operator==(const MultiIndex& other) const {
    require_same_dim(*this, other);
    return coords_ == other.coords_;
}

std::strong_ordering MultiIndex::operator<=>(const MultiIndex& other) const {
    require_same_dim(*this, other);
    return coords_ <=> other.coords_;
}

std::string MultiIndex::to_string() const {
    std::string s = "(";
    for (std::size_t k = 0; k < coords_.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(coords_[k]);
    }
    return s + ")";
}

std::strong_ordering lex_compare(const MultiIndex& a, const MultiIndex& b) { return a <=> b; }

double sup_norm(const SparseArray& values) noexcept {
    double m = 0.0;
    for (const auto& [_, v] : values) m = std::max(m, std::abs(v));
    return m;
}

SparseArray translate(const SparseArray& values, const MultiIndex& shift) {
    SparseArray out;
    for (const auto& [idx, v] : values) out.emplace_hint(out.end(), idx + shift, v);
    return out;
}

std::vector<MultiIndex> cube(std::size_t dim, Coord radius) {
    const auto side = static_cast<std::size_t>(2 * radius + 1);
    std::size_t total = 1;
    for (std::size_t k = 0; k < dim; ++k) total *= side;
    std::vector<MultiIndex> out;
    out.reserve(total);
    for (std::size_t f = 0; f < total; ++f) {
        std::vector<Coord> c(dim);
        std::size_t rest = f;
        for (std::size_t k = dim; k-- > 0;) {
            c[k] = static_cast<Coord>(rest % side) - radius;
            rest /= side;
        }
        out.emplace_back(std::move(c));
    }
    return out;
}

LatticeWindow::LatticeWindow(std::vector<Coord> extents, std::vector<double> values)
    : extents_(std::move(extents)), values_(std::move(values)) {
    if (extents_.empty()) throw DimensionMismatch("window dimension must be at least 1");
    std::size_t total = 1;
    for (Coord n : extents_) {
        if (n < 1) throw Error("window extent must be >= 1 on every axis");
        total *= static_cast<std::size_t>(n);
    }
    if (total != values_.size()) {
        throw DimensionMismatch("window holds " + std::to_string(values_.size()) +
                                " values, extents require " + std::to_string(total));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidLevel("window values must be finite");
    }
    strides_.assign(extents_.size(), 1);
    for (std::size_t k = extents_.size() - 1; k > 0; --k) {
        strides_[k - 1] = strides_[k] * static_cast<std::size_t>(extents_[k]);
    }
}

bool LatticeWindow::contains(const MultiIndex& index) const {
    if (index.dim() != dim()) throw DimensionMismatch("index dimension does not match window");
    for (std::size_t k = 0; k < dim(); ++k) {
        if (index[k] < 1 || index[k] > extents_[k]) return false;
    }
    return true;
}

std::size_t LatticeWindow::flat(const MultiIndex& index) const {
    if (index.dim() != dim()) throw DimensionMismatch("index dimension does not match window");
    std::size_t f = 0;
    for (std::size_t k = 0; k < dim(); ++k) f += static_cast<std::size_t>(index[k] - 1) * strides_[k];
    return f;
}

MultiIndex LatticeWindow::index_of(std::size_t flat) const {
    std::vector<Coord> c(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
        c[k] = static_cast<Coord>(flat / strides_[k]) + 1;
        flat %= strides_[k];
    }
    return MultiIndex(std::move(c));
}

double abs_quantile(const LatticeWindow& window, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidLevel("quantile must lie in [0,1]");
    std::vector<double> a(window.values().begin(), window.values().end());
    for (auto& v : a) v = std::abs(v);
    auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(a.size() - 1)));
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(pos), a.end());
    return a[pos];
}

double ClusterShape::value(const MultiIndex& index) const {
    auto it = support_.find(index);
    return it == support_.end() ? 0.0 : it->second;
}

std::size_t ClusterShape::count_above(double level) const {
    return static_cast<std::size_t>(std::count_if(support_.begin(), support_.end(),
                                                  [level](const auto& e) { return std::abs(e.second) > level; }));
}

ClusterShape ClusterShape::scaled(double factor) const {
    ClusterShape out = *this;
    for (auto& [_, v] : out.support_) v *= factor;
    out.norm_ = norm_ * std::abs(factor);
    return out;
}

ClusterShape canonicalize(const SparseArray& values) {
    const MultiIndex* anchor = nullptr;
    double norm = 0.0;
    // Map iteration is lexicographic, so the first strict improvement wins ties.
    for (const auto& [idx, v] : values) {
        if (std::abs(v) > norm) {
            norm = std::abs(v);
            anchor = &idx;
        }
    }
    if (anchor == nullptr) throw DegenerateCluster("cluster has no nonzero entry");
    ClusterShape shape;
    shape.dim_ = anchor->dim();
    shape.norm_ = norm;
    const MultiIndex shift = -*anchor;
    for (const auto& [idx, v] : values) {
        if (v != 0.0) shape.support_.emplace_hint(shape.support_.end(), idx + shift, v);
    }
    return shape;
}

ClusterShape canonicalize(std::span<const double> values, Coord offset) {
    SparseArray arr;
    for (std::size_t k = 0; k < values.size(); ++k) {
        arr.emplace_hint(arr.end(), MultiIndex{offset + static_cast<Coord>(k)}, values[k]);
    }
    return canonicalize(arr);
}

double shift_distance(const ClusterShape& a, const ClusterShape& b, Coord radius) {
    if (a.dim() != b.dim()) throw DimensionMismatch("cluster shapes of different dimension");
    double best = std::numeric_limits<double>::infinity();
    for (const MultiIndex& k : cube(a.dim(), radius)) {
        // sup over the union of supports of |a_i - b_{i+k}|
        double d = 0.0;
        for (const auto& [idx, v] : a.support()) d = std::max(d, std::abs(v - b.value(idx + k)));
        for (const auto& [idx, v] : b.support()) d = std::max(d, std::abs(a.value(idx - k) - v));
        best = std::min(best, d);
    }
    return best;
}

void write_cluster(std::ostream& out, const ClusterShape& shape) {
    out << "d=" << shape.dim() << " anchor=origin\n";
    for (const auto& [idx, v] : shape.support()) {
        for (std::size_t k = 0; k < idx.dim(); ++k) out << idx[k] << ' ';
        out << format_double(v) << '\n';
    }
}

ClusterShape read_cluster(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw IoError("cluster stream is empty");
    std::size_t dim = 0;
    if (std::sscanf(header.c_str(), "d=%zu anchor=origin", &dim) != 1 || dim == 0) {
        throw IoError("malformed cluster header: " + header);
    }
    SparseArray values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        std::istringstream ls(line);
        std::vector<Coord> c(dim);
        double v = 0.0;
        for (auto& x : c) ls >> x;
        ls >> v;
        if (!ls) throw IoError("malformed cluster line: " + line);
        values.emplace(MultiIndex(std::move(c)), v);
    }
    return canonicalize(values);
}

}  // namespace rvf
