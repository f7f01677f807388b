#pragma once
// Lattice primitives shared by every module: multi-indices on Z^d with the
// lexicographic group order, dense observation windows, and sparse cluster
// shapes stored as canonical representatives of shift-equivalence classes.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rvfield/error.hpp"

namespace rvf {

using Coord = std::int64_t;

class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<Coord> coords) : coords_(std::move(coords)) {}
    MultiIndex(std::initializer_list<Coord> coords) : coords_(coords) {}

    static MultiIndex zero(std::size_t dim) { return MultiIndex(std::vector<Coord>(dim, 0)); }

    std::size_t dim() const noexcept { return coords_.size(); }
    Coord operator[](std::size_t axis) const { return coords_[axis]; }
    Coord& operator[](std::size_t axis) { return coords_[axis]; }
    const std::vector<Coord>& coords() const noexcept { return coords_; }

    bool is_zero() const noexcept;
    // Chebyshev norm max_k |i_k|.
    Coord sup_norm() const noexcept;

    MultiIndex operator+(const MultiIndex& other) const;
    MultiIndex operator-(const MultiIndex& other) const;
    MultiIndex operator-() const;

    // Equality and ordering throw DimensionMismatch across dimensions.
    bool operator==(const MultiIndex& other) const;
    std::strong_ordering operator<=>(const MultiIndex& other) const;

    std::string to_string() const;

private:
    std::vector<Coord> coords_;
};

// Lexicographic order on Z^d (a group order: invariant under translation).
std::strong_ordering lex_compare(const MultiIndex& a, const MultiIndex& b);

// Finite array on Z^d; keys ordered lexicographically.
using SparseArray = std::map<MultiIndex, double>;

// Uniform norm max |x_i| of a sparse array (0 for the empty array).
double sup_norm(const SparseArray& values) noexcept;

// Shifts every key by `shift`.
SparseArray translate(const SparseArray& values, const MultiIndex& shift);

// All indices of the cube [-radius, radius]^d in lexicographic order.
std::vector<MultiIndex> cube(std::size_t dim, Coord radius);

// Dense window of field values on {1..n_1} x ... x {1..n_d}; the last axis
// varies fastest in the flat storage.
class LatticeWindow {
public:
    LatticeWindow(std::vector<Coord> extents, std::vector<double> values);

    std::size_t dim() const noexcept { return extents_.size(); }
    const std::vector<Coord>& extents() const noexcept { return extents_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    bool contains(const MultiIndex& index) const;
    std::size_t flat(const MultiIndex& index) const;
    MultiIndex index_of(std::size_t flat) const;

    double at(const MultiIndex& index) const { return values_[flat(index)]; }
    double operator[](std::size_t flat) const { return values_[flat]; }

private:
    std::vector<Coord> extents_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

// Empirical q-quantile of |X| over the window (order statistic at floor(q*(N-1))).
double abs_quantile(const LatticeWindow& window, double q);

// Canonical representative of a cluster of extremes: support translated so
// that the first maximum (lexicographically least index of max |value|) sits
// at the origin. Zero entries are not stored.
class ClusterShape {
public:
    std::size_t dim() const noexcept { return dim_; }
    const SparseArray& support() const noexcept { return support_; }
    double norm() const noexcept { return norm_; }
    MultiIndex anchor() const { return MultiIndex::zero(dim_); }

    double value(const MultiIndex& index) const;
    // Number of entries with |value| > level.
    std::size_t count_above(double level) const;
    ClusterShape scaled(double factor) const;

    bool operator==(const ClusterShape& other) const = default;

    friend ClusterShape canonicalize(const SparseArray& values);

private:
    std::size_t dim_ = 0;
    SparseArray support_;
    double norm_ = 0.0;
};

// Throws DegenerateCluster when every value is zero.
ClusterShape canonicalize(const SparseArray& values);
// 1-d convenience: values[k] placed at index offset + k.
ClusterShape canonicalize(std::span<const double> values, Coord offset = 0);

// min over translations |k| <= radius of sup_i |a_i - b_{i+k}|.
double shift_distance(const ClusterShape& a, const ClusterShape& b, Coord radius);

// Text form: header "d=<d> anchor=origin" then "i1 ... id value" per line.
void write_cluster(std::ostream& out, const ClusterShape& shape);
ClusterShape read_cluster(std::istream& in);

}  // namespace rvf
