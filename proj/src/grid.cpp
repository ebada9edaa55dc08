#include "cpclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cpclab {

GridShape make_shape(int height, int width) {
    if (height < 1 || width < 1)
        throw GeometryError("grid dimensions must be >= 1");
    return GridShape{height, width};
}

Image::Image(GridShape s, Vec v) : shape(s), values(std::move(v)) {
    if (static_cast<int>(values.size()) != shape.pixels())
        throw ShapeError("image payload does not match shape");
}

void check_finite(const Image& x) {
    for (double v : x.values)
        if (!std::isfinite(v)) throw DomainError("image contains NaN/inf");
}

IndexSet::IndexSet(std::vector<int> indices) : indices_(std::move(indices)) {
    for (std::size_t i = 0; i + 1 < indices_.size(); ++i)
        if (indices_[i] >= indices_[i + 1])
            throw IndexError("index set must be strictly increasing");
    if (!indices_.empty() && indices_.front() < 0)
        throw IndexError("negative pixel index");
}

bool IndexSet::contains(int index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
}

int IndexSet::position_of(int index) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
    if (it == indices_.end() || *it != index) return -1;
    return static_cast<int>(it - indices_.begin());
}

IndexSet union_of(const IndexSet& a, const IndexSet& b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                   std::back_inserter(out));
    return IndexSet(out);
}

ConditionSet::ConditionSet(std::initializer_list<int> ids)
    : ConditionSet(std::vector<int>(ids)) {}

ConditionSet::ConditionSet(std::vector<int> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    if (!ids_.empty() && ids_.front() < 0)
        throw DomainError("negative condition id");
}

bool ConditionSet::contains(int id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
}

ConditionSet ConditionSet::with(int id) const {
    auto ids = ids_;
    ids.push_back(id);
    return ConditionSet(std::move(ids));
}

ConditionSet ConditionSet::without(int id) const {
    std::vector<int> ids;
    ids.reserve(ids_.size());
    for (int v : ids_)
        if (v != id) ids.push_back(v);
    return ConditionSet(std::move(ids));
}

ConditionSet ConditionSet::intersect(const ConditionSet& other) const {
    std::vector<int> out;
    std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(),
                          other.ids_.end(), std::back_inserter(out));
    return ConditionSet(std::move(out));
}

bool ConditionSet::subset_of(const ConditionSet& other) const {
    return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(),
                         ids_.end());
}

int ConditionSet::overlap(const ConditionSet& other) const {
    return intersect(other).size();
}

ConditionSet SubsetMap::all_conditions() const {
    std::vector<int> ids(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) ids[j] = static_cast<int>(j);
    return ConditionSet(std::move(ids));
}

int SubsetMap::cell_of_pixel(int pixel) const {
    const int row = shape.row(pixel), col = shape.col(pixel);
    const int cr = row / cell, cc = col / cell;
    if (cr >= cells_y || cc >= cells_x) return -1;
    return cell_index(cr, cc);
}

SubsetMap make_subset_map(GridShape shape, int cell) {
    if (cell < 1) throw GeometryError("cell size must be >= 1");
    if (shape.height % cell != 0 || shape.width % cell != 0)
        throw GeometryError("cell size " + std::to_string(cell) +
                            " does not divide grid " +
                            std::to_string(shape.height) + "x" +
                            std::to_string(shape.width));
    SubsetMap map;
    map.shape = shape;
    map.cell = cell;
    map.cells_y = shape.height / cell;
    map.cells_x = shape.width / cell;
    map.blocks.reserve(static_cast<std::size_t>(map.cells_x) * map.cells_y);
    for (int cr = 0; cr < map.cells_y; ++cr) {
        for (int cc = 0; cc < map.cells_x; ++cc) {
            std::vector<int> idx;
            idx.reserve(static_cast<std::size_t>(cell) * cell);
            for (int r = cr * cell; r < (cr + 1) * cell; ++r)
                for (int c = cc * cell; c < (cc + 1) * cell; ++c)
                    idx.push_back(shape.index(r, c));
            std::sort(idx.begin(), idx.end());
            map.blocks.emplace_back(std::move(idx));
        }
    }
    map.background = IndexSet{};
    check_partition(map);
    return map;
}

void check_partition(const SubsetMap& map) {
    std::vector<int> seen(map.shape.pixels(), 0);
    auto mark = [&](const IndexSet& s) {
        for (int i : s) {
            if (i >= map.shape.pixels())
                throw GeometryError("subset index outside grid");
            if (seen[i]++)
                throw GeometryError("subsets overlap at pixel " +
                                    std::to_string(i));
        }
    };
    for (const auto& b : map.blocks) mark(b);
    mark(map.background);
    for (int i = 0; i < map.shape.pixels(); ++i)
        if (!seen[i])
            throw GeometryError("pixel " + std::to_string(i) +
                                " not covered by any subset");
}

Vec restrict_to(const Vec& x, const IndexSet& s) {
    Vec out;
    out.reserve(s.size());
    for (int i : s) {
        if (i >= static_cast<int>(x.size()))
            throw IndexError("restrict: index " + std::to_string(i) +
                             " out of range");
        out.push_back(x[i]);
    }
    return out;
}

Vec restrict_to(const Image& x, const IndexSet& s) {
    return restrict_to(x.values, s);
}

Image scatter(const Vec& v, const IndexSet& s, const Image& base) {
    if (static_cast<int>(v.size()) != s.size())
        throw ShapeError("scatter: value/index length mismatch");
    Image out = base;
    for (int pos = 0; pos < s.size(); ++pos) {
        const int i = s[pos];
        if (i >= base.shape.pixels())
            throw IndexError("scatter: index out of range");
        out.values[i] = v[pos];
    }
    return out;
}

IndexSet window_pixels(const SubsetMap& map, int cell_id, int radius) {
    if (cell_id < 0 || cell_id >= map.n_conditions())
        throw DomainError("window_pixels: unknown cell");
    if (radius < 0) throw DomainError("window radius must be >= 0");
    const int cr = map.cell_row(cell_id), cc = map.cell_col(cell_id);
    const int r0 = std::max(0, cr - radius), r1 = std::min(map.cells_y - 1, cr + radius);
    const int c0 = std::max(0, cc - radius), c1 = std::min(map.cells_x - 1, cc + radius);
    std::vector<int> idx;
    for (int r = r0 * map.cell; r < (r1 + 1) * map.cell; ++r)
        for (int c = c0 * map.cell; c < (c1 + 1) * map.cell; ++c)
            idx.push_back(map.shape.index(r, c));
    std::sort(idx.begin(), idx.end());
    return IndexSet(std::move(idx));
}

ConditionSet window_cells(const SubsetMap& map, int cell_id, int radius) {
    if (cell_id < 0 || cell_id >= map.n_conditions())
        throw DomainError("window_cells: unknown cell");
    const int cr = map.cell_row(cell_id), cc = map.cell_col(cell_id);
    std::vector<int> ids;
    for (int r = std::max(0, cr - radius); r <= std::min(map.cells_y - 1, cr + radius); ++r)
        for (int c = std::max(0, cc - radius); c <= std::min(map.cells_x - 1, cc + radius); ++c)
            ids.push_back(map.cell_index(r, c));
    return ConditionSet(std::move(ids));
}

}  // namespace cpclab
