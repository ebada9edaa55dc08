#pragma once

#include <cstdint>
#include <vector>

#include "cpclab/errors.hpp"

namespace cpclab {

using Vec = std::vector<double>;

// Single-channel raster geometry. Pixel index space is [0, height*width),
// row-major: index = row * width + col.
struct GridShape {
    int height = 0;
    int width = 0;
    static constexpr int channels = 1;

    int pixels() const { return height * width; }
    int index(int row, int col) const { return row * width + col; }
    int row(int index) const { return index / width; }
    int col(int index) const { return index % width; }
    bool operator==(const GridShape&) const = default;
};

GridShape make_shape(int height, int width);

struct Image {
    GridShape shape;
    Vec values;

    Image() = default;
    Image(GridShape s, Vec v);
    explicit Image(GridShape s) : shape(s), values(s.pixels(), 0.0) {}

    double& at(int row, int col) { return values[shape.index(row, col)]; }
    double at(int row, int col) const { return values[shape.index(row, col)]; }
};

// Throws if any value is NaN or infinite.
void check_finite(const Image& x);

// Strictly increasing pixel indices.
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(std::vector<int> indices);

    const std::vector<int>& indices() const { return indices_; }
    int size() const { return static_cast<int>(indices_.size()); }
    bool empty() const { return indices_.empty(); }
    bool contains(int index) const;
    // Position of `index` within the set, or -1.
    int position_of(int index) const;
    int operator[](int pos) const { return indices_[pos]; }

    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }

private:
    std::vector<int> indices_;
};

IndexSet union_of(const IndexSet& a, const IndexSet& b);

// Sorted set of condition ids.
class ConditionSet {
public:
    ConditionSet() = default;
    ConditionSet(std::initializer_list<int> ids);
    explicit ConditionSet(std::vector<int> ids);

    const std::vector<int>& ids() const { return ids_; }
    int size() const { return static_cast<int>(ids_.size()); }
    bool empty() const { return ids_.empty(); }
    bool contains(int id) const;
    ConditionSet with(int id) const;
    ConditionSet without(int id) const;
    ConditionSet intersect(const ConditionSet& other) const;
    bool subset_of(const ConditionSet& other) const;
    int overlap(const ConditionSet& other) const;

    auto begin() const { return ids_.begin(); }
    auto end() const { return ids_.end(); }
    bool operator==(const ConditionSet&) const = default;
    bool operator<(const ConditionSet& other) const { return ids_ < other.ids_; }

private:
    std::vector<int> ids_;
};

// Partition of the pixel grid into per-condition blocks plus a background.
// Built from square cells; condition ids are row-major cell indices.
struct SubsetMap {
    GridShape shape;
    int cell = 0;       // cell side in pixels
    int cells_x = 0;    // cells per row
    int cells_y = 0;    // cells per column
    std::vector<IndexSet> blocks;  // M_j, one per condition id
    IndexSet background;           // M_b

    int n_conditions() const { return static_cast<int>(blocks.size()); }
    ConditionSet all_conditions() const;
    // Cell id containing a pixel, or -1 for background pixels.
    int cell_of_pixel(int pixel) const;
    int cell_index(int cell_row, int cell_col) const {
        return cell_row * cells_x + cell_col;
    }
    int cell_row(int id) const { return id / cells_x; }
    int cell_col(int id) const { return id % cells_x; }
};

// Partition the grid into cell x cell blocks. `cell` must divide both
// dimensions; the background comes out empty.
SubsetMap make_subset_map(GridShape shape, int cell);

// Verifies disjointness and full coverage; throws GeometryError otherwise.
void check_partition(const SubsetMap& map);

// Values of x at the indices of s, in order.
Vec restrict_to(const Image& x, const IndexSet& s);
Vec restrict_to(const Vec& x, const IndexSet& s);

// Copy of base with positions s overwritten by v.
Image scatter(const Vec& v, const IndexSet& s, const Image& base);

// Pixels of the (2r+1) x (2r+1) cell window centered at cell `cell_id`,
// clamped at the grid borders. Row-major pixel order.
IndexSet window_pixels(const SubsetMap& map, int cell_id, int radius);

// Cell ids inside the same window.
ConditionSet window_cells(const SubsetMap& map, int cell_id, int radius);

}  // namespace cpclab
