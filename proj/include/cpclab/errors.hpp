#pragma once

#include <stdexcept>
#include <string>

namespace cpclab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Cell size does not tile the grid, subsets overlap, etc.
struct GeometryError : Error {
    using Error::Error;
};

// Pixel index outside the grid.
struct IndexError : Error {
    using Error::Error;
};

// Vector lengths disagree.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid argument values (unknown condition id, empty mixture, ...).
struct DomainError : Error {
    using Error::Error;
};

// Incompatible module inputs (rule subsets vs model subsets).
struct ConfigError : Error {
    using Error::Error;
};

// Lattice too coarse for the requested convolution accuracy.
struct ResolutionError : Error {
    using Error::Error;
};

// Discrete joint beyond enumerable limits.
struct SizeError : Error {
    using Error::Error;
};

// NaN appeared in a sampling trajectory.
struct DivergenceError : Error {
    int step;
    DivergenceError(const std::string& what, int step_index)
        : Error(what), step(step_index) {}
};

}  // namespace cpclab
