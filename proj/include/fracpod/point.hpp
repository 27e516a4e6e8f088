#pragma once

namespace fracpod {

/// Coordinate in a 1D or 2D domain. 1D code ignores `y`.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

}  // namespace fracpod
