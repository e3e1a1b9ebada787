#pragma once

#include <algorithm>
#include <cmath>

#include "pedintent/common.hpp"

namespace pedintent {

// Axis-aligned pixel rectangle, corner encoded, frame origin top-left.
// Corner form keeps the overlap arithmetic branch-free; (left, top, width,
// height) detection rows are converted at ingestion. Degenerate boxes are
// rejected here because a zero area breaks the aspect ratio and the filter's
// observation space downstream.
struct BBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;

  BBox(double x0, double y0, double x1, double y1)
      : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (!(std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
          std::isfinite(y_max))) {
      throw ValidationError("BBox: coordinates must be finite");
    }
    if (!(x_min < x_max && y_min < y_max)) {
      throw ValidationError("BBox: requires x_min < x_max and y_min < y_max");
    }
  }

  static BBox from_ltwh(double left, double top, double width, double height) {
    return BBox(left, top, left + width, top + height);
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
};

// Filter observation space: box center (u, v), scale area s, aspect ratio r
// (width over height).
struct Observation {
  double u;
  double v;
  double s;
  double r;

  Observation(double u_, double v_, double s_, double r_) : u(u_), v(v_), s(s_), r(r_) {
    if (!(std::isfinite(u) && std::isfinite(v) && std::isfinite(s) && std::isfinite(r))) {
      throw ValidationError("Observation: components must be finite");
    }
    if (!(s > 0.0) || !(r > 0.0)) {
      throw ValidationError("Observation: requires s > 0 and r > 0");
    }
  }
};

// Intersection-over-union of two boxes; 0 when disjoint, symmetric.
inline double iou(const BBox& a, const BBox& b) {
  double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

inline Observation bbox_to_observation(const BBox& b) {
  return Observation(b.center_x(), b.center_y(), b.area(), b.width() / b.height());
}

inline BBox observation_to_bbox(const Observation& o) {
  double w = std::sqrt(o.s * o.r);
  double h = o.s / w;
  return BBox(o.u - 0.5 * w, o.v - 0.5 * h, o.u + 0.5 * w, o.v + 0.5 * h);
}

}  // namespace pedintent
