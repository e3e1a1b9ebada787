#pragma once

#include <deque>
#include <optional>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"
#include "pedintent/image.hpp"
#include "pedintent/nn/tensor.hpp"

namespace pedintent {

// Per-track sliding window of the 16 most recent crops. Crops arrive at the
// fixed 100x100 size; conversion to the model tensor happens at batch time,
// resampling only when the model input differs.
class TrackWindow {
public:
  static constexpr int kDepth = 16;
  static constexpr int kCropSize = 100;

  explicit TrackWindow(int track_id) : track_id_(track_id) {}

  int track_id() const { return track_id_; }
  int newest_frame() const { return newest_frame_; }
  const BBox& last_box() const {
    if (!last_box_) throw ValidationError("TrackWindow: no crops pushed yet");
    return *last_box_;
  }

  void push(const Image& crop, int frame_index, const BBox& source_box) {
    if (crop.height != kCropSize || crop.width != kCropSize) {
      throw ValidationError("TrackWindow: crop must be 100x100");
    }
    crops_.push_back(crop);
    if (crops_.size() > static_cast<std::size_t>(kDepth)) crops_.pop_front();
    newest_frame_ = frame_index;
    last_box_ = source_box;
  }

  bool ready() const { return crops_.size() == static_cast<std::size_t>(kDepth); }
  std::size_t size() const { return crops_.size(); }

  // (1, 3, 16, out_h, out_w): channel-major, temporal axis oldest-first,
  // pixels scaled to [0,1] then standardized.
  template <typename T>
  nn::Tensor5<T> to_tensor(int out_h, int out_w, double pixel_mean, double pixel_std) const {
    if (!ready()) throw ValidationError("TrackWindow: not ready");
    nn::Tensor5<T> out(1, 3, kDepth, out_h, out_w);
    for (int d = 0; d < kDepth; ++d) {
      const Image* crop = &crops_[d];
      Image resized;
      if (out_h != kCropSize || out_w != kCropSize) {
        resized = resize(*crop, out_h, out_w);
        crop = &resized;
      }
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < out_h; ++y) {
          for (int x = 0; x < out_w; ++x) {
            double v = crop->at(y, x, c) / 255.0;
            out.at(0, c, d, y, x) = static_cast<T>((v - pixel_mean) / pixel_std);
          }
        }
      }
    }
    return out;
  }

private:
  int track_id_;
  int newest_frame_ = -1;
  std::optional<BBox> last_box_;
  std::deque<Image> crops_;
};

}  // namespace pedintent
