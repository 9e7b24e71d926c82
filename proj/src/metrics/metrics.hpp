// Copyright 2026 The VIDNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Segmentation metrics and the frame-level detection score.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "media/media.hpp"
#include "model/vidnet.hpp"
#include "nn/tensor.hpp"

namespace vidnet::metrics {

// Raised when a metric has no defined value, e.g. AUC with one class.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kIouEps = 1e-6;
inline constexpr double kDefaultThreshold = 0.5;

// 1 - sum(P Y) / (sum(P + Y - P Y) + eps) over every element of P and Y.
double iou_loss(const nn::Tensor& p, const nn::Tensor& y, double eps = kIouEps);

// p is [1, 1, H, W]; pixel >= threshold maps to 1.
media::MaskFrame binarize(const nn::Tensor& p, double threshold = kDefaultThreshold);

struct IouF1 {
  double iou = 0.0;
  double f1 = 0.0;
};
// Both empty scores (1, 1).
IouF1 frame_iou_f1(const media::MaskFrame& pred, const media::MaskFrame& gt);

// Area under the ROC curve by the rank statistic; tied scores count 1/2.
double frame_auc(std::span<const double> scores, std::span<const int> labels);

struct VideoScore {
  std::string id;
  int frames = 0;
  double iou = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double mean_iou = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
  int frames = 0;
  double threshold = kDefaultThreshold;
  std::vector<VideoScore> per_video;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

struct EvalOptions {
  double threshold = kDefaultThreshold;
};

// IoU / F1 per frame of `videos`, averaged over all frames. Frame AUC uses the
// mean probability of each frame of `videos` and `negatives`, labelled
// positive when the ground-truth mask is nonempty. AUC is left unset, with a
// warning, when only one class is present.
MetricsReport evaluate_dataset(model::Detector& detector,
                               const std::vector<media::Video>& videos,
                               const std::vector<media::Video>& negatives = {},
                               const EvalOptions& opts = {});

}  // namespace vidnet::metrics
