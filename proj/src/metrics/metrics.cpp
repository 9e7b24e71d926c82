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


#include "metrics/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace vidnet::metrics {

double iou_loss(const nn::Tensor& p, const nn::Tensor& y, double eps) {
  nn::NoGradGuard no_grad;
  return nn::iou_loss(nn::Var::constant(p), y, eps).value()[0];
}

media::MaskFrame binarize(const nn::Tensor& p, double threshold) {
  if (p.n() != 1 || p.c() != 1)
    throw std::invalid_argument("binarize expects [1, 1, H, W], got " + p.shape().str());
  media::MaskFrame m(p.h(), p.w());
  for (std::size_t i = 0; i < p.size(); ++i) m.pixels()[i] = p[i] >= threshold;
  return m;
}

IouF1 frame_iou_f1(const media::MaskFrame& pred, const media::MaskFrame& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width())
    throw std::invalid_argument("frame_iou_f1: mask sizes differ");
  std::size_t inter = 0, np = 0, ny = 0;
  for (std::size_t i = 0; i < gt.pixels().size(); ++i) {
    const bool a = pred.pixels()[i], b = gt.pixels()[i];
    inter += a && b;
    np += a;
    ny += b;
  }
  if (np + ny == 0) return {1.0, 1.0};
  const double uni = static_cast<double>(np + ny - inter);
  return {inter / uni, 2.0 * inter / static_cast<double>(np + ny)};
}

double frame_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("frame_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mid-ranks (1-based) so that ties contribute one half.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0 && labels[order[k]] != 1)
        throw std::invalid_argument("frame_auc: labels must be 0 or 1");
      if (labels[order[k]] == 1) {
        rank_sum += mid;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0)
    throw UndefinedMetricError("frame AUC needs both positive and negative frames");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(neg));
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["mean_iou"] = mean_iou;
  j["f1"] = f1;
  j["auc"] = auc ? nlohmann::ordered_json(*auc) : nlohmann::ordered_json(nullptr);
  j["frames"] = frames;
  j["threshold"] = threshold;
  j["per_video"] = nlohmann::ordered_json::array();
  for (const auto& v : per_video)
    j["per_video"].push_back(
        {{"id", v.id}, {"frames", v.frames}, {"iou", v.iou}, {"f1", v.f1}});
  j["warnings"] = warnings;
  return j.dump(2);
}

namespace {

double mean_value(const nn::Tensor& t) { return t.sum() / static_cast<double>(t.size()); }

void check_prediction(const nn::Tensor& p, const media::MaskFrame& m,
                      const std::string& id) {
  if (p.h() != m.height() || p.w() != m.width())
    throw std::invalid_argument("prediction for " + id + " is " + p.shape().str() +
                                ", mask is " + std::to_string(m.height()) + "x" +
                                std::to_string(m.width()));
}

}  // namespace

MetricsReport evaluate_dataset(model::Detector& detector,
                               const std::vector<media::Video>& videos,
                               const std::vector<media::Video>& negatives,
                               const EvalOptions& opts) {
  if (videos.empty()) throw std::invalid_argument("evaluate_dataset: no videos");
  MetricsReport report;
  report.threshold = opts.threshold;
  std::vector<double> scores;
  std::vector<int> labels;
  double iou_sum = 0.0, f1_sum = 0.0;
  for (const media::Video& v : videos) {
    if (v.masks.size() != v.frames.size())
      throw std::invalid_argument("video " + v.id + " lacks ground-truth masks");
    const std::vector<nn::Tensor> probs = detector.predict_video(v);
    if (probs.size() != v.frames.size())
      throw std::runtime_error("detector returned the wrong number of frames for " + v.id);
    VideoScore vs{v.id, static_cast<int>(v.frames.size()), 0.0, 0.0};
    for (std::size_t t = 0; t < probs.size(); ++t) {
      check_prediction(probs[t], v.masks[t], v.id);
      const IouF1 s = frame_iou_f1(binarize(probs[t], opts.threshold), v.masks[t]);
      vs.iou += s.iou;
      vs.f1 += s.f1;
      scores.push_back(mean_value(probs[t]));
      labels.push_back(v.masks[t].area() > 0);
    }
    iou_sum += vs.iou;
    f1_sum += vs.f1;
    report.frames += vs.frames;
    vs.iou /= vs.frames;
    vs.f1 /= vs.frames;
    report.per_video.push_back(vs);
  }
  report.mean_iou = iou_sum / report.frames;
  report.f1 = f1_sum / report.frames;
  for (const media::Video& v : negatives) {
    const std::vector<nn::Tensor> probs = detector.predict_video(v);
    for (std::size_t t = 0; t < probs.size(); ++t) {
      scores.push_back(mean_value(probs[t]));
      labels.push_back(t < v.masks.size() && v.masks[t].area() > 0);
    }
  }
  try {
    report.auc = frame_auc(scores, labels);
  } catch (const UndefinedMetricError& e) {
    report.warnings.push_back(std::string("auc: ") + e.what());
  }
  return report;
}

}  // namespace vidnet::metrics
