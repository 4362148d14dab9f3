#include "slapred/core.hpp"

#include <cmath>
#include <cstdio>

namespace slapred {

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return std::nullopt;
}

bool FeatureVector::valid() const {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0) return false;
    if (is_percent_feature(i) && v > 100.0) return false;
  }
  return true;
}

void FeatureVector::validate() const {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double v = values[i];
    const bool ok = std::isfinite(v) && v >= 0.0 && (!is_percent_feature(i) || v <= 100.0);
    if (!ok) {
      throw std::invalid_argument("feature " + std::string(kFeatureNames[i]) +
                                  " out of domain: " + std::to_string(v));
    }
  }
}

bool ServiceSample::valid() const {
  return std::isfinite(timestamp) && std::isfinite(fps) && std::isfinite(abs) && fps >= 0.0 &&
         abs >= 0.0;
}

std::string_view to_string(SlaLabel label) {
  return label == SlaLabel::violated ? "violated" : "conforming";
}

void ConfusionMatrix::add(SlaLabel actual, SlaLabel predicted) {
  if (actual == SlaLabel::violated) {
    predicted == SlaLabel::violated ? ++tp : ++fn;
  } else {
    predicted == SlaLabel::violated ? ++fp : ++tn;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

std::string_view to_string(FarVariant variant) {
  return variant == FarVariant::as_printed ? "as_printed" : "fpr";
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport compute_metrics(const ConfusionMatrix& cm, FarVariant far_variant) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw EmptyEvaluation();

  MetricsReport r;
  r.ca = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
  r.tpr = ratio(cm.tp, cm.tp + cm.fn);
  r.tnr = ratio(cm.tn, cm.tn + cm.fp);
  if (r.tpr && r.tnr) r.ba = (*r.tpr + *r.tnr) / 2.0;
  r.far_as_printed = ratio(cm.fn, cm.fn + cm.tp);
  r.far_fpr = ratio(cm.fp, cm.fp + cm.tn);
  r.far_variant = far_variant;
  return r;
}

std::string format_metric(std::optional<double> value, int precision) {
  if (!value) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *value);
  return buf;
}

}  // namespace slapred
