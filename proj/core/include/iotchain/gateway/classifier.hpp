#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace iotchain::gateway {

// Outcome of classifying one flow record. is_malicious mirrors whether the
// predicted class is the benign one; probability is the model's confidence
// in the predicted class.
struct Verdict {
  std::size_t class_index = 0;
  std::string class_name;
  bool is_malicious = false;
  double probability = 0.0;

  bool operator==(const Verdict&) const = default;
};

// The only view a gateway has of a detection model: a feature vector in,
// a verdict out. Trained model artifacts implement this behind a loader.
class FlowClassifier {
 public:
  virtual ~FlowClassifier() = default;

  virtual std::size_t feature_count() const = 0;
  virtual Verdict classify(std::span<const double> features) const = 0;
};

}  // namespace iotchain::gateway
