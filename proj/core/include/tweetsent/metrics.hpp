#pragma once

#include <stdexcept>
#include <vector>

namespace tweetsent {

struct EmptyDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClassMetrics {
  double precision = 0.0;  // TP/(TP+FP), 0 when the denominator is 0
  double recall = 0.0;     // TP/(TP+FN), 0 when the denominator is 0
  double f1 = 0.0;         // harmonic mean, 0 when P+R = 0
  long support = 0;        // gold instances of the class
  bool absent = false;     // class appears in neither gold nor predictions
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;  // unweighted means over all classes
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  long total = 0;
};

// gold/pred hold class indices in [0, n_classes). Throws EmptyDataset when
// empty, std::invalid_argument on size mismatch or out-of-range labels.
MetricsReport compute_metrics(const std::vector<int>& gold,
                              const std::vector<int>& pred, int n_classes);

}  // namespace tweetsent
