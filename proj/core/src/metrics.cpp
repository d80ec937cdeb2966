#include "tweetsent/metrics.hpp"

namespace tweetsent {

MetricsReport compute_metrics(const std::vector<int>& gold,
                              const std::vector<int>& pred, int n_classes) {
  if (gold.empty()) throw EmptyDataset("no instances to score");
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("gold/pred size mismatch");
  }

  std::vector<long> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i];
    const int p = pred[i];
    if (g < 0 || g >= n_classes || p < 0 || p >= n_classes) {
      throw std::invalid_argument("label index out of range");
    }
    if (g == p) {
      ++tp[g];
      ++correct;
    } else {
      ++fn[g];
      ++fp[p];
    }
  }

  MetricsReport rep;
  rep.total = static_cast<long>(gold.size());
  rep.accuracy = static_cast<double>(correct) / rep.total;
  rep.per_class.resize(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    ClassMetrics& m = rep.per_class[k];
    m.support = tp[k] + fn[k];
    const long pred_k = tp[k] + fp[k];
    m.precision = pred_k > 0 ? static_cast<double>(tp[k]) / pred_k : 0.0;
    m.recall = m.support > 0 ? static_cast<double>(tp[k]) / m.support : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.absent = m.support == 0 && pred_k == 0;
    rep.macro_precision += m.precision;
    rep.macro_recall += m.recall;
    rep.macro_f1 += m.f1;
  }
  rep.macro_precision /= n_classes;
  rep.macro_recall /= n_classes;
  rep.macro_f1 /= n_classes;
  return rep;
}

}  // namespace tweetsent
