#pragma once

#include <chrono>

#include "bilbao/algorithms.hpp"
#include "bilbao/errors.hpp"

namespace bilbao::detail {

/// Evaluates objectives through the problem's budgeted calls and records
/// every call.
class TraceBuilder {
 public:
  explicit TraceBuilder(BilevelProblem& problem)
      : problem_(problem), start_(std::chrono::steady_clock::now()), base_(problem.counts()) {}

  TraceRecord& evaluate(Level level, const Eigen::VectorXd& joint) {
    TraceRecord record;
    record.level = level;
    record.point = joint;
    record.value = level == Level::Upper ? problem_.upper(joint) : problem_.lower(joint);
    record.evaluations = static_cast<long>(trace_.records.size()) + 1;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    trace_.records.push_back(std::move(record));
    return trace_.records.back();
  }

  const TraceRecord& last() const { return trace_.records.back(); }

  Trace finish(Eigen::VectorXd recommendation) {
    if (problem_.counts().total() - base_.total() != trace_.total_evaluations())
      throw NumericalError("evaluation counter disagrees with the trace");
    trace_.final_recommendation = std::move(recommendation);
    return std::move(trace_);
  }

 private:
  BilevelProblem& problem_;
  std::chrono::steady_clock::time_point start_;
  EvaluationCounts base_;
  Trace trace_;
};

}  // namespace bilbao::detail
