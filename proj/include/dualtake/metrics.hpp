#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dualtake::eval {

// Fraction correct at the threshold; a score equal to the threshold
// classifies negative (no takeover).
double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// Unique-threshold sweep, tied scores collapse into one step; always starts
// at (0,0) and ends at (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const int> labels);

// Trapezoidal area under roc_curve.
double auc(std::span<const double> scores, std::span<const int> labels);

struct FoldAssignment {
    int k = 0;
    std::vector<int> participants;   // all distinct ids
    std::vector<int> fold_of;        // same order as participants

    int fold_for(int participant_id) const;
};

// Participants shuffled by seed, dealt round-robin into k folds.
FoldAssignment group_kfold(const std::vector<int>& participants, int k,
                           std::uint64_t seed);

struct TTestResult {
    double t = 0.0;
    int df = 0;
    double p = 0.0;      // two-tailed
    bool degenerate = false;  // zero-variance nonzero differences
};

// Paired t-test with sample sd; p from numerical integration of the
// t density (adaptive Simpson).
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace dualtake::eval
