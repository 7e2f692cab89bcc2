#pragma once

#include <optional>

namespace idskit {

// A classifier's verdict on one record. confidence is the winning class's
// score: a probability for the MLP and Naive Bayes, a vote fraction for the
// forest, and |margin| for the SVM. prob_attack is the probability assigned
// to class 1 and is absent for classifiers that produce no probabilities.
struct Prediction {
    int cls = 0;
    double confidence = 0.0;
    std::optional<double> prob_attack;
};

}  // namespace idskit
