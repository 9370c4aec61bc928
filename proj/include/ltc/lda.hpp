#pragma once

// Linear discriminant analysis with a shared, shrinkage-regularized
// covariance. Used to aggregate a vector of per-bit probabilities into
// class posteriors.

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ltc/matrix.hpp"

namespace ltc {

struct LdaConfig {
  double shrinkage = 0.05;  // s in (1-s) Sigma + s diag(Sigma)
  double diagonal_floor = 1e-6;
  bool uniform_priors = false;
};

struct LdaModel {
  std::size_t num_classes = 0;
  std::size_t dims = 0;
  double shrinkage = 0.0;
  Matrix class_means;         // classes x dims
  Matrix pooled_covariance;   // dims x dims, regularized
  std::vector<double> priors;
  Matrix weights;             // classes x dims, Sigma^-1 mu_c
  std::vector<double> biases; // -1/2 mu_c' Sigma^-1 mu_c + ln prior_c

  bool operator==(const LdaModel&) const = default;
};

// `labels[i]` is the class of row i, in [0, num_classes). Every class needs
// at least one sample.
LdaModel fit_lda(const Matrix& features, std::span<const std::size_t> labels, std::size_t num_classes,
                 const LdaConfig& config = {});

std::vector<double> lda_discriminants(const LdaModel& model, std::span<const double> x);
// Softmax of the discriminants.
std::vector<double> lda_class_scores(const LdaModel& model, std::span<const double> x);

// means + covariance + priors + weights + biases.
std::size_t lda_param_count(const LdaModel& model);
// One multiply and one add per weight, one bias add per class, 4 per exp.
std::size_t lda_ops_per_query(const LdaModel& model);

void to_json(nlohmann::json& j, const LdaModel& model);
void from_json(const nlohmann::json& j, LdaModel& model);

}  // namespace ltc
