#include "ltc/lda.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ltc/error.hpp"

namespace ltc {

namespace {

constexpr double kMinReciprocalCondition = 1e-12;

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  if (j.size() != rows) throw ParseError("matrix row count mismatch");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto values = j.at(r).get<std::vector<double>>();
    if (values.size() != cols) throw ParseError("matrix column count mismatch");
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

LdaModel fit_lda(const Matrix& features, std::span<const std::size_t> labels, std::size_t num_classes,
                 const LdaConfig& config) {
  if (features.rows() != labels.size()) throw ShapeError("features and labels differ in length");
  if (num_classes < 2) throw DomainError("LDA needs at least 2 classes");
  if (!(config.shrinkage >= 0.0 && config.shrinkage <= 1.0)) throw DomainError("shrinkage must lie in [0, 1]");
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (d == 0) throw ShapeError("LDA needs at least one feature dimension");

  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t c : labels) {
    if (c >= num_classes) throw LookupError("class label " + std::to_string(c) + " out of range");
    ++counts[c];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw DomainError("class " + std::to_string(c) + " has no training samples");
  }

  LdaModel model;
  model.num_classes = num_classes;
  model.dims = d;
  model.shrinkage = config.shrinkage;

  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    for (std::size_t k = 0; k < d; ++k) means(labels[i], k) += row[k];
  }
  for (std::size_t c = 0; c < num_classes; ++c) means.row(c) /= static_cast<double>(counts[c]);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd centered(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    for (std::size_t k = 0; k < d; ++k) centered(k) = row[k] - means(labels[i], k);
    cov.noalias() += centered * centered.transpose();
  }
  const std::size_t dof = n > num_classes ? n - num_classes : n;
  cov /= static_cast<double>(dof);

  if (config.shrinkage > 0.0) {
    const Eigen::VectorXd diag = cov.diagonal();
    cov *= (1.0 - config.shrinkage);
    for (std::size_t k = 0; k < d; ++k) {
      cov(k, k) = std::max(cov(k, k) + config.shrinkage * diag(k), config.diagonal_floor);
    }
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || llt.rcond() < kMinReciprocalCondition) {
    throw NumericalError("pooled covariance is singular; fit with shrinkage > 0");
  }

  model.priors.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    model.priors[c] = config.uniform_priors ? 1.0 / static_cast<double>(num_classes)
                                            : static_cast<double>(counts[c]) / static_cast<double>(n);
  }

  const Eigen::MatrixXd w = llt.solve(means.transpose()).transpose();  // classes x dims
  model.class_means = Matrix(num_classes, d);
  model.weights = Matrix(num_classes, d);
  model.pooled_covariance = Matrix(d, d);
  model.biases.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t k = 0; k < d; ++k) {
      model.class_means(c, k) = means(c, k);
      model.weights(c, k) = w(c, k);
    }
    model.biases[c] = -0.5 * w.row(c).dot(means.row(c)) + std::log(model.priors[c]);
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) model.pooled_covariance(a, b) = cov(a, b);
  }
  return model;
}

std::vector<double> lda_discriminants(const LdaModel& model, std::span<const double> x) {
  if (x.size() != model.dims) {
    throw ShapeError("LDA input has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.dims));
  }
  std::vector<double> out(model.num_classes);
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    const auto w = model.weights.row(c);
    double s = model.biases[c];
    for (std::size_t k = 0; k < model.dims; ++k) s += w[k] * x[k];
    out[c] = s;
  }
  return out;
}

std::vector<double> lda_class_scores(const LdaModel& model, std::span<const double> x) {
  std::vector<double> scores = lda_discriminants(model, x);
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    total += s;
  }
  for (double& s : scores) s /= total;
  return scores;
}

std::size_t lda_param_count(const LdaModel& m) {
  return 2 * m.num_classes * m.dims + m.dims * m.dims + 2 * m.num_classes;
}

std::size_t lda_ops_per_query(const LdaModel& m) { return 2 * m.num_classes * m.dims + m.num_classes + 4 * m.num_classes; }

void to_json(nlohmann::json& j, const LdaModel& m) {
  j = {{"num_classes", m.num_classes},
       {"dims", m.dims},
       {"shrinkage", m.shrinkage},
       {"class_means", matrix_json(m.class_means)},
       {"pooled_covariance", matrix_json(m.pooled_covariance)},
       {"priors", m.priors},
       {"weights", matrix_json(m.weights)},
       {"biases", m.biases}};
}

void from_json(const nlohmann::json& j, LdaModel& m) {
  m = LdaModel{};
  m.num_classes = j.at("num_classes").get<std::size_t>();
  m.dims = j.at("dims").get<std::size_t>();
  m.shrinkage = j.at("shrinkage").get<double>();
  m.class_means = matrix_from_json(j.at("class_means"), m.num_classes, m.dims);
  m.pooled_covariance = matrix_from_json(j.at("pooled_covariance"), m.dims, m.dims);
  m.priors = j.at("priors").get<std::vector<double>>();
  m.weights = matrix_from_json(j.at("weights"), m.num_classes, m.dims);
  m.biases = j.at("biases").get<std::vector<double>>();
  if (m.priors.size() != m.num_classes || m.biases.size() != m.num_classes) {
    throw ParseError("LDA priors/biases size mismatch");
  }
}

}  // namespace ltc
