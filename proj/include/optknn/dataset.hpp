#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace optknn {

using Index = std::size_t;
using IndexList = std::vector<Index>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class OutcomeKind { Continuous, Binary };
enum class Estimand { ATET, ATE };

const char* to_string(OutcomeKind kind);
const char* to_string(Estimand estimand);

// Observational sample: N units, P covariates, binary treatment.
// Construction validates every invariant; a Dataset is immutable afterwards.
class Dataset {
 public:
  Dataset(RowMatrix covariates, std::vector<int> treatment, std::vector<double> outcome,
          OutcomeKind kind = OutcomeKind::Continuous, std::vector<std::string> names = {});

  Index size() const { return treatment_.size(); }
  Index dims() const { return static_cast<Index>(covariates_.cols()); }

  const RowMatrix& covariates() const { return covariates_; }
  Eigen::Map<const Eigen::VectorXd> row(Index i) const {
    return {covariates_.row(static_cast<Eigen::Index>(i)).data(), covariates_.cols()};
  }
  int treatment(Index i) const { return treatment_[i]; }
  double outcome(Index i) const { return outcome_[i]; }
  const std::vector<int>& treatment() const { return treatment_; }
  const std::vector<double>& outcome() const { return outcome_; }
  OutcomeKind outcome_kind() const { return kind_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  const IndexList& treated() const { return treated_; }
  const IndexList& controls() const { return controls_; }
  Index n_treated() const { return treated_.size(); }
  Index n_control() const { return controls_.size(); }

  // Copy with every outcome replaced; treatment and covariates are shared values.
  Dataset with_outcome(std::vector<double> outcome) const;
  // Copy with covariates z-scored by full-sample mean and standard deviation.
  // Constant columns are centred but left unscaled.
  Dataset standardized() const;

 private:
  RowMatrix covariates_;
  std::vector<int> treatment_;
  std::vector<double> outcome_;
  OutcomeKind kind_;
  std::vector<std::string> names_;
  IndexList treated_;
  IndexList controls_;
};

}  // namespace optknn
