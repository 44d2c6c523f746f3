#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>

namespace gradkrig {

/// Abstract symmetric operator exposing what iterative methods need: MVMs,
/// and optionally the diagonal and individual rows (for preconditioning).
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index size() const = 0;
  virtual void mvm(const Eigen::Ref<const Eigen::VectorXd>& x,
                   Eigen::Ref<Eigen::VectorXd> y) const = 0;

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd y(size());
    mvm(x, y);
    return y;
  }

  virtual bool has_diagonal() const { return false; }
  virtual Eigen::VectorXd diagonal() const;

  virtual bool has_rows() const { return false; }
  virtual Eigen::VectorXd row(Eigen::Index i) const;

  /// Materializes the operator column by column. Intended for tests and
  /// small problems only.
  Eigen::MatrixXd dense() const;
};

/// Dense symmetric matrix behind the operator interface.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd matrix) : A_(std::move(matrix)) {}

  Eigen::Index size() const override { return A_.rows(); }
  void mvm(const Eigen::Ref<const Eigen::VectorXd>& x,
           Eigen::Ref<Eigen::VectorXd> y) const override {
    y.noalias() = A_ * x;
  }
  bool has_diagonal() const override { return true; }
  Eigen::VectorXd diagonal() const override { return A_.diagonal(); }
  bool has_rows() const override { return true; }
  Eigen::VectorXd row(Eigen::Index i) const override { return A_.row(i); }

  const Eigen::MatrixXd& matrix() const { return A_; }

 private:
  Eigen::MatrixXd A_;
};

/// Operator defined by a callback; used for composed operators (shifted,
/// scaled, Hadamard pairs) without materializing anything.
class CallbackOperator final : public LinearOperator {
 public:
  using Apply = std::function<void(const Eigen::Ref<const Eigen::VectorXd>&,
                                   Eigen::Ref<Eigen::VectorXd>)>;
  CallbackOperator(Eigen::Index size, Apply apply)
      : size_(size), apply_(std::move(apply)) {}

  Eigen::Index size() const override { return size_; }
  void mvm(const Eigen::Ref<const Eigen::VectorXd>& x,
           Eigen::Ref<Eigen::VectorXd> y) const override {
    apply_(x, y);
  }

 private:
  Eigen::Index size_;
  Apply apply_;
};

}  // namespace gradkrig
