#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace eivlpe {

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Phasor {
    double re = 0.0;
    double im = 0.0;
};

// Series resistance r, series reactance x, per-end shunt susceptance b (p.u.).
struct LineParameters {
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;
};

// Regression-space parameters w = (Y1, Y2, Y3, Y4).
using AdmittanceVector = Eigen::Vector4d;

struct PmuRecord {
    double t = 0.0;
    Phasor vk, vl, ik, il;
};

struct LinearConstraint {
    Eigen::MatrixXd C;  // p x c
    Eigen::VectorXd f;  // c
};

// y ~ X w with noise in both X and y.
struct EivProblem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::optional<LinearConstraint> constraint;
    double eps0 = 1.0;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }
    void validate() const;
};

std::pair<Phasor, Phasor> branch_currents(const Phasor& vk, const Phasor& vl, const LineParameters& params);

AdmittanceVector params_to_admittance(const LineParameters& params);
LineParameters admittance_to_params(const Eigen::Ref<const Eigen::VectorXd>& Y);

// Y1 + Y3 = 0
LinearConstraint lpe_constraint();

EivProblem build_regression(const std::vector<PmuRecord>& records, bool with_constraint, double eps0 = 1.0);

}  // namespace eivlpe
