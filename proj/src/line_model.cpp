#include "eivlpe/line_model.hpp"

#include <cmath>
#include <complex>

namespace eivlpe {

namespace {

using cplx = std::complex<double>;

cplx to_c(const Phasor& p) { return {p.re, p.im}; }
Phasor from_c(cplx c) { return {c.real(), c.imag()}; }

cplx series_admittance(const LineParameters& p)
{
    if (p.r == 0.0 && p.x == 0.0)
        throw InvalidInput("zero series impedance");
    if (!std::isfinite(p.r) || !std::isfinite(p.x) || !std::isfinite(p.b))
        throw InvalidInput("non-finite line parameters");
    return 1.0 / cplx(p.r, p.x);
}

bool finite(const Phasor& p) { return std::isfinite(p.re) && std::isfinite(p.im); }

}  // namespace

void EivProblem::validate() const
{
    if (X.rows() != y.size())
        throw InvalidInput("X and y row counts differ");
    if (X.rows() < X.cols() || X.cols() < 1)
        throw InvalidInput("EIV problem needs n >= p >= 1");
    if (!(eps0 > 0.0))
        throw InvalidInput("eps0 must be positive");
    if (!X.allFinite() || !y.allFinite())
        throw InvalidInput("non-finite entries in EIV problem");
    if (constraint) {
        if (constraint->C.rows() != X.cols() || constraint->C.cols() != constraint->f.size())
            throw InvalidInput("constraint shape mismatch");
    }
}

std::pair<Phasor, Phasor> branch_currents(const Phasor& vk, const Phasor& vl, const LineParameters& params)
{
    const cplx y = series_admittance(params);
    const cplx jb(0.0, params.b);
    const cplx Vk = to_c(vk), Vl = to_c(vl);
    return {from_c(jb * Vk + (Vk - Vl) * y), from_c(jb * Vl + (Vl - Vk) * y)};
}

AdmittanceVector params_to_admittance(const LineParameters& params)
{
    const cplx y = series_admittance(params);
    const double g = y.real(), by = y.imag();
    return AdmittanceVector(g, -(params.b + by), -g, by);
}

LineParameters admittance_to_params(const Eigen::Ref<const Eigen::VectorXd>& Y)
{
    if (Y.size() != 4)
        throw InvalidInput("admittance vector must have 4 entries");
    const double d13 = Y(0) - Y(2);
    const double den = d13 * d13 + 4.0 * Y(3) * Y(3);
    if (!(den > 0.0) || !std::isfinite(den))
        throw NumericalError("degenerate admittance vector, (Y1-Y3)^2 + (2 Y4)^2 = 0");
    return {2.0 * d13 / den, -4.0 * Y(3) / den, -(Y(1) + Y(3))};
}

LinearConstraint lpe_constraint()
{
    LinearConstraint c;
    c.C = Eigen::MatrixXd::Zero(4, 1);
    c.C(0, 0) = 1.0;
    c.C(2, 0) = 1.0;
    c.f = Eigen::VectorXd::Zero(1);
    return c;
}

EivProblem build_regression(const std::vector<PmuRecord>& records, bool with_constraint, double eps0)
{
    if (records.empty())
        throw InvalidInput("build_regression needs at least one record");
    const Eigen::Index n = 4 * static_cast<Eigen::Index>(records.size());
    EivProblem prob;
    prob.X.resize(n, 4);
    prob.y.resize(n);
    prob.eps0 = eps0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        const PmuRecord& rec = records[k];
        if (!finite(rec.vk) || !finite(rec.vl) || !finite(rec.ik) || !finite(rec.il))
            throw InvalidInput("non-finite phasor in record " + std::to_string(k));
        const Phasor &vk = rec.vk, &vl = rec.vl;
        const Eigen::Index i = 4 * static_cast<Eigen::Index>(k);
        prob.X.row(i) << vk.re, vk.im, vl.re, vl.im;
        prob.y(i) = rec.ik.re;
        prob.X.row(i + 1) << vk.im, -vk.re, vl.im, -vl.re;
        prob.y(i + 1) = rec.ik.im;
        prob.X.row(i + 2) << vl.re, vl.im, vk.re, vk.im;
        prob.y(i + 2) = rec.il.re;
        prob.X.row(i + 3) << vl.im, -vl.re, vk.im, -vk.re;
        prob.y(i + 3) = rec.il.im;
    }
    if (with_constraint)
        prob.constraint = lpe_constraint();
    return prob;
}

}  // namespace eivlpe
