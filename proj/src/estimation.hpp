#pragma once

#include <optional>

#include <Eigen/Dense>

#include "sequences.hpp"

namespace relaxcrb {

/// Additive white Gaussian noise. snr = m0 / sigma.
struct NoiseModel {
    double sigma = 1.0;
    double snr = 1.0;

    static NoiseModel from_snr(double m0, double snr);
    static NoiseModel from_sigma(double m0, double sigma);
};

/// Symmetric p x p information matrix, ordered [M0, T1] or [M0, T1, T2].
struct FisherInfo {
    Eigen::MatrixXd matrix;
};

struct CrbDiagonal {
    double m0 = 0.0; // signal units^2
    double t1 = 0.0; // ms^2
    std::optional<double> t2;
};

/// Bound fields produced by the geometric route (sensitivity x orthogonality).
struct GeometricBound {
    double sens_t1 = 0.0; // 1/ms
    double orth_t1 = 0.0;
    double crb_t1 = 0.0; // ms^2
    double phi1 = 0.0;   // angle(h, dh/dT1), rad
    std::optional<double> sens_t2, orth_t2, crb_t2;
    std::optional<double> phi2, phi3; // angle(h, dh/dT2), angle(dh/dT1, dh/dT2)
};

/// Full per-point report: both CRB routes' outputs plus TNR efficiency.
struct CrbReport {
    double crb_m0 = 0.0;
    double crb_t1 = 0.0;
    std::optional<double> crb_t2;
    GeometricBound geometry;
    double gamma_t1 = 0.0; // 1/sqrt(s)
    std::optional<double> gamma_t2;
    double t_seq = 0.0; // ms
};

/// N x p Jacobian of s = m0 h with respect to [M0, T1(, T2)].
Eigen::MatrixXd jacobian(const SequenceProtocol &p, const TissueParams &tissue);

FisherInfo fisher_information(const Eigen::MatrixXd &jac, double sigma);

/// Diagonal of the inverse information matrix. Throws SingularInformation
/// when the (scale-equilibrated) condition number exceeds 1e12.
CrbDiagonal crb_matrix(const FisherInfo &info);

/// CRB(T) = (snr * Sens * Orth)^-2. Throws CollinearVectors when a required
/// angle is degenerate.
GeometricBound crb_geometric(const WeightingVector &w, double snr);

/// snr * sqrt(t_scan / t_seq).
double equivalent_snr(double snr, double t_scan_ms, double t_seq_ms);

/// Gamma = T / (sqrt(CRB) sqrt(T_seq)), reported per sqrt(second).
double tnr_efficiency(double t, double crb_t, double t_seq_ms);

/// Percentage CRB: 100 sqrt(CRB) / T.
double pcrb(double crb_t, double t);

/// Evaluates both routes at one tissue point; the CRB fields come from the
/// matrix route.
CrbReport evaluate_point(const SequenceProtocol &p, const TissueParams &tissue, double snr);

} // namespace relaxcrb
