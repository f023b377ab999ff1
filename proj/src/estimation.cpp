#include "estimation.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace relaxcrb {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMinSine = 1e-12;

struct Angle {
    double phi;
    double sine;
    double cosine;
};

Angle angle_between(const Eigen::VectorXd &x, const Eigen::VectorXd &y) {
    const double c = std::clamp(x.dot(y) / (x.norm() * y.norm()), -1.0, 1.0);
    const double phi = std::acos(c);
    return {phi, std::sin(phi), c};
}

Eigen::MatrixXd jacobian_from(const WeightingVector &w, double m0) {
    const Eigen::Index p = w.dh_dt2 ? 3 : 2;
    Eigen::MatrixXd jac(w.h.size(), p);
    jac.col(0) = w.h;
    jac.col(1) = m0 * w.dh_dt1;
    if (w.dh_dt2) jac.col(2) = m0 * *w.dh_dt2;
    return jac;
}

} // namespace

NoiseModel NoiseModel::from_snr(double m0, double snr) {
    if (!(m0 > 0.0) || !(snr > 0.0) || !std::isfinite(m0) || !std::isfinite(snr))
        throw Error(ErrorCode::InvalidArgument, "noise model needs m0 > 0 and snr > 0");
    return {m0 / snr, snr};
}

NoiseModel NoiseModel::from_sigma(double m0, double sigma) {
    if (!(m0 > 0.0) || !(sigma > 0.0) || !std::isfinite(m0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidArgument, "noise model needs m0 > 0 and sigma > 0");
    return {sigma, m0 / sigma};
}

Eigen::MatrixXd jacobian(const SequenceProtocol &p, const TissueParams &tissue) {
    return jacobian_from(weighting_vector(p, tissue), tissue.m0);
}

FisherInfo fisher_information(const Eigen::MatrixXd &jac, double sigma) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
    return {jac.transpose() * jac / (sigma * sigma)};
}

CrbDiagonal crb_matrix(const FisherInfo &info) {
    const Eigen::MatrixXd &m = info.matrix;
    const Eigen::Index p = m.rows();
    if (p < 2 || p > 3 || m.cols() != p)
        throw Error(ErrorCode::InvalidArgument, "information matrix must be 2x2 or 3x3");

    // Equilibrate so the condition number reflects identifiability rather
    // than the mixed units of M0 and T1/T2.
    Eigen::VectorXd scale = m.diagonal();
    for (Eigen::Index i = 0; i < p; ++i)
        if (!(scale[i] > 0.0) || !std::isfinite(scale[i]))
            throw Error(ErrorCode::SingularInformation, "information matrix has a zero diagonal entry");
    scale = scale.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd r = scale.asDiagonal() * m * scale.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxCondition)
        throw Error(ErrorCode::SingularInformation, "information matrix is singular (unidentifiable protocol)");

    const Eigen::MatrixXd rinv = r.inverse();
    CrbDiagonal out;
    out.m0 = rinv(0, 0) * scale[0] * scale[0];
    out.t1 = rinv(1, 1) * scale[1] * scale[1];
    if (p == 3) out.t2 = rinv(2, 2) * scale[2] * scale[2];
    return out;
}

GeometricBound crb_geometric(const WeightingVector &w, double snr) {
    if (!(snr > 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be > 0");
    if (!(w.h.norm() > 0.0) || !(w.dh_dt1.norm() > 0.0) || (w.dh_dt2 && !(w.dh_dt2->norm() > 0.0)))
        throw Error(ErrorCode::InvalidArgument, "weighting and sensitivity vectors must be non-zero");

    GeometricBound g;
    const Angle a1 = angle_between(w.h, w.dh_dt1);
    g.phi1 = a1.phi;
    g.sens_t1 = w.dh_dt1.norm();
    if (a1.sine < kMinSine) throw Error(ErrorCode::CollinearVectors, "h is collinear with dh/dT1");

    if (!w.dh_dt2) {
        g.orth_t1 = a1.sine;
        g.crb_t1 = 1.0 / std::pow(snr * g.sens_t1 * g.orth_t1, 2);
        return g;
    }

    const Angle a2 = angle_between(w.h, *w.dh_dt2);
    const Angle a3 = angle_between(w.dh_dt1, *w.dh_dt2);
    g.phi2 = a2.phi;
    g.phi3 = a3.phi;
    g.sens_t2 = w.dh_dt2->norm();
    if (a2.sine < kMinSine) throw Error(ErrorCode::CollinearVectors, "h is collinear with dh/dT2");

    // Volume spanned by the three unit vectors, sqrt of their Gram
    // determinant. QR keeps it accurate near coplanarity, where the cosine
    // expansion loses about half the digits.
    double vol = 0.0;
    if (w.h.size() >= 3) {
        Eigen::MatrixXd u(w.h.size(), 3);
        u.col(0) = w.h.normalized();
        u.col(1) = w.dh_dt1.normalized();
        u.col(2) = w.dh_dt2->normalized();
        const Eigen::MatrixXd qr = u.householderQr().matrixQR();
        vol = std::abs(qr(0, 0) * qr(1, 1) * qr(2, 2));
    }
    if (vol < kMinSine) throw Error(ErrorCode::CollinearVectors, "h, dh/dT1 and dh/dT2 are coplanar");

    g.orth_t1 = vol / a2.sine;
    g.orth_t2 = vol / a1.sine;
    g.crb_t1 = 1.0 / std::pow(snr * g.sens_t1 * g.orth_t1, 2);
    g.crb_t2 = 1.0 / std::pow(snr * *g.sens_t2 * *g.orth_t2, 2);
    return g;
}

double equivalent_snr(double snr, double t_scan_ms, double t_seq_ms) {
    if (!(snr > 0.0) || !(t_scan_ms > 0.0) || !(t_seq_ms > 0.0))
        throw Error(ErrorCode::InvalidArgument, "equivalent SNR needs snr, t_scan and t_seq > 0");
    return snr * std::sqrt(t_scan_ms / t_seq_ms);
}

double tnr_efficiency(double t, double crb_t, double t_seq_ms) {
    if (!(crb_t > 0.0) || !(t_seq_ms > 0.0))
        throw Error(ErrorCode::InvalidArgument, "TNR efficiency needs crb > 0 and t_seq > 0");
    return t / (std::sqrt(crb_t) * std::sqrt(t_seq_ms / 1000.0));
}

double pcrb(double crb_t, double t) {
    if (!(crb_t >= 0.0) || !(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "PCRB needs crb >= 0 and t > 0");
    return 100.0 * std::sqrt(crb_t) / t;
}

CrbReport evaluate_point(const SequenceProtocol &p, const TissueParams &tissue, double snr) {
    const WeightingVector w = weighting_vector(p, tissue);
    const NoiseModel noise = NoiseModel::from_snr(tissue.m0, snr);
    const CrbDiagonal diag = crb_matrix(fisher_information(jacobian_from(w, tissue.m0), noise.sigma));

    CrbReport r;
    r.geometry = crb_geometric(w, snr);
    r.crb_m0 = diag.m0;
    r.crb_t1 = diag.t1;
    r.crb_t2 = diag.t2;
    r.t_seq = sequence_time(p);
    r.gamma_t1 = tnr_efficiency(tissue.t1, diag.t1, r.t_seq);
    if (diag.t2) r.gamma_t2 = tnr_efficiency(tissue.t2, *diag.t2, r.t_seq);
    return r;
}

} // namespace relaxcrb
