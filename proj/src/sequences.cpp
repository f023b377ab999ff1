#include "sequences.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "dual.hpp"
#include "error.hpp"

namespace relaxcrb {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kDegToRad = std::numbers::pi / 180.0;

[[noreturn]] void invalid(const std::string &msg) { throw Error(ErrorCode::InvalidProtocol, msg); }

void check_positive(double v, const char *name) {
    if (!std::isfinite(v) || v <= 0.0) invalid(std::string(name) + " must be finite and > 0");
}

void check_list(const std::vector<double> &xs, const char *name, bool allow_zero) {
    if (xs.empty()) invalid(std::string(name) + " is empty");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
            invalid(std::string(name) + (allow_zero ? " entries must be >= 0" : " entries must be > 0"));
        if (i > 0 && !(x > xs[i - 1])) invalid(std::string(name) + " must be strictly increasing");
    }
}

void check_angles(const std::vector<double> &xs, const char *name, double max_deg, bool inclusive) {
    for (double a : xs) {
        const bool ok = std::isfinite(a) && a > 0.0 && (inclusive ? a <= max_deg : a < max_deg);
        if (!ok) {
            std::ostringstream os;
            os << name << " flip angle " << a << " outside (0, " << max_deg << (inclusive ? "]" : ")");
            invalid(os.str());
        }
    }
}

void check_count(std::size_t n, std::size_t p, Family f) {
    if (n < p) {
        std::ostringstream os;
        os << family_name(f) << " needs at least " << p << " acquisitions, got " << n;
        invalid(os.str());
    }
}

void validate(const SequenceProtocol::Variant &v) {
    std::visit(overloaded{
                   [](const seq::Cir &p) {
                       check_list(p.ti, "TI", true);
                       check_positive(p.w, "W");
                       check_count(p.ti.size(), 2, Family::CIR);
                   },
                   [](const seq::Sr &p) {
                       check_list(p.ti, "TI", true);
                       check_count(p.ti.size(), 2, Family::SR);
                   },
                   [](const seq::Fir1 &p) {
                       check_list(p.ti, "TI", true);
                       check_positive(p.w, "W");
                       check_count(p.ti.size(), 2, Family::FIR1);
                   },
                   [](const seq::Fir2 &p) {
                       check_list(p.ti, "TI", true);
                       check_positive(p.tr, "TR");
                       check_count(p.ti.size(), 2, Family::FIR2);
                       if (!(p.ti.back() < p.tr)) invalid("FIR2 requires max(TI) < TR");
                   },
                   [](const seq::LookLocker &p) {
                       check_list(p.t, "t", false);
                       check_positive(p.tr, "TR");
                       check_angles({p.alpha}, "LL readout", 90.0, true);
                       check_count(p.t.size(), 2, Family::LL);
                       if (!(p.t.back() <= p.tr)) invalid("LL readout times must not exceed TR");
                   },
                   [](const seq::Seir &p) {
                       check_positive(p.tr_ir, "TR_IR");
                       check_positive(p.ti, "TI");
                       check_positive(p.tr_se, "TR_SE");
                       check_positive(p.te, "TE");
                       if (p.n_echo < 1) invalid("SEIR n_echo must be >= 1");
                       if (!(p.ti < p.tr_ir)) invalid("SEIR requires TI < TR_IR");
                       if (!(p.te * p.n_echo < p.tr_se)) invalid("SEIR echo train exceeds TR_SE");
                       check_count(1 + static_cast<std::size_t>(p.n_echo), 3, Family::SEIR);
                   },
                   [](const seq::Despot &p) {
                       check_angles(p.alpha_spgr, "SPGR", 90.0, true);
                       check_angles(p.alpha_ssfp, "SSFP", 180.0, false);
                       if (!p.alpha_spgr.empty()) check_positive(p.tr_spgr, "TR_SPGR");
                       check_positive(p.tr_ssfp, "TR_SSFP");
                       if (p.alpha_ssfp.empty()) invalid("DESPOT needs at least one SSFP acquisition");
                       check_count(p.alpha_spgr.size() + p.alpha_ssfp.size(), 3, Family::DESPOT);
                   },
               },
               v);
}

using std::exp;

// Signal weights of every family, generic over double / Dual.
template <class S>
void model(const SequenceProtocol::Variant &v, const S &t1, const S &t2, std::span<S> out) {
    std::visit(
        overloaded{
            [&](const seq::Cir &p) {
                for (std::size_t i = 0; i < p.ti.size(); ++i) out[i] = 1.0 - 2.0 * exp(-p.ti[i] / t1);
            },
            [&](const seq::Sr &p) {
                for (std::size_t i = 0; i < p.ti.size(); ++i) out[i] = 1.0 - exp(-p.ti[i] / t1);
            },
            [&](const seq::Fir1 &p) {
                const S k = 2.0 - exp(-p.w / t1);
                for (std::size_t i = 0; i < p.ti.size(); ++i) out[i] = 1.0 - k * exp(-p.ti[i] / t1);
            },
            [&](const seq::Fir2 &p) {
                for (std::size_t i = 0; i < p.ti.size(); ++i)
                    out[i] = 1.0 - (2.0 - exp(-(p.tr - p.ti[i]) / t1)) * exp(-p.ti[i] / t1);
            },
            [&](const seq::LookLocker &p) {
                // Discrete readout recursion: free relaxation between pulses,
                // cos(alpha) loss at every readout, inversion at t = 0.
                const double a = p.alpha * kDegToRad;
                const double c = std::cos(a), s = std::sin(a);
                S m_pre = S(1.0);
                if (p.recovery == seq::LlRecovery::SteadyState) {
                    // End-of-TR magnetization is affine in m_pre: off + slope * m_pre.
                    S off = S(0.0), slope = S(-1.0);
                    double prev = 0.0;
                    for (double tn : p.t) {
                        const S e = exp(-(tn - prev) / t1);
                        off = (off * e + (1.0 - e)) * c;
                        slope = slope * e * c;
                        prev = tn;
                    }
                    const S e = exp(-(p.tr - prev) / t1);
                    off = off * e + (1.0 - e);
                    slope = slope * e;
                    m_pre = off / (1.0 - slope);
                }
                S m = -m_pre;
                double prev = 0.0;
                for (std::size_t i = 0; i < p.t.size(); ++i) {
                    const S e = exp(-(p.t[i] - prev) / t1);
                    m = m * e + (1.0 - e);
                    out[i] = s * m;
                    m = m * c;
                    prev = p.t[i];
                }
            },
            [&](const seq::Seir &p) {
                S ir = 1.0 - 2.0 * exp(-p.ti / t1);
                if (p.ir_recovery_term) ir = ir + exp(-p.tr_ir / t1);
                if (p.ir_echo_weighting) ir = ir * exp(-p.te / t2);
                out[0] = ir;
                const S se = 1.0 - exp(-p.tr_se / t1);
                for (int k = 1; k <= p.n_echo; ++k) out[k] = se * exp(-(k * p.te) / t2);
            },
            [&](const seq::Despot &p) {
                std::size_t i = 0;
                if (!p.alpha_spgr.empty()) {
                    const S e1 = exp(-p.tr_spgr / t1);
                    for (double deg : p.alpha_spgr) {
                        const double a = deg * kDegToRad;
                        out[i++] = std::sin(a) * (1.0 - e1) / (1.0 - e1 * std::cos(a));
                    }
                }
                const S e1 = exp(-p.tr_ssfp / t1);
                const S e2 = exp(-p.tr_ssfp / t2);
                for (double deg : p.alpha_ssfp) {
                    const double a = deg * kDegToRad;
                    out[i++] = std::sin(a) * (1.0 - e1) / (1.0 - e1 * e2 - (e1 - e2) * std::cos(a));
                }
            },
        },
        v);
}

std::string format_list(const std::vector<double> &xs) {
    char buf[64];
    std::string out = "[";
    const bool uniform = xs.size() >= 3 && [&] {
        const double step = xs[1] - xs[0];
        for (std::size_t i = 2; i < xs.size(); ++i)
            if (std::abs((xs[i] - xs[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step))) return false;
        return true;
    }();
    if (uniform) {
        std::snprintf(buf, sizeof buf, "%.10g:%.10g:%.10g", xs.front(), xs[1] - xs[0], xs.back());
        out += buf;
    } else {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::snprintf(buf, sizeof buf, i ? ", %.10g" : "%.10g", xs[i]);
            out += buf;
        }
    }
    return out + "]";
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

} // namespace

void TissueParams::validate() const {
    if (!(std::isfinite(m0) && m0 > 0.0) || !(std::isfinite(t1) && t1 > 0.0) ||
        !(std::isfinite(t2) && t2 > 0.0))
        throw Error(ErrorCode::InvalidTissue, "tissue parameters must be finite and > 0");
}

std::string_view family_name(Family f) {
    switch (f) {
    case Family::CIR: return "CIR";
    case Family::SR: return "SR";
    case Family::FIR1: return "FIR1";
    case Family::FIR2: return "FIR2";
    case Family::LL: return "LL";
    case Family::SEIR: return "SEIR";
    case Family::DESPOT: return "DESPOT";
    }
    return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
    for (Family f : {Family::CIR, Family::SR, Family::FIR1, Family::FIR2, Family::LL, Family::SEIR,
                     Family::DESPOT})
        if (family_name(f) == name) return f;
    return std::nullopt;
}

bool is_joint(Family f) { return f == Family::SEIR || f == Family::DESPOT; }

SequenceProtocol::SequenceProtocol(Variant v) : v_(std::move(v)) { validate(v_); }

Family SequenceProtocol::family() const {
    return std::visit(overloaded{
                          [](const seq::Cir &) { return Family::CIR; },
                          [](const seq::Sr &) { return Family::SR; },
                          [](const seq::Fir1 &) { return Family::FIR1; },
                          [](const seq::Fir2 &) { return Family::FIR2; },
                          [](const seq::LookLocker &) { return Family::LL; },
                          [](const seq::Seir &) { return Family::SEIR; },
                          [](const seq::Despot &) { return Family::DESPOT; },
                      },
                      v_);
}

std::size_t SequenceProtocol::size() const {
    return std::visit(overloaded{
                          [](const seq::LookLocker &p) { return p.t.size(); },
                          [](const seq::Seir &p) { return 1 + static_cast<std::size_t>(p.n_echo); },
                          [](const seq::Despot &p) { return p.alpha_spgr.size() + p.alpha_ssfp.size(); },
                          [](const auto &p) { return p.ti.size(); },
                      },
                      v_);
}

std::string SequenceProtocol::describe() const {
    return std::visit(
        overloaded{
            [](const seq::Cir &p) { return "TI=" + format_list(p.ti) + " W=" + fmt(p.w); },
            [](const seq::Sr &p) { return "TI=" + format_list(p.ti); },
            [](const seq::Fir1 &p) { return "TI=" + format_list(p.ti) + " W=" + fmt(p.w); },
            [](const seq::Fir2 &p) { return "TI=" + format_list(p.ti) + " TR=" + fmt(p.tr); },
            [](const seq::LookLocker &p) {
                return "alpha=" + fmt(p.alpha) + " t=" + format_list(p.t) + " TR=" + fmt(p.tr);
            },
            [](const seq::Seir &p) {
                return "TR_IR=" + fmt(p.tr_ir) + " TI=" + fmt(p.ti) + " TR_SE=" + fmt(p.tr_se) +
                       " TE=" + fmt(p.te) + " n_echo=" + std::to_string(p.n_echo);
            },
            [](const seq::Despot &p) {
                return "alpha_spgr=" + format_list(p.alpha_spgr) + " TR_SPGR=" + fmt(p.tr_spgr) +
                       " alpha_ssfp=" + format_list(p.alpha_ssfp) + " TR_SSFP=" + fmt(p.tr_ssfp);
            },
        },
        v_);
}

WeightingVector weighting_vector(const SequenceProtocol &p, const TissueParams &tissue) {
    tissue.validate();
    const std::size_t n = p.size();
    std::vector<Dual> out(n);
    model<Dual>(p.variant(), Dual(tissue.t1, 1.0, 0.0), Dual(tissue.t2, 0.0, 1.0), out);

    WeightingVector w;
    w.h.resize(static_cast<Eigen::Index>(n));
    w.dh_dt1.resize(static_cast<Eigen::Index>(n));
    if (p.joint()) w.dh_dt2 = Eigen::VectorXd(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (!std::isfinite(out[i].v) || !std::isfinite(out[i].d1) || !std::isfinite(out[i].d2))
            throw Error(ErrorCode::NonFiniteModel, "non-finite signal model value for " + p.describe());
        w.h[k] = out[i].v;
        w.dh_dt1[k] = out[i].d1;
        if (w.dh_dt2) (*w.dh_dt2)[k] = out[i].d2;
    }
    return w;
}

void signal_weights(const SequenceProtocol &p, double t1, double t2, std::span<double> out) {
    model<double>(p.variant(), t1, t2, out.first(p.size()));
}

Eigen::VectorXd sensitivity_numeric(const SequenceProtocol &p, const TissueParams &tissue, Relaxation which,
                                    double step) {
    tissue.validate();
    if (!(step >= 1e-7 && step <= 1e-2))
        throw Error(ErrorCode::InvalidArgument, "finite-difference step must lie in [1e-7, 1e-2]");
    const double base = which == Relaxation::T1 ? tissue.t1 : tissue.t2;
    const double dt = step * base;
    if (dt < 1e-9) throw Error(ErrorCode::DegenerateStep, "finite-difference step below 1e-9 ms");

    const std::size_t n = p.size();
    std::vector<double> hi(n), lo(n);
    if (which == Relaxation::T1) {
        signal_weights(p, tissue.t1 + dt, tissue.t2, hi);
        signal_weights(p, tissue.t1 - dt, tissue.t2, lo);
    } else {
        signal_weights(p, tissue.t1, tissue.t2 + dt, hi);
        signal_weights(p, tissue.t1, tissue.t2 - dt, lo);
    }
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) d[static_cast<Eigen::Index>(i)] = (hi[i] - lo[i]) / (2.0 * dt);
    return d;
}

double sequence_time(const SequenceProtocol &p) {
    auto sum = [](const std::vector<double> &xs) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    };
    return std::visit(
        overloaded{
            [&](const seq::Cir &s) { return sum(s.ti) + s.w * static_cast<double>(s.ti.size()); },
            [&](const seq::Sr &s) { return sum(s.ti); },
            [&](const seq::Fir1 &s) { return sum(s.ti) + s.w * static_cast<double>(s.ti.size()); },
            [&](const seq::Fir2 &s) { return s.tr * static_cast<double>(s.ti.size()); },
            [&](const seq::LookLocker &s) { return s.tr; },
            [&](const seq::Seir &s) {
                return s.timing == seq::SeirTiming::BlocksPlusTi ? s.tr_ir + s.ti + s.tr_se : s.tr_ir + s.tr_se;
            },
            [&](const seq::Despot &s) {
                return s.tr_spgr * static_cast<double>(s.alpha_spgr.size()) +
                       s.tr_ssfp * static_cast<double>(s.alpha_ssfp.size());
            },
        },
        p.variant());
}

std::vector<double> colon_range(double start, double step, double end) {
    if (!std::isfinite(start) || !std::isfinite(step) || !std::isfinite(end) || step <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "colon range needs a finite positive step");
    std::vector<double> out;
    const double n = std::floor((end - start) / step + 1e-9);
    for (long k = 0; k <= static_cast<long>(n); ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
}

} // namespace relaxcrb
