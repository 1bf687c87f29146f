#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "optomag/errors.hpp"

namespace optomag {

struct Dop853Options {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 0.0;  // 0 selects an automatic first step
    double h_max = 0.0;   // 0 means unbounded
    long max_steps = 1000000;
    double safe = 0.9, fac1 = 0.333, fac2 = 6.0, beta = 0.0;
};

struct Dop853Stats {
    long accepted = 0;
    long rejected = 0;
    long rhs_calls = 0;
    double h_min = std::numeric_limits<double>::infinity();
    double h_max = 0.0;
    std::vector<double> steps;  // accepted step sizes in order
};

/// Dormand-Prince 8(5,3) integrator on Eigen dense types.
/// `Rhs` has signature void(double t, const State& y, State& dydt).
template <class State>
class Dop853 {
public:
    using Rhs = std::function<void(double, const State&, State&)>;
    using Observer = std::function<void(int index, double t, const State& y)>;

    Dop853(Rhs f, Dop853Options opt = {}) : f_(std::move(f)), opt_(opt) {}

    /// Adaptive integration from t0 hitting every checkpoint exactly (sorted, >= t0).
    Dop853Stats integrate(double t0, State& y, const std::vector<double>& checkpoints, const Observer& obs) {
        return run(t0, y, checkpoints, obs, nullptr);
    }

    /// Fixed-step replay of a recorded step sequence, with checkpoints at the same positions.
    Dop853Stats replay(double t0, State& y, const std::vector<double>& checkpoints, const std::vector<double>& steps,
                       const Observer& obs) {
        return run(t0, y, checkpoints, obs, &steps);
    }

private:
    Rhs f_;
    Dop853Options opt_;
    State k1_, k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_, ww_, ynew_;

    static double abs_max(const State& a, const State& b, int i) {
        return std::max(std::abs(a.data()[i]), std::abs(b.data()[i]));
    }

    void stages(double t, double h, const State& y) {
        constexpr double c2 = 0.526001519587677318785587544488E-01, c3 = 0.789002279381515978178381316732E-01,
                         c4 = 0.118350341907227396726757197510E+00, c5 = 0.281649658092772603273242802490E+00,
                         c6 = 0.333333333333333333333333333333E+00, c7 = 0.25E+00,
                         c8 = 0.307692307692307692307692307692E+00, c9 = 0.651282051282051282051282051282E+00,
                         c10 = 0.6E+00, c11 = 0.857142857142857142857142857142E+00;
        constexpr double b1 = 5.42937341165687622380535766363E-2, b6 = 4.45031289275240888144113950566E0,
                         b7 = 1.89151789931450038304281599044E0, b8 = -5.8012039600105847814672114227E0,
                         b9 = 3.1116436695781989440891606237E-1, b10 = -1.52160949662516078556178806805E-1,
                         b11 = 2.01365400804030348374776537501E-1, b12 = 4.47106157277725905176885569043E-2;
        constexpr double a21 = 5.26001519587677318785587544488E-2, a31 = 1.97250569845378994544595329183E-2,
                         a32 = 5.91751709536136983633785987549E-2, a41 = 2.95875854768068491816892993775E-2,
                         a43 = 8.87627564304205475450678981324E-2, a51 = 2.41365134159266685502369798665E-1,
                         a53 = -8.84549479328286085344864962717E-1, a54 = 9.24834003261792003115737966543E-1,
                         a61 = 3.7037037037037037037037037037E-2, a64 = 1.70828608729473871279604482173E-1,
                         a65 = 1.25467687566822425016691814123E-1, a71 = 3.7109375E-2,
                         a74 = 1.70252211019544039314978060272E-1, a75 = 6.02165389804559606850219397283E-2,
                         a76 = -1.7578125E-2, a81 = 3.70920001185047927108779319836E-2,
                         a84 = 1.70383925712239993810214054705E-1, a85 = 1.07262030446373284651809199168E-1,
                         a86 = -1.53194377486244017527936158236E-2, a87 = 8.27378916381402288758473766002E-3,
                         a91 = 6.24110958716075717114429577812E-1, a94 = -3.36089262944694129406857109825E0,
                         a95 = -8.68219346841726006818189891453E-1, a96 = 2.75920996994467083049415600797E1,
                         a97 = 2.01540675504778934086186788979E1, a98 = -4.34898841810699588477366255144E1,
                         a101 = 4.77662536438264365890433908527E-1, a104 = -2.48811461997166764192642586468E0,
                         a105 = -5.90290826836842996371446475743E-1, a106 = 2.12300514481811942347288949897E1,
                         a107 = 1.52792336328824235832596922938E1, a108 = -3.32882109689848629194453265587E1,
                         a109 = -2.03312017085086261358222928593E-2, a111 = -9.3714243008598732571704021658E-1,
                         a114 = 5.18637242884406370830023853209E0, a115 = 1.09143734899672957818500254654E0,
                         a116 = -8.14978701074692612513997267357E0, a117 = -1.85200656599969598641566180701E1,
                         a118 = 2.27394870993505042818970056734E1, a119 = 2.49360555267965238987089396762E0,
                         a1110 = -3.0467644718982195003823669022E0, a121 = 2.27331014751653820792359768449E0,
                         a124 = -1.05344954667372501984066689879E1, a125 = -2.00087205822486249909675718444E0,
                         a126 = -1.79589318631187989172765950534E1, a127 = 2.79488845294199600508499808837E1,
                         a128 = -2.85899827713502369474065508674E0, a129 = -8.87285693353062954433549289258E0,
                         a1210 = 1.23605671757943030647266201528E1, a1211 = 6.43392746015763530355970484046E-1;
        ww_ = y + h * a21 * k1_;
        f_(t + c2 * h, ww_, k2_);
        ww_ = y + h * (a31 * k1_ + a32 * k2_);
        f_(t + c3 * h, ww_, k3_);
        ww_ = y + h * (a41 * k1_ + a43 * k3_);
        f_(t + c4 * h, ww_, k4_);
        ww_ = y + h * (a51 * k1_ + a53 * k3_ + a54 * k4_);
        f_(t + c5 * h, ww_, k5_);
        ww_ = y + h * (a61 * k1_ + a64 * k4_ + a65 * k5_);
        f_(t + c6 * h, ww_, k6_);
        ww_ = y + h * (a71 * k1_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
        f_(t + c7 * h, ww_, k7_);
        ww_ = y + h * (a81 * k1_ + a84 * k4_ + a85 * k5_ + a86 * k6_ + a87 * k7_);
        f_(t + c8 * h, ww_, k8_);
        ww_ = y + h * (a91 * k1_ + a94 * k4_ + a95 * k5_ + a96 * k6_ + a97 * k7_ + a98 * k8_);
        f_(t + c9 * h, ww_, k9_);
        ww_ = y + h * (a101 * k1_ + a104 * k4_ + a105 * k5_ + a106 * k6_ + a107 * k7_ + a108 * k8_ + a109 * k9_);
        f_(t + c10 * h, ww_, k10_);
        ww_ = y + h * (a111 * k1_ + a114 * k4_ + a115 * k5_ + a116 * k6_ + a117 * k7_ + a118 * k8_ + a119 * k9_ +
                       a1110 * k10_);
        f_(t + c11 * h, ww_, k2_);
        ww_ = y + h * (a121 * k1_ + a124 * k4_ + a125 * k5_ + a126 * k6_ + a127 * k7_ + a128 * k8_ + a129 * k9_ +
                       a1210 * k10_ + a1211 * k2_);
        f_(t + h, ww_, k3_);
        k4_ = b1 * k1_ + b6 * k6_ + b7 * k7_ + b8 * k8_ + b9 * k9_ + b10 * k10_ + b11 * k2_ + b12 * k3_;
        ynew_ = y + h * k4_;
    }

    double error_norm(double h, const State& y) const {
        constexpr double bhh1 = 0.244094488188976377952755905512E+00, bhh2 = 0.733846688281611857341361741547E+00,
                         bhh3 = 0.220588235294117647058823529412E-01, er1 = 0.1312004499419488073250102996E-01,
                         er6 = -0.1225156446376204440720569753E+01, er7 = -0.4957589496572501915214079952E+00,
                         er8 = 0.1664377182454986536961530415E+01, er9 = -0.3503288487499736816886487290E+00,
                         er10 = 0.3341791187130174790297318841E+00, er11 = 0.8192320648511571246570742613E-01,
                         er12 = -0.2235530786388629525884427845E-01;
        const Eigen::Index n = y.size();
        double err = 0.0, err2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sk = 1.0 / (opt_.atol + opt_.rtol * std::max(std::abs(y.data()[i]), std::abs(ynew_.data()[i])));
            const auto e3 = (k4_.data()[i] - bhh1 * k1_.data()[i] - bhh2 * k9_.data()[i] - bhh3 * k3_.data()[i]) * sk;
            const auto e5 = (er1 * k1_.data()[i] + er6 * k6_.data()[i] + er7 * k7_.data()[i] + er8 * k8_.data()[i] +
                             er9 * k9_.data()[i] + er10 * k10_.data()[i] + er11 * k2_.data()[i] + er12 * k3_.data()[i]) *
                            sk;
            err2 += std::norm(e3);
            err += std::norm(e5);
        }
        const double deno = err + 0.01 * err2;
        return std::abs(h) * err * std::sqrt(1.0 / (deno <= 0.0 ? double(n) : deno * double(n)));
    }

    double initial_step(double t, const State& y, double span) {
        // Hairer-Wanner starting step heuristic
        auto scaled_norm = [&](const State& v) {
            double s = 0;
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                const double sk = opt_.atol + opt_.rtol * std::abs(y.data()[i]);
                s += std::norm(v.data()[i]) / (sk * sk);
            }
            return std::sqrt(s / double(v.size()));
        };
        const double dnf = scaled_norm(k1_), dny = scaled_norm(y);
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
        h = std::min(h, span);
        ww_ = y + h * k1_;
        f_(t + h, ww_, k2_);
        State diff = (k2_ - k1_);
        const double der2 = scaled_norm(diff) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 1.0 / 8.0);
        return std::min({100 * std::abs(h), h1, span});
    }

    Dop853Stats run(double t0, State& y, const std::vector<double>& checkpoints, const Observer& obs,
                    const std::vector<double>* fixed) {
        Dop853Stats st;
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            if (checkpoints[i] < checkpoints[i - 1]) throw Error("checkpoints must be sorted");
        if (!checkpoints.empty() && checkpoints.front() < t0) throw Error("checkpoint before start time");
        k1_.resizeLike(y);
        double t = t0;
        std::size_t next = 0;
        while (next < checkpoints.size() && checkpoints[next] == t) obs(static_cast<int>(next++), t, y);
        if (next == checkpoints.size()) return st;
        const double t_end = checkpoints.back();
        f_(t, y, k1_);
        ++st.rhs_calls;
        if (fixed) {
            for (double h : *fixed) {
                if (next >= checkpoints.size()) break;
                stages(t, h, y);
                st.rhs_calls += 11;
                ++st.accepted;
                st.steps.push_back(h);
                st.h_min = std::min(st.h_min, h);
                st.h_max = std::max(st.h_max, h);
                y.swap(ynew_);
                t = (std::abs(t + h - checkpoints[next]) <= 1e-12 * std::abs(checkpoints[next])) ? checkpoints[next] : t + h;
                while (next < checkpoints.size() && checkpoints[next] <= t) obs(static_cast<int>(next++), t, y);
                if (next < checkpoints.size()) {
                    f_(t, y, k1_);
                    ++st.rhs_calls;
                }
            }
            if (next < checkpoints.size()) throw ConvergenceError("replayed step sequence ended before the last checkpoint");
            return st;
        }
        const double facc1 = 1.0 / opt_.fac1, facc2 = 1.0 / opt_.fac2, expo1 = 1.0 / 8.0 - opt_.beta * 0.2;
        const double hmax = opt_.h_max > 0 ? opt_.h_max : (t_end - t0);
        double h = opt_.h_init > 0 ? opt_.h_init : initial_step(t, y, hmax);
        if (opt_.h_init <= 0) st.rhs_calls += 1;
        double facold = 1e-4;
        bool reject = false;
        while (next < checkpoints.size()) {
            if (st.accepted + st.rejected > opt_.max_steps) throw ConvergenceError("integrator exceeded max_steps");
            const double target = checkpoints[next];
            if (0.1 * std::abs(h) <= std::abs(t) * 1e-16 || h < 1e-300) {
                throw ConvergenceError("integrator step size underflow at t = " + std::to_string(t));
            }
            bool hit = false;
            if (t + 1.01 * h >= target) {
                h = target - t;
                hit = true;
            }
            stages(t, h, y);
            st.rhs_calls += 11;
            const double err = error_norm(h, y);
            const double fac11 = std::pow(err, expo1);
            double fac = fac11 / std::pow(facold, opt_.beta);
            fac = std::max(facc2, std::min(facc1, fac / opt_.safe));
            double hnew = h / fac;
            if (err <= 1.0) {
                facold = std::max(err, 1e-4);
                ++st.accepted;
                st.steps.push_back(h);
                st.h_min = std::min(st.h_min, h);
                st.h_max = std::max(st.h_max, h);
                y.swap(ynew_);
                t = hit ? target : t + h;
                while (next < checkpoints.size() && checkpoints[next] <= t) obs(static_cast<int>(next++), t, y);
                if (next == checkpoints.size()) break;
                f_(t, y, k1_);
                ++st.rhs_calls;
                if (std::abs(hnew) > hmax) hnew = hmax;
                if (reject) hnew = std::min(std::abs(hnew), std::abs(h));
                reject = false;
            } else {
                hnew = h / std::min(facc1, fac11 / opt_.safe);
                reject = true;
                if (st.accepted >= 1) ++st.rejected;
            }
            h = hnew;
        }
        return st;
    }
};

}  // namespace optomag
