#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 == 0) ++n;
    const double h = (b - a) / (n - 1);
    double acc = f(a) + f(b);
    for (int i = 1; i < n - 1; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double harmonic_mean(const std::function<double(double)>& a) {
    return 1.0 / simpson([&](double y) { return 1.0 / a(y); }, 0.0, 1.0);
}

double a_cos(double y) { return 2.0 + std::cos(kTwoPi * y); }
double a_sin(double y) { return 2.0 + std::sin(kTwoPi * y); }
double a_cc_pos(double y) { return std::min(std::min(a_cos(y), a_sin(y)), 4.0); }

Model1D::Model1D(double eps, int quad_pts) : eps_(eps), n_(quad_pts) {
    cum1_.assign(static_cast<size_t>(n_), 0.0);
    cum2_.assign(static_cast<size_t>(n_), 0.0);
    const double h = 1.0 / (n_ - 1);
    auto ia = [&](double x) { return 1.0 / a_cos(x / eps_); };
    for (int i = 1; i < n_; ++i) {
        const double x0 = (i - 1) * h, x1 = i * h;
        cum1_[static_cast<size_t>(i)] =
            cum1_[static_cast<size_t>(i - 1)] +
            (ia(x0) + 4.0 * ia(0.5 * (x0 + x1)) + ia(x1)) * h / 6.0;
        cum2_[static_cast<size_t>(i)] =
            cum2_[static_cast<size_t>(i - 1)] +
            (cum1_[static_cast<size_t>(i - 1)] + cum1_[static_cast<size_t>(i)]) * 0.5 * h;
    }
    slope_ = -cum2_.back();
}

double Model1D::grid_value(double x) const {
    const double t = std::clamp(x, 0.0, 1.0) * (n_ - 1);
    const int i = std::min(static_cast<int>(t), n_ - 2);
    const double s = t - i;
    return cum2_[static_cast<size_t>(i)] * (1.0 - s) + cum2_[static_cast<size_t>(i + 1)] * s;
}

double Model1D::value(double x) const { return grid_value(x) + slope_ * x; }

double Model1D::second_derivative(double x) const { return 1.0 / a_cos(x / eps_); }

double Model1D::sup_abs_error_vs(const std::function<double(double)>& other, int probes) const {
    double sup = 0.0;
    for (int i = 0; i <= probes; ++i) {
        const double x = double(i) / probes;
        sup = std::max(sup, std::abs(value(x) - other(x)));
    }
    return sup;
}

double ubar_model(double x) { return (x * x - x) / (2.0 * std::sqrt(3.0)); }

CorrectorCos1D::CorrectorCos1D(int pts) {
    const double sqrt3 = std::sqrt(3.0);
    const double h = 1.0 / pts;
    std::vector<double> wp(static_cast<size_t>(pts) + 1, 0.0);
    auto wpp = [&](double y) { return sqrt3 / a_cos(y) - 1.0; };
    for (int i = 1; i <= pts; ++i) {
        const double y0 = (i - 1) * h, y1 = i * h;
        wp[static_cast<size_t>(i)] = wp[static_cast<size_t>(i - 1)] +
                                     (wpp(y0) + 4.0 * wpp(0.5 * (y0 + y1)) + wpp(y1)) * h / 6.0;
    }
    // remove the mean of w' so that w is periodic
    double mean = 0.0;
    for (int i = 0; i < pts; ++i) mean += 0.5 * (wp[static_cast<size_t>(i)] + wp[static_cast<size_t>(i + 1)]) * h;
    for (auto& v : wp) v -= mean;
    w_.assign(static_cast<size_t>(pts) + 1, 0.0);
    for (int i = 1; i <= pts; ++i)
        w_[static_cast<size_t>(i)] = w_[static_cast<size_t>(i - 1)] +
                                     0.5 * (wp[static_cast<size_t>(i - 1)] + wp[static_cast<size_t>(i)]) * h;
    for (double v : w_) sup_ = std::max(sup_, std::abs(v));
}

double CorrectorCos1D::value(double y) const {
    double t = std::fmod(y, 1.0);
    if (t < 0) t += 1.0;
    const int pts = static_cast<int>(w_.size()) - 1;
    const double s = t * pts;
    const int i = std::min(static_cast<int>(s), pts - 1);
    return w_[static_cast<size_t>(i)] * (1.0 - (s - i)) + w_[static_cast<size_t>(i + 1)] * (s - i);
}

double CorrectorCos1D::sup_abs() const { return sup_; }

namespace {

double pucci_brute(bool plus, double lam, double Lam, double m11, double m22, double m12,
                   int angles) {
    double best = plus ? -1e300 : 1e300;
    for (int ia = 0; ia < angles; ++ia) {
        const double th = M_PI * ia / angles;
        const double c = std::cos(th), s = std::sin(th);
        for (double e1 : {lam, Lam})
            for (double e2 : {lam, Lam}) {
                const double a11 = e1 * c * c + e2 * s * s;
                const double a22 = e1 * s * s + e2 * c * c;
                const double a12 = (e1 - e2) * c * s;
                const double v = a11 * m11 + a22 * m22 + 2.0 * a12 * m12;
                best = plus ? std::max(best, v) : std::min(best, v);
            }
    }
    return best;
}

}  // namespace

double pucci_minus_brute(double lam, double Lam, double m11, double m22, double m12, int angles) {
    return pucci_brute(false, lam, Lam, m11, m22, m12, angles);
}

double pucci_plus_brute(double lam, double Lam, double m11, double m22, double m12, int angles) {
    return pucci_brute(true, lam, Lam, m11, m22, m12, angles);
}

}  // namespace oracle
