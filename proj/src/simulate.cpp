#include "ppsel/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "ppsel/error.hpp"

namespace ppsel {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(RngSpec spec) : engine_(splitmix64(splitmix64(spec.seed) ^ splitmix64(~spec.stream))) {}

double Rng::uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t Rng::poisson(double mean) {
    if (!(mean >= 0) || !std::isfinite(mean)) throw NumericRangeError("invalid Poisson mean");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }
    // Hormann's transformed rejection with squeeze (PTRS)
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = uniform() - 0.5;
        const double v = uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(k);
    }
}

IntensityTiles::IntensityTiles(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                               const Eigen::VectorXd& beta)
    : window_(window) {
    DesignMap map(spec, fields);
    if (static_cast<std::size_t>(beta.size()) != map.dimension())
        throw InputError("coefficient vector has the wrong length");
    for (const auto& f : fields)
        if (!f.covers(window)) throw InputError("raster '" + f.name() + "' does not cover the window");
    std::tie(xs_, ys_) = map.breakpoints(window);
    const std::size_t nx = xs_.size() - 1, ny = ys_.size() - 1;
    rho_.resize(nx * ny);
    std::vector<double> z(map.dimension());
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const Point mid{0.5 * (xs_[i] + xs_[i + 1]), 0.5 * (ys_[j] + ys_[j + 1])};
            map.raw_row(mid, z);
            const double eta = Eigen::Map<const Eigen::VectorXd>(z.data(), beta.size()).dot(beta);
            const double r = std::exp(eta);
            if (!std::isfinite(r)) throw NumericRangeError("intensity overflows on the window");
            rho_[j * nx + i] = r;
            max_ = std::max(max_, r);
            integral_ += r * (xs_[i + 1] - xs_[i]) * (ys_[j + 1] - ys_[j]);
        }
    }
}

double IntensityTiles::at(Point u) const {
    auto locate = [](const std::vector<double>& v, double t) {
        const auto it = std::upper_bound(v.begin() + 1, v.end() - 1, t);
        return static_cast<std::size_t>(it - v.begin()) - 1;
    };
    return tile(locate(xs_, u.x), locate(ys_, u.y));
}

double max_intensity(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                     const Eigen::VectorXd& beta) {
    return IntensityTiles(window, spec, fields, beta).max();
}

double integrate_intensity(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                           const Eigen::VectorXd& beta) {
    return IntensityTiles(window, spec, fields, beta).integral();
}

Eigen::VectorXd tune_intercept(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                               Eigen::VectorXd beta, double mu) {
    if (!spec.include_intercept) throw InputError("tuning the mean count needs an intercept");
    if (!(mu > 0)) throw InputError("target mean count must be positive");
    // The integral scales as exp(beta_0), so one correction lands on mu exactly.
    beta[0] = 0.0;
    const double base = integrate_intensity(window, spec, fields, beta);
    beta[0] = std::log(mu / base);
    return beta;
}

PointPattern sim_poisson(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                         const Eigen::VectorXd& beta, RngSpec spec_rng) {
    const IntensityTiles tiles(window, spec, fields, beta);
    Rng rng(spec_rng);
    const double rmax = tiles.max();
    const std::uint64_t n = rng.poisson(rmax * window.area());
    std::vector<Point> pts;
    for (std::uint64_t k = 0; k < n; ++k) {
        const Point u{rng.uniform(window.x_min(), window.x_max()),
                      rng.uniform(window.y_min(), window.y_max())};
        if (rng.uniform() * rmax < tiles.at(u)) pts.push_back(u);
    }
    return PointPattern(window, std::move(pts));
}

void ThomasParams::validate() const {
    if (!(kappa > 0) || !std::isfinite(kappa)) throw InputError("kappa must be positive");
    if (!(gamma_disp > 0) || !std::isfinite(gamma_disp))
        throw InputError("dispersal gamma must be positive");
}

PointPattern sim_thomas(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                        const Eigen::VectorXd& beta, const ThomasParams& params, RngSpec spec_rng) {
    params.validate();
    const IntensityTiles tiles(window, spec, fields, beta);
    Rng rng(spec_rng);
    const double rmax = tiles.max();
    const Window parents = window.dilated(4.0 * params.gamma_disp);
    const std::uint64_t n_par = rng.poisson(params.kappa * parents.area());
    const double per_parent = rmax / params.kappa;
    std::vector<Point> pts;
    for (std::uint64_t c = 0; c < n_par; ++c) {
        const Point centre{rng.uniform(parents.x_min(), parents.x_max()),
                           rng.uniform(parents.y_min(), parents.y_max())};
        const std::uint64_t n_off = rng.poisson(per_parent);
        for (std::uint64_t k = 0; k < n_off; ++k) {
            const double dx = params.gamma_disp * rng.normal();
            const double dy = params.gamma_disp * rng.normal();
            const double keep = rng.uniform();
            const Point u{centre.x + dx, centre.y + dy};
            if (!window.contains(u)) continue;
            if (keep * rmax < tiles.at(u)) pts.push_back(u);
        }
    }
    return PointPattern(window, std::move(pts));
}

} // namespace ppsel
