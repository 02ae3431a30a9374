#pragma once

#include "nonlocal/common.hpp"

namespace nonlocal {

enum class KernelFamily { tent, truncated_gaussian, mollified_indicator };

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::tent: return "tent";
        case KernelFamily::truncated_gaussian: return "truncated-gaussian";
        case KernelFamily::mollified_indicator: return "mollified-indicator";
    }
    return "?";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "tent") return KernelFamily::tent;
    if (s == "truncated-gaussian" || s == "gaussian") return KernelFamily::truncated_gaussian;
    if (s == "mollified-indicator" || s == "mollified") return KernelFamily::mollified_indicator;
    throw ValidationError("unknown kernel family: " + s);
}

namespace detail {

// sigma(q) = exp(-1/q) for q > 0, 0 otherwise; C-infinity on R.
inline double bump_half(double q) { return q > 0.0 ? std::exp(-1.0 / q) : 0.0; }

inline double bump_half_deriv(double q) {
    return q > 0.0 ? std::exp(-1.0 / q) / (q * q) : 0.0;
}

// Smoothstep S: R -> [0,1], S = 0 for q <= 0, S = 1 for q >= 1, C-infinity.
inline double smoothstep(double q) {
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    const double a = bump_half(q), b = bump_half(1.0 - q);
    return a / (a + b);
}

inline double smoothstep_deriv(double q) {
    if (q <= 0.0 || q >= 1.0) return 0.0;
    const double a = bump_half(q), b = bump_half(1.0 - q);
    const double ap = bump_half_deriv(q), bp = -bump_half_deriv(1.0 - q);
    const double s = a + b;
    return (ap * s - a * (ap + bp)) / (s * s);
}

}  // namespace detail

// Radial convolution kernel J(r) = c * profile(r), supported in [0, delta),
// normalized so that the integral of J(|z|) over R^n equals 1.
class Kernel {
  public:
    Kernel() = default;
    Kernel(KernelFamily family, double delta, int dim, double width)
        : family_(family), delta_(delta), dim_(dim), width_(width) {
        require(delta_ > 0.0, "kernel: interaction radius must be positive");
        require(dim_ >= 1, "kernel: ambient dimension must be >= 1");
        if (family_ == KernelFamily::truncated_gaussian && width_ <= 0.0) width_ = delta_ / 3.0;
        if (family_ == KernelFamily::mollified_indicator && width_ <= 0.0) width_ = delta_ / 20.0;
        if (family_ == KernelFamily::mollified_indicator)
            require(width_ <= delta_, "kernel: mollification width must not exceed the radius");
        normalize();
    }

    KernelFamily family() const { return family_; }
    double delta() const { return delta_; }
    int dim() const { return dim_; }
    double width() const { return width_; }
    double normalization() const { return c_; }

    double profile(double r) const {
        if (r >= delta_ || r < 0.0) return 0.0;
        switch (family_) {
            case KernelFamily::tent:
                return 1.0 - r / delta_;
            case KernelFamily::truncated_gaussian:
                return std::exp(-0.5 * r * r / (width_ * width_));
            case KernelFamily::mollified_indicator:
                return detail::smoothstep((delta_ - r) / width_);
        }
        return 0.0;
    }

    double profile_derivative(double r) const {
        if (r >= delta_ || r < 0.0) return 0.0;
        switch (family_) {
            case KernelFamily::tent:
                return -1.0 / delta_;
            case KernelFamily::truncated_gaussian:
                return -(r / (width_ * width_)) * std::exp(-0.5 * r * r / (width_ * width_));
            case KernelFamily::mollified_indicator:
                return -detail::smoothstep_deriv((delta_ - r) / width_) / width_;
        }
        return 0.0;
    }

    double operator()(double r) const { return c_ * profile(r); }

    // dJ/dr; one-sided (zero) outside the support.
    double radial_derivative(double r) const { return c_ * profile_derivative(r); }

    std::string describe() const {
        std::ostringstream os;
        os << to_string(family_) << "(delta=" << delta_ << ", dim=" << dim_;
        if (family_ != KernelFamily::tent) os << ", width=" << width_;
        os << ")";
        return os.str();
    }

  private:
    // Profile formula without the support cutoff; equals profile() on [0, delta)
    // and its left limit at delta (the truncated gaussian jumps there).
    double profile_formula(double r) const {
        switch (family_) {
            case KernelFamily::tent:
                return 1.0 - r / delta_;
            case KernelFamily::truncated_gaussian:
                return std::exp(-0.5 * r * r / (width_ * width_));
            case KernelFamily::mollified_indicator:
                return detail::smoothstep((delta_ - r) / width_);
        }
        return 0.0;
    }

    void normalize() {
        const double s = unit_sphere_area(dim_);
        const double mass = s * simpson([this](double r) {
            return profile_formula(r) * std::pow(r, dim_ - 1);
        }, 0.0, delta_, 8192);
        require(mass > 0.0, "kernel: degenerate profile");
        c_ = 1.0 / mass;
    }

    KernelFamily family_ = KernelFamily::tent;
    double delta_ = 1.0;
    int dim_ = 1;
    double width_ = 0.0;
    double c_ = 1.0;
};

// width <= 0 selects the family default (gaussian: delta/3, mollified: delta/20).
inline Kernel make_kernel(KernelFamily family, double delta, int dim, double width = 0.0) {
    return Kernel(family, delta, dim, width);
}

}  // namespace nonlocal
