#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "nonlocal/scenarios.hpp"

namespace nonlocal {

// ---------------------------------------------------------------------------
// Structured-text configuration: "[section]" headers, "key = value" lines,
// '#' comments. Keys are addressed as "section.key". Precedence is
// flag overrides > file values > built-in defaults.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t nxt = s.find(sep, pos);
        if (nxt == std::string::npos) {
            out.push_back(trim(s.substr(pos)));
            break;
        }
        out.push_back(trim(s.substr(pos, nxt - pos)));
        pos = nxt + 1;
    }
    return out;
}

}  // namespace detail

class ConfigMap {
  public:
    static ConfigMap from_text(const std::string& text) {
        ConfigMap cfg;
        std::string section;
        std::size_t pos = 0;
        int lineno = 0;
        while (pos <= text.size()) {
            std::size_t nl = text.find('\n', pos);
            std::string line =
                text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
            pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                require(line.back() == ']',
                        "config line " + std::to_string(lineno) + ": unterminated section");
                section = detail::trim(line.substr(1, line.size() - 2));
                require(!section.empty(),
                        "config line " + std::to_string(lineno) + ": empty section name");
                continue;
            }
            std::size_t eq = line.find('=');
            require(eq != std::string::npos,
                    "config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = detail::trim(line.substr(0, eq));
            std::string val = detail::trim(line.substr(eq + 1));
            require(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
            require(!section.empty(),
                    "config line " + std::to_string(lineno) + ": key outside any [section]");
            cfg.data_[section + "." + key] = val;
        }
        return cfg;
    }

    static ConfigMap from_file(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_text(ss.str());
    }

    // Flag override "section.key=value"; wins over the file.
    void override_kv(const std::string& assignment) {
        std::size_t eq = assignment.find('=');
        require(eq != std::string::npos, "override must look like section.key=value: " + assignment);
        std::string key = detail::trim(assignment.substr(0, eq));
        require(key.find('.') != std::string::npos,
                "override key must be section-qualified: " + key);
        data_[key] = detail::trim(assignment.substr(eq + 1));
    }

    bool has(const std::string& key) const { return data_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = data_.find(key);
        const std::string v = it == data_.end() ? fallback : it->second;
        effective_[key] = v;
        return v;
    }

    std::string str_required(const std::string& key) const {
        auto it = data_.find(key);
        require(it != data_.end(), "missing required config key: " + key);
        effective_[key] = it->second;
        return it->second;
    }

    double num(const std::string& key, double fallback) const {
        auto it = data_.find(key);
        if (it == data_.end()) {
            effective_[key] = format_full(fallback);
            return fallback;
        }
        effective_[key] = it->second;
        return parse_num(key, it->second);
    }

    int integer(const std::string& key, int fallback) const {
        const double v = num(key, static_cast<double>(fallback));
        const int n = static_cast<int>(std::llround(v));
        require(std::abs(v - n) < 1e-12, "config key " + key + " must be an integer");
        return n;
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
        auto it = data_.find(key);
        if (it == data_.end()) {
            effective_[key] = std::to_string(fallback);
            return fallback;
        }
        effective_[key] = it->second;
        try {
            std::size_t used = 0;
            std::uint64_t v = std::stoull(it->second, &used);
            require(used == it->second.size(), "trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ValidationError("config key " + key + " is not an unsigned integer: " +
                                  it->second);
        }
    }

    bool flag(const std::string& key, bool fallback) const {
        auto it = data_.find(key);
        if (it == data_.end()) {
            effective_[key] = fallback ? "true" : "false";
            return fallback;
        }
        effective_[key] = it->second;
        if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
        if (it->second == "false" || it->second == "0" || it->second == "no") return false;
        throw ValidationError("config key " + key + " is not a boolean: " + it->second);
    }

    std::vector<double> num_list(const std::string& key, const std::vector<double>& fallback) const {
        auto it = data_.find(key);
        if (it == data_.end()) {
            std::string joined;
            for (std::size_t i = 0; i < fallback.size(); ++i)
                joined += (i ? "," : "") + format_full(fallback[i]);
            effective_[key] = joined;
            return fallback;
        }
        effective_[key] = it->second;
        std::vector<double> out;
        for (const auto& piece : detail::split(it->second, ','))
            if (!piece.empty()) out.push_back(parse_num(key, piece));
        require(!out.empty(), "config key " + key + " is an empty list");
        return out;
    }

    VectorXd vec(const std::string& key, const VectorXd& fallback) const {
        std::vector<double> def(fallback.data(), fallback.data() + fallback.size());
        std::vector<double> v = num_list(key, def);
        VectorXd out(static_cast<int>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
        return out;
    }

    // Keys present in the file/flags but never consumed by any getter.
    std::vector<std::string> unknown_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : data_)
            if (!effective_.count(k)) out.push_back(k);
        return out;
    }

    bool section_present(const std::string& section) const {
        const std::string prefix = section + ".";
        auto it = data_.lower_bound(prefix);
        return it != data_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
    }

    // Fully resolved key = value lines (defaults included), sorted.
    std::vector<std::string> echo() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : effective_) out.push_back(k + " = " + v);
        return out;
    }

  private:
    static double parse_num(const std::string& key, const std::string& text) {
        try {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            require(used == text.size(), "trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ValidationError("config key " + key + " is not a number: " + text);
        }
    }

    std::map<std::string, std::string> data_;
    mutable std::map<std::string, std::string> effective_;
};

// ---------------------------------------------------------------------------
// Monomial-sum expressions over x, y, z: "1 + 0.5*y + 0.3*x*y - 2*x^2".
// No parentheses; each term is a product of a coefficient and variable powers.

inline std::vector<MonomialTerm> parse_monomial_sum(const std::string& text, int dim) {
    require(dim >= 1 && dim <= 3, "expressions support 1 to 3 variables");
    std::vector<MonomialTerm> terms;
    std::size_t pos = 0;
    const auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    skip_ws();
    require(pos < text.size(), "empty expression");
    double sign = 1.0;
    if (text[pos] == '+' || text[pos] == '-') {
        sign = text[pos] == '-' ? -1.0 : 1.0;
        ++pos;
    }
    while (pos < text.size()) {
        MonomialTerm t;
        t.coef = sign;
        t.exponents.assign(dim, 0);
        bool saw_factor = false;
        while (true) {
            skip_ws();
            if (pos >= text.size()) break;
            char c = text[pos];
            if (c == '+' || c == '-') break;
            if (c == '*') {
                require(saw_factor, "expression: '*' without a left factor");
                ++pos;
                skip_ws();
                require(pos < text.size(), "expression: dangling '*'");
                c = text[pos];
            } else if (saw_factor) {
                throw ValidationError("expression: factors must be joined with '*'");
            }
            if (c == 'x' || c == 'y' || c == 'z') {
                const int axis = c - 'x';
                require(axis < dim, std::string("expression uses variable '") + c +
                                        "' beyond the ambient dimension");
                ++pos;
                int e = 1;
                skip_ws();
                if (pos < text.size() && text[pos] == '^') {
                    ++pos;
                    skip_ws();
                    std::size_t used = 0;
                    require(pos < text.size(), "expression: dangling '^'");
                    try {
                        e = std::stoi(text.substr(pos), &used);
                    } catch (const std::exception&) {
                        throw ValidationError("expression: bad exponent");
                    }
                    require(e >= 0, "expression: exponents must be nonnegative");
                    pos += used;
                }
                t.exponents[axis] += e;
            } else {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(text.substr(pos), &used);
                } catch (const std::exception&) {
                    throw ValidationError("expression: expected a number or variable at '" +
                                          text.substr(pos) + "'");
                }
                t.coef *= v;
                pos += used;
            }
            saw_factor = true;
        }
        require(saw_factor, "expression: empty term");
        terms.push_back(std::move(t));
        skip_ws();
        if (pos >= text.size()) break;
        sign = text[pos] == '-' ? -1.0 : 1.0;
        require(text[pos] == '+' || text[pos] == '-', "expression: expected '+' or '-'");
        ++pos;
        skip_ws();
        require(pos < text.size(), "expression: trailing operator");
    }
    return terms;
}

inline double monomial_eval(const std::vector<MonomialTerm>& terms, const VectorXd& x) {
    double s = 0.0;
    for (const auto& t : terms) {
        double m = t.coef;
        for (std::size_t j = 0; j < t.exponents.size(); ++j)
            for (int e = 0; e < t.exponents[j]; ++e) m *= x[static_cast<int>(j)];
        s += m;
    }
    return s;
}

inline VectorXd monomial_gradient(const std::vector<MonomialTerm>& terms, const VectorXd& x) {
    const int dim = static_cast<int>(x.size());
    VectorXd g = VectorXd::Zero(dim);
    for (const auto& t : terms)
        for (int a = 0; a < dim; ++a) {
            if (t.exponents[a] == 0) continue;
            double m = t.coef * t.exponents[a];
            for (int j = 0; j < dim; ++j) {
                const int e = t.exponents[j] - (j == a ? 1 : 0);
                for (int k = 0; k < e; ++k) m *= x[j];
            }
            g[a] += m;
        }
    return g;
}

// ---------------------------------------------------------------------------
// Descriptor resolution.

inline QuadratureDomain build_shape(const std::string& shape, const ConfigMap& cfg, int res) {
    if (shape == "interval") {
        const double a = cfg.num("domain.a", 0.0), b = cfg.num("domain.b", 1.0);
        return interval_domain(a, b, res);
    }
    if (shape == "square") return square_domain(cfg.num("domain.side", 1.0), res);
    if (shape == "disk") return disk_domain(cfg.num("domain.radius", 1.0), res);
    if (shape == "annulus")
        return annulus_domain(cfg.num("domain.radius", 1.0), cfg.num("domain.inner_radius", 0.35),
                              res);
    if (shape == "radial-disk") return radial_disk_domain(cfg.num("domain.radius", 1.0), res);
    if (shape == "sphere") return sphere_domain(cfg.num("domain.radius", 1.0), res);
    if (shape == "hemisphere") return hemisphere_domain(cfg.num("domain.radius", 1.0), res);
    if (shape == "segment-slice")
        return segment_slice_domain(cfg.num("domain.a", 0.0), cfg.num("domain.b", 1.0),
                                    cfg.num("domain.height", 0.5), res);
    throw ValidationError("unknown domain shape: " + shape);
}

// Image of the shape under x -> c x, rebuilt through the same constructor so
// node layouts correspond one to one.
inline QuadratureDomain build_scaled_shape(const std::string& shape, const ConfigMap& cfg, int res,
                                           double c) {
    if (shape == "interval")
        return interval_domain(c * cfg.num("domain.a", 0.0), c * cfg.num("domain.b", 1.0), res);
    if (shape == "square") return square_domain(c * cfg.num("domain.side", 1.0), res);
    if (shape == "disk") return disk_domain(c * cfg.num("domain.radius", 1.0), res);
    if (shape == "annulus")
        return annulus_domain(c * cfg.num("domain.radius", 1.0),
                              c * cfg.num("domain.inner_radius", 0.35), res);
    if (shape == "radial-disk") return radial_disk_domain(c * cfg.num("domain.radius", 1.0), res);
    throw ValidationError("pullback scaling is not defined for shape: " + shape);
}

inline KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "tent") return KernelFamily::tent;
    if (name == "truncated-gaussian") return KernelFamily::truncated_gaussian;
    if (name == "mollified-indicator") return KernelFamily::mollified_indicator;
    throw ValidationError("unknown kernel family: " + name);
}

inline CoefficientSpec build_coefficient_spec(const ConfigMap& cfg, int ambient_dim, int res) {
    const std::string rule = cfg.str("coefficient.rule", "dirichlet");
    CoefficientSpec spec;
    if (rule == "dirichlet") {
        spec.rule = CoefficientRule::dirichlet;
    } else if (rule == "neumann") {
        spec.rule = CoefficientRule::neumann;
    } else if (rule == "ambient") {
        spec.rule = CoefficientRule::ambient;
        const std::string expr = cfg.str_required("coefficient.ambient");
        auto terms = parse_monomial_sum(expr, ambient_dim);
        spec.ambient.value = [terms](const VectorXd& x) { return monomial_eval(terms, x); };
        spec.ambient.gradient = [terms](const VectorXd& x) {
            return monomial_gradient(terms, x);
        };
    } else if (rule == "hole") {
        spec.rule = CoefficientRule::hole;
        require(ambient_dim == 2, "hole coefficients are built for planar domains");
        const double hr = cfg.num("coefficient.hole_radius", 0.35);
        require(hr > 0.0, "coefficient.hole_radius must be positive");
        const int fallback = std::max(8, static_cast<int>(std::lround(2.0 * hr * res)));
        const int rings = cfg.integer("coefficient.hole_rings", fallback);
        require(rings >= 1, "coefficient.hole_rings must be at least 1");
        QuadratureDomain hole = radial_disk_domain(hr, rings);
        const VectorXd center = cfg.vec("coefficient.hole_center", VectorXd::Zero(2));
        require(center.size() == 2, "coefficient.hole_center needs two components");
        if (center.norm() > 0.0) {
            hole.nodes.rowwise() += center.transpose();
            hole.boundary_nodes.rowwise() += center.transpose();
            hole.descriptor += "+shift";
        }
        spec.hole = std::make_shared<QuadratureDomain>(std::move(hole));
    } else {
        throw ValidationError("unknown coefficient rule: " + rule);
    }
    return spec;
}

inline VectorField build_field(const ConfigMap& cfg, const std::string& name, int dim) {
    if (name == "dilation") return dilation_field(dim);
    if (name == "translation") {
        VectorXd dir = cfg.vec("field.direction", VectorXd::Unit(dim, 0));
        require(dir.size() == dim, "field.direction dimension mismatch");
        return translation_field(dir);
    }
    if (name == "normal-bump") {
        VectorXd center = cfg.vec("field.center", VectorXd::Zero(dim));
        require(center.size() == dim, "field.center dimension mismatch");
        const double width = cfg.num("field.width", 0.5);
        require(width > 0.0, "field.width must be positive");
        return normal_bump_field(center, width, dim);
    }
    if (name == "rotation-z") {
        require(dim >= 2, "rotation-z needs at least two dimensions");
        return detail::rotation_about_z();
    }
    if (name == "polynomial") {
        std::vector<std::vector<MonomialTerm>> comps(dim);
        const char* axes[] = {"x", "y", "z"};
        bool any = false;
        for (int a = 0; a < dim; ++a) {
            const std::string key = std::string("field.") + axes[a];
            if (!cfg.has(key)) continue;
            comps[a] = parse_monomial_sum(cfg.str_required(key), dim);
            any = true;
        }
        require(any, "polynomial field needs at least one of field.x / field.y / field.z");
        VectorField f = polynomial_field(comps);
        // exact jacobian from the monomial terms
        f.jacobian = [comps, dim](const VectorXd& x) {
            MatrixXd Jm = MatrixXd::Zero(dim, dim);
            for (int a = 0; a < dim; ++a)
                if (!comps[a].empty()) Jm.row(a) = monomial_gradient(comps[a], x).transpose();
            return Jm;
        };
        return f;
    }
    throw ValidationError("unknown vector field: " + name);
}

}  // namespace nonlocal
