#pragma once

// The four benchmark models: spin-boson (ohmic bath), Tully single avoided
// crossing, the Ferretti-Lami-Villani conical-intersection model, and the
// seven-site FMO complex with per-site Debye baths. FMO and FLV numeric
// defaults are external data shipped as editable key=value model cards.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "model.hpp"

namespace qcldyn {

// ---------------------------------------------------------------------------
// Spin-boson
// ---------------------------------------------------------------------------

struct SpinBosonParams {
    double eps = 0.0;        // bias
    double omega = 0.4;      // tunneling matrix element
    double xi = 0.09;        // Kondo parameter
    double omega_c = 1.0;    // ohmic cutoff
    double omega_max = 3.0;  // discretization ceiling
    int n_bath = 100;
    double beta = 0.25;
    double mass = 1.0;

    void validate() const {
        if (xi < 0) throw ConfigError("spin_boson: xi must be >= 0");
        if (omega_c <= 0 || omega_max <= 0) throw ConfigError("spin_boson: cutoffs must be > 0");
        if (n_bath < 1) throw ConfigError("spin_boson: n_bath must be >= 1");
        if (beta <= 0) throw ConfigError("spin_boson: beta must be > 0");
    }
};

struct BathOscillator {
    double c = 0.0;
    double omega = 0.0;
    double mass = 1.0;
};

// Ohmic discretization: delta_w = w_c (1 - exp(-w_max/w_c)) / N, w_i = -w_c ln(1 - i dw/w_c),
// c_i = sqrt(xi dw M_i) w_i. The i = N frequency diverges as w_max -> inf; reject when the
// log leaves its domain.
inline std::vector<BathOscillator> discretize_ohmic(const SpinBosonParams& p) {
    p.validate();
    const double dw = p.omega_c * (1.0 - std::exp(-p.omega_max / p.omega_c)) / p.n_bath;
    std::vector<BathOscillator> out(p.n_bath);
    double prev = 0.0;
    for (int i = 1; i <= p.n_bath; ++i) {
        const double arg = 1.0 - i * dw / p.omega_c;
        if (!(arg > 0.0))
            throw NonPositiveFrequency(
                "ohmic discretization: log domain error at mode " + std::to_string(i) +
                " (omega_max too large relative to omega_c)");
        const double w = -p.omega_c * std::log(arg);
        if (!std::isfinite(w) || w <= prev)
            throw NonPositiveFrequency("ohmic discretization produced a non-increasing frequency");
        out[i - 1].omega = w;
        out[i - 1].mass = p.mass;
        out[i - 1].c = std::sqrt(p.xi * dw * p.mass) * w;
        prev = w;
    }
    return out;
}

inline DiabaticModel build_spin_boson(const SpinBosonParams& p) {
    const auto osc = discretize_ohmic(p);
    const int nb = p.n_bath;

    DiabaticModel m;
    m.name = "spin_boson";
    m.n_states = 2;
    m.n_bath = nb;
    m.beta = p.beta;
    m.masses = Vector::Constant(nb, p.mass);
    m.bath_modes.resize(nb);
    Vector c(nb), w2m(nb);
    for (int i = 0; i < nb; ++i) {
        m.bath_modes[i] = {osc[i].omega, osc[i].mass};
        c(i) = osc[i].c;
        w2m(i) = osc[i].mass * osc[i].omega * osc[i].omega;
    }

    const double eps = p.eps, omega = p.omega;
    m.h = [eps, omega, c](const Vector& R, Matrix& h) {
        const double z = eps - c.dot(R);
        h.resize(2, 2);
        h(0, 0) = z;
        h(1, 1) = -z;
        h(0, 1) = h(1, 0) = -omega;
    };
    m.dh_dR = [c, nb](const Vector&, std::vector<Matrix>& out) {
        if (static_cast<int>(out.size()) != nb) {
            out.assign(nb, Matrix::Zero(2, 2));
            for (int i = 0; i < nb; ++i) {
                out[i](0, 0) = -c(i);
                out[i](1, 1) = c(i);
            }
        }
    };
    m.dh_contract = [c](const Vector&, const Matrix& G, Vector& out) {
        out = c * (G(1, 1) - G(0, 0));
    };
    m.dh_trace = [nb](const Vector&, Vector& out) { out = Vector::Zero(nb); };
    m.v_bath = [w2m](const Vector& R) { return 0.5 * w2m.dot(R.cwiseProduct(R)); };
    m.f_bath = [w2m](const Vector& R, Vector& f) { f = -w2m.cwiseProduct(R); };
    return m;
}

// ---------------------------------------------------------------------------
// Tully single avoided crossing
// ---------------------------------------------------------------------------

struct TullyParams {
    double a = 0.01;
    double b = 1.6;
    double c = 0.005;
    double d = 1.0;
    double mass = 2000.0;

    void validate() const {
        if (a <= 0 || b <= 0 || c <= 0 || d <= 0)
            throw ConfigError("tully_sac: A, B, C, D must all be > 0");
    }
};

// h11 = A (1 - exp(-B|R|)) sgn(R), h22 = -h11, h12 = C exp(-D R^2).
inline DiabaticModel build_tully_sac(const TullyParams& p) {
    p.validate();
    DiabaticModel m;
    m.name = "tully_sac";
    m.n_states = 2;
    m.n_bath = 1;
    m.masses = Vector::Constant(1, p.mass);
    m.wavepacket.center = Vector::Constant(1, -10.0);
    m.wavepacket.momentum = Vector::Constant(1, 11.0);
    m.wavepacket.sigma_r = Vector::Constant(1, 1.0 / std::sqrt(2.0));

    const double A = p.a, B = p.b, C = p.c, D = p.d;
    m.h = [A, B, C, D](const Vector& R, Matrix& h) {
        const double x = R(0);
        const double diag = (x >= 0 ? 1.0 : -1.0) * A * (1.0 - std::exp(-B * std::abs(x)));
        h.resize(2, 2);
        h(0, 0) = diag;
        h(1, 1) = -diag;
        h(0, 1) = h(1, 0) = C * std::exp(-D * x * x);
    };
    m.dh_dR = [A, B, C, D](const Vector& R, std::vector<Matrix>& out) {
        const double x = R(0);
        if (out.size() != 1) out.assign(1, Matrix::Zero(2, 2));
        const double ddiag = A * B * std::exp(-B * std::abs(x));
        out[0](0, 0) = ddiag;
        out[0](1, 1) = -ddiag;
        out[0](0, 1) = out[0](1, 0) = -2.0 * D * x * C * std::exp(-D * x * x);
    };
    m.dh_contract = [A, B, C, D](const Vector& R, const Matrix& G, Vector& out) {
        const double x = R(0);
        const double ddiag = A * B * std::exp(-B * std::abs(x));
        const double doff = -2.0 * D * x * C * std::exp(-D * x * x);
        out.resize(1);
        out(0) = ddiag * (G(0, 0) - G(1, 1)) + doff * (G(0, 1) + G(1, 0));
    };
    m.dh_trace = [](const Vector&, Vector& out) { out = Vector::Zero(1); };
    m.v_bath = [](const Vector&) { return 0.0; };
    m.f_bath = [](const Vector&, Vector& f) { f = Vector::Zero(1); };
    return m;
}

// ---------------------------------------------------------------------------
// Ferretti-Lami-Villani conical intersection (X tuning, Y coupling)
// ---------------------------------------------------------------------------

struct FLVParams {
    double mass_x = 20000.0;
    double mass_y = 20000.0;
    double omega_x = 0.005;
    double omega_y = 0.005;
    double x1 = 4.0;
    double x2 = 3.0;
    double x3 = 3.0;
    double delta = 0.01;
    double gamma = 0.01;
    double alpha = 3.0;
    double beta_exp = 1.5;
    // Initial wavepacket defaults (external data, editable via the model card).
    double x0 = 2.0, y0 = 0.0, px0 = 0.0, py0 = 0.0;
    double sigma_x = 0.0, sigma_y = 0.0;  // 0 = ground-state width of the respective well

    void validate() const {
        if (mass_x <= 0 || mass_y <= 0 || omega_x <= 0 || omega_y <= 0)
            throw ConfigError("flv: masses and frequencies must be > 0");
        if (alpha <= 0 || beta_exp <= 0) throw ConfigError("flv: alpha, beta_exp must be > 0");
    }
};

inline DiabaticModel build_flv(const FLVParams& p) {
    p.validate();
    DiabaticModel m;
    m.name = "flv";
    m.n_states = 2;
    m.n_bath = 2;
    m.masses = Vector(2);
    m.masses << p.mass_x, p.mass_y;
    m.wavepacket.center = Vector(2);
    m.wavepacket.center << p.x0, p.y0;
    m.wavepacket.momentum = Vector(2);
    m.wavepacket.momentum << p.px0, p.py0;
    const double sx = p.sigma_x > 0 ? p.sigma_x : std::sqrt(0.5 / (p.mass_x * p.omega_x));
    const double sy = p.sigma_y > 0 ? p.sigma_y : std::sqrt(0.5 / (p.mass_y * p.omega_y));
    m.wavepacket.sigma_r = Vector(2);
    m.wavepacket.sigma_r << sx, sy;

    const double kx = p.mass_x * p.omega_x * p.omega_x;
    const double ky = p.mass_y * p.omega_y * p.omega_y;
    const double X1 = p.x1, X2 = p.x2, X3 = p.x3, delta = p.delta;
    const double g = p.gamma, al = p.alpha, be = p.beta_exp;

    m.h = [kx, X1, X2, X3, delta, g, al, be](const Vector& R, Matrix& h) {
        const double X = R(0), Y = R(1);
        h.resize(2, 2);
        h(0, 0) = 0.5 * kx * (X - X1) * (X - X1);
        h(1, 1) = 0.5 * kx * (X - X2) * (X - X2) + delta;
        h(0, 1) = h(1, 0) = g * Y * std::exp(-al * (X - X3) * (X - X3) - be * Y * Y);
    };
    m.dh_dR = [kx, X1, X2, X3, g, al, be](const Vector& R, std::vector<Matrix>& out) {
        const double X = R(0), Y = R(1);
        const double e = std::exp(-al * (X - X3) * (X - X3) - be * Y * Y);
        if (out.size() != 2) out.assign(2, Matrix::Zero(2, 2));
        out[0](0, 0) = kx * (X - X1);
        out[0](1, 1) = kx * (X - X2);
        out[0](0, 1) = out[0](1, 0) = -2.0 * al * (X - X3) * g * Y * e;
        out[1](0, 0) = out[1](1, 1) = 0.0;
        out[1](0, 1) = out[1](1, 0) = g * e * (1.0 - 2.0 * be * Y * Y);
    };
    m.dh_contract = [kx, X1, X2, X3, g, al, be](const Vector& R, const Matrix& G, Vector& out) {
        const double X = R(0), Y = R(1);
        const double e = std::exp(-al * (X - X3) * (X - X3) - be * Y * Y);
        const double off_sum = G(0, 1) + G(1, 0);
        out.resize(2);
        out(0) = kx * (X - X1) * G(0, 0) + kx * (X - X2) * G(1, 1) -
                 2.0 * al * (X - X3) * g * Y * e * off_sum;
        out(1) = g * e * (1.0 - 2.0 * be * Y * Y) * off_sum;
    };
    m.dh_trace = [kx, X1, X2](const Vector& R, Vector& out) {
        out.resize(2);
        out(0) = kx * (2.0 * R(0) - X1 - X2);
        out(1) = 0.0;
    };
    m.v_bath = [ky](const Vector& R) { return 0.5 * ky * R(1) * R(1); };
    m.f_bath = [ky](const Vector& R, Vector& f) {
        f = Vector::Zero(2);
        f(1) = -ky * R(1);
    };
    return m;
}

// X coordinate of the conical intersection (h11 = h22 on the Y = 0 seam).
inline double flv_conical_intersection_x(const FLVParams& p) {
    const double kx = p.mass_x * p.omega_x * p.omega_x;
    return 0.5 * (p.x1 + p.x2) + p.delta / (kx * (p.x2 - p.x1));
}

// ---------------------------------------------------------------------------
// FMO (7 sites, per-site Debye baths; all numbers external data)
// ---------------------------------------------------------------------------

struct FMOParams {
    Matrix site_hamiltonian;      // 7 x 7, hartree
    double lambda = 0.0;          // reorganization energy, hartree
    double gamma_debye = 0.0;     // inverse bath relaxation time, a.u.
    double beta = 0.0;            // 1/kT, a.u.
    int modes_per_site = 60;

    void validate() const {
        if (site_hamiltonian.rows() != 7 || site_hamiltonian.cols() != 7)
            throw ConfigError("fmo: site Hamiltonian must be 7x7");
        if (symmetry_defect(site_hamiltonian) > 1e-12)
            throw ConfigError("fmo: site Hamiltonian must be symmetric");
        if (lambda <= 0 || gamma_debye <= 0) throw ConfigError("fmo: lambda, tau_c must be > 0");
        if (beta <= 0) throw ConfigError("fmo: temperature must be > 0");
        if (modes_per_site < 1) throw ConfigError("fmo: modes_per_site must be >= 1");
    }
};

// Equal-reorganization-energy binning of the Debye density J(w) = 2 lambda w g / (w^2 + g^2):
// w_j = g tan(pi (j - 1/2) / (2 N)), c_j = w_j sqrt(2 lambda / N), unit masses.
inline std::vector<BathOscillator> discretize_debye(double lambda, double gamma, int n) {
    std::vector<BathOscillator> out(n);
    for (int j = 1; j <= n; ++j) {
        const double w = gamma * std::tan(M_PI * (j - 0.5) / (2.0 * n));
        out[j - 1].omega = w;
        out[j - 1].mass = 1.0;
        out[j - 1].c = w * std::sqrt(2.0 * lambda / n);
    }
    return out;
}

inline DiabaticModel build_fmo(const FMOParams& p) {
    p.validate();
    const int ns = 7;
    const int nm = p.modes_per_site;
    const auto osc = discretize_debye(p.lambda, p.gamma_debye, nm);

    DiabaticModel m;
    m.name = "fmo";
    m.n_states = ns;
    m.n_bath = ns * nm;
    m.beta = p.beta;
    m.masses = Vector::Constant(m.n_bath, 1.0);
    m.bath_modes.resize(m.n_bath);
    Vector c(nm), w2(nm);
    for (int j = 0; j < nm; ++j) {
        c(j) = osc[j].c;
        w2(j) = osc[j].omega * osc[j].omega;
        for (int s = 0; s < ns; ++s) m.bath_modes[s * nm + j] = {osc[j].omega, 1.0};
    }

    const Matrix hs = p.site_hamiltonian;
    m.h = [hs, c, ns, nm](const Vector& R, Matrix& h) {
        h = hs;
        for (int s = 0; s < ns; ++s) {
            double shift = 0.0;
            for (int j = 0; j < nm; ++j) shift += c(j) * R(s * nm + j);
            h(s, s) -= shift;
        }
    };
    m.dh_dR = [c, ns, nm](const Vector&, std::vector<Matrix>& out) {
        if (static_cast<int>(out.size()) != ns * nm) {
            out.assign(ns * nm, Matrix::Zero(ns, ns));
            for (int s = 0; s < ns; ++s)
                for (int j = 0; j < nm; ++j) out[s * nm + j](s, s) = -c(j);
        }
    };
    m.dh_contract = [c, ns, nm](const Vector&, const Matrix& G, Vector& out) {
        out.resize(ns * nm);
        for (int s = 0; s < ns; ++s)
            for (int j = 0; j < nm; ++j) out(s * nm + j) = -c(j) * G(s, s);
    };
    m.dh_trace = [c, ns, nm](const Vector&, Vector& out) {
        out.resize(ns * nm);
        for (int s = 0; s < ns; ++s)
            for (int j = 0; j < nm; ++j) out(s * nm + j) = -c(j);
    };
    m.v_bath = [w2, ns, nm](const Vector& R) {
        double v = 0.0;
        for (int s = 0; s < ns; ++s)
            for (int j = 0; j < nm; ++j) v += 0.5 * w2(j) * R(s * nm + j) * R(s * nm + j);
        return v;
    };
    m.f_bath = [w2, ns, nm](const Vector& R, Vector& f) {
        f.resize(ns * nm);
        for (int s = 0; s < ns; ++s)
            for (int j = 0; j < nm; ++j) f(s * nm + j) = -w2(j) * R(s * nm + j);
    };
    return m;
}

// ---------------------------------------------------------------------------
// Model cards (plain key=value text, '#' comments)
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> read_card(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model card: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline std::string data_dir() {
    if (const char* env = std::getenv("QCLDYN_DATA_DIR")) return env;
#ifdef QCLDYN_SOURCE_DATA_DIR
    return QCLDYN_SOURCE_DATA_DIR;
#else
    return "data";
#endif
}

inline FLVParams load_flv_card(const std::string& path) {
    const auto kv = read_card(path);
    FLVParams p;
    auto get = [&](const char* k, double& v) {
        if (auto it = kv.find(k); it != kv.end()) v = std::stod(it->second);
    };
    get("mass_x", p.mass_x);
    get("mass_y", p.mass_y);
    get("omega_x", p.omega_x);
    get("omega_y", p.omega_y);
    get("x1", p.x1);
    get("x2", p.x2);
    get("x3", p.x3);
    get("delta", p.delta);
    get("gamma", p.gamma);
    get("alpha", p.alpha);
    get("beta_exp", p.beta_exp);
    get("x0", p.x0);
    get("y0", p.y0);
    get("px0", p.px0);
    get("py0", p.py0);
    get("sigma_x", p.sigma_x);
    get("sigma_y", p.sigma_y);
    return p;
}

inline FMOParams load_fmo_card(const std::string& path) {
    const auto kv = read_card(path);
    FMOParams p;
    p.site_hamiltonian.resize(7, 7);
    for (int r = 0; r < 7; ++r) {
        const std::string key = "h_row_" + std::to_string(r + 1);
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("fmo card: missing " + key);
        std::istringstream row(it->second);
        for (int cidx = 0; cidx < 7; ++cidx) {
            double v;
            if (!(row >> v)) throw ConfigError("fmo card: short row in " + key);
            p.site_hamiltonian(r, cidx) = v * units::wavenumber;
        }
    }
    auto need = [&](const char* k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError(std::string("fmo card: missing ") + k);
        return std::stod(it->second);
    };
    p.lambda = need("lambda_cm") * units::wavenumber;
    p.gamma_debye = 1.0 / (need("tau_c_fs") * units::fs);
    p.beta = 1.0 / (units::k_boltzmann * need("temperature_K"));
    if (auto it = kv.find("modes_per_site"); it != kv.end()) p.modes_per_site = std::stoi(it->second);
    return p;
}

}  // namespace qcldyn
