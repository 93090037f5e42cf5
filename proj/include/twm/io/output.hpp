#pragma once

#include "twm/io/config.hpp"
#include "twm/mode_ode.hpp"
#include "twm/simulator.hpp"
#include "twm/spectrum.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace twm::io {

using json = nlohmann::json;

/// Minimal CSV writer; numbers use %.17g so output is byte-reproducible.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : f_(prepare(path)) {
        if (!f_) throw Error("cannot write " + path.string());
        row_text(header);
    }
    void row(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) f_ << (i ? "," : "") << detail::fmt(v[i]);
        f_ << "\n";
    }
    void row_text(const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) f_ << (i ? "," : "") << quote(v[i]);
        f_ << "\n";
    }

private:
    static const std::filesystem::path& prepare(const std::filesystem::path& path) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        return path;
    }
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    std::ofstream f_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

inline json to_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

inline json to_json(const Spectrum& sp) {
    json ev = json::array();
    for (const auto& e : sp.eigenvalues)
        ev.push_back({{"re", e.lambda.real()}, {"im", e.lambda.imag()}, {"multiplicity", e.multiplicity}, {"residual", e.residual}});
    return {{"eigenvalues", ev},
            {"R_psi", sp.rates.R_psi},
            {"R_p", sp.rates.R_p},
            {"R_inf", sp.rates.R_inf},
            {"Lambda_u", sp.Lambda_u},
            {"window", {{"re_min", sp.window.re_min}, {"re_max", sp.window.re_max}, {"im_min", sp.window.im_min}, {"im_max", sp.window.im_max}}},
            {"winding", sp.winding},
            {"harvested", sp.harvested},
            {"gap", {{"q", sp.gap.q}, {"xi", sp.gap.xi}, {"delta", sp.gap.delta}}}};
}

/// Time series columns: t, n_k, power_k, out0, outL, D.
inline std::vector<std::string> sample_header(std::size_t m) {
    std::vector<std::string> h{"t"};
    for (std::size_t k = 1; k <= m; ++k) h.push_back("n" + std::to_string(k));
    for (std::size_t k = 1; k <= m; ++k) h.push_back("power" + std::to_string(k));
    for (const char* c : {"out0_re", "out0_im", "outL_re", "outL_im", "D"}) h.push_back(c);
    return h;
}

inline std::vector<double> sample_row(const Sample& s) {
    std::vector<double> r{s.t};
    r.insert(r.end(), s.n.begin(), s.n.end());
    r.insert(r.end(), s.power.begin(), s.power.end());
    for (double v : {s.out0.real(), s.out0.imag(), s.outL.real(), s.outL.imag(), s.D}) r.push_back(v);
    return r;
}

/// Profiles of B_j and Phi_j on the basis grid, one entry per node.
inline json to_json(const ModeBasis& b) {
    const auto f = b.frame(b.n_ref());
    const auto& g = b.grid();
    json modes = json::array();
    for (int j = 0; j < b.q(); ++j) {
        json z = json::array(), prof = json::array();
        for (std::size_t k = 0; k < g.sections(); ++k)
            for (int i = 0; i <= g.cells[k]; ++i) {
                if (k > 0 && i == 0) continue;  // shared interface node
                z.push_back(g.z(k, i));
                const auto& B = f.B[j];
                const auto& P = f.Phi[j];
                prof.push_back({B.psi[k][i][0].real(), B.psi[k][i][0].imag(), B.psi[k][i][1].real(), B.psi[k][i][1].imag(),
                                B.p[k][i][0].real(), B.p[k][i][0].imag(), B.p[k][i][1].real(), B.p[k][i][1].imag(),
                                P.psi[k][i][0].real(), P.psi[k][i][0].imag(), P.psi[k][i][1].real(), P.psi[k][i][1].imag()});
            }
        json dl = json::array();
        for (auto v : b.dlambda_ref()[j]) dl.push_back(to_json(v));
        modes.push_back({{"lambda", to_json(f.lambda[j])},
                         {"dlambda_dn", dl},
                         {"normalizer", to_json(f.norm[j])},
                         {"columns", {"psi1_re", "psi1_im", "psi2_re", "psi2_im", "p1_re", "p1_im", "p2_re", "p2_im",
                                      "phi1_re", "phi1_im", "phi2_re", "phi2_im"}},
                         {"z", z},
                         {"profile", prof}});
    }
    return {{"n_ref", b.n_ref()},
            {"q", b.q()},
            {"box", {{"lo", b.box().lo}, {"hi", b.box().hi}}},
            {"trust_radius", b.trust_radius()},
            {"modes", modes}};
}

} // namespace twm::io
