#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cmsdr/conic.hpp"
#include "cmsdr/errors.hpp"
#include "cmsdr/formulation.hpp"

namespace cmsdr {

using json = nlohmann::json;

// Problem schema:
// {
//   "c": [..], "b": [..],
//   "A": {"rows": m, "cols": n, "entries": [[i, j, v], ..]},
//   "cones": {"zero": z, "nonneg": l, "soc": [..], "psd": [..]}
// }
inline json problem_to_json(const ConicProblem& p) {
    json a_entries = json::array();
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
            if (it.value() != 0.0) a_entries.push_back({it.row(), it.col(), it.value()});
    json j;
    j["c"] = std::vector<double>(p.c.data(), p.c.data() + p.c.size());
    j["b"] = std::vector<double>(p.b.data(), p.b.data() + p.b.size());
    j["A"] = {{"rows", p.num_rows()}, {"cols", p.num_vars()}, {"entries", std::move(a_entries)}};
    j["cones"] = {{"zero", p.cones.zero_dim},
                  {"nonneg", p.cones.nonneg_dim},
                  {"soc", p.cones.soc_dims},
                  {"psd", p.cones.psd_side_lengths}};
    return j;
}

inline ConicProblem problem_from_json(const json& j) {
    ConicProblem p;
    try {
        const auto& c = j.at("c");
        const auto& b = j.at("b");
        p.c = Eigen::Map<const Eigen::VectorXd>(c.get<std::vector<double>>().data(),
                                                static_cast<Eigen::Index>(c.size()));
        const std::vector<double> bv = b.get<std::vector<double>>();
        p.b = Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
        const auto& a = j.at("A");
        const int rows = a.at("rows").get<int>();
        const int cols = a.at("cols").get<int>();
        std::vector<Eigen::Triplet<double>> trip;
        for (const auto& e : a.at("entries")) {
            if (!e.is_array() || e.size() != 3) throw ParseError("A entry is not an [i, j, v] triplet");
            const int i = e[0].get<int>();
            const int jj = e[1].get<int>();
            if (i < 0 || i >= rows || jj < 0 || jj >= cols)
                throw ParseError("A entry index out of range");
            trip.emplace_back(i, jj, e[2].get<double>());
        }
        p.A.resize(rows, cols);
        p.A.setFromTriplets(trip.begin(), trip.end());
        const auto& k = j.at("cones");
        p.cones.zero_dim = k.at("zero").get<int>();
        p.cones.nonneg_dim = k.at("nonneg").get<int>();
        p.cones.soc_dims = k.at("soc").get<std::vector<int>>();
        p.cones.psd_side_lengths = k.at("psd").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed problem JSON: ") + e.what());
    }
    p.validate();
    return p;
}

inline json layout_to_json(const VariableLayout& lay) {
    auto range = [](const Range& r) { return json{{"offset", r.offset}, {"len", r.len}}; };
    json j;
    j["equalizer_taps"] = lay.equalizer_taps;
    j["embed_side"] = lay.embed_side;
    j["n_windows"] = lay.n_windows;
    j["n_code"] = lay.n_code;
    j["total"] = lay.total;
    j["svec_w"] = range(lay.svec_w);
    j["w_r"] = range(lay.w_r);
    j["tau"] = range(lay.tau);
    j["t"] = range(lay.t);
    j["f"] = range(lay.f);
    return j;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failure on " + path);
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failure on " + path);
}

inline void save_problem(const ConicProblem& p, const std::string& path) {
    write_text_file(path, problem_to_json(p).dump(2) + "\n");
}

inline ConicProblem load_problem(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return problem_from_json(j);
}

}  // namespace cmsdr
