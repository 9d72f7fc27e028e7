#pragma once

// JSON encodings.
//
//   matrix    {"dims":[d1,...],"data":[[[re,im],...],...]}   (row-major)
//   vector    {"dims":[d1,...],"amps":[[re,im],...]}
//   scenario  {"weights":[...],"tests":[{"d_anc","d_in","d_out","input_state":<matrix>,
//              "povm":[{"label":..,"effect":<matrix>},...]},...]}
//   channel   {"kind":"unitary|kraus|constant|choi","d_in":..,"d_out":..,"data":...}
//   basis     {"d":..,"kets":[<vector>,...]}
//   MEB       {"d":..,"kets":[<vector>,...],"generators":[<matrix>,...]}
//   report    {"combination":[...],"trivial":..,"upper":..,"exact":..,"gap":..,
//              "tradeoff":bool,"tight":bool,"optimizer":<channel>, ...}
//
// Doubles are written in shortest round-trip form, so save -> load -> save is
// byte-identical.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgur/bounds.hpp"
#include "fgur/scenarios.hpp"
#include "fgur/tester.hpp"

namespace fgur::io {

using nlohmann::json;

inline json complex_to_json(Complex c) { return json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw FormatError("expected a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const ComplexMatrix& m, const Dims& dims = {}) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        data.push_back(std::move(row));
    }
    json out = json::object();
    out["dims"] = dims.empty() ? json(Dims{static_cast<std::size_t>(m.rows())}) : json(dims);
    out["data"] = std::move(data);
    return out;
}

inline json operator_to_json(const Operator& op) { return matrix_to_json(op.matrix(), op.dims()); }

inline ComplexMatrix matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("data") || !j["data"].is_array()) throw FormatError("matrix: missing data array");
    const auto& data = j["data"];
    const auto rows = static_cast<Eigen::Index>(data.size());
    const auto cols = rows ? static_cast<Eigen::Index>(data[0].size()) : 0;
    ComplexMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = data[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("matrix: ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

inline Dims dims_from_json(const json& j) {
    if (!j.contains("dims")) return {};
    try {
        return j["dims"].get<Dims>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("dims: ") + e.what());
    }
}

inline HermitianOperator hermitian_from_json(const json& j) {
    return HermitianOperator(matrix_from_json(j), dims_from_json(j));
}

inline json ket_to_json(const KetVector& v) {
    json amps = json::array();
    for (Eigen::Index k = 0; k < v.amplitudes().size(); ++k) amps.push_back(complex_to_json(v.amplitudes()(k)));
    return json{{"dims", v.dims()}, {"amps", std::move(amps)}};
}

inline KetVector ket_from_json(const json& j) {
    if (!j.is_object() || !j.contains("amps") || !j["amps"].is_array()) throw FormatError("vector: missing amps array");
    ComplexVector v(static_cast<Eigen::Index>(j["amps"].size()));
    for (std::size_t k = 0; k < j["amps"].size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(j["amps"][k]);
    return KetVector(std::move(v), dims_from_json(j));
}

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline json test_to_json(const Test& t) {
    json povm = json::array();
    for (const auto& e : t.povm()) povm.push_back(json{{"label", e.label}, {"effect", operator_to_json(e.effect)}});
    return json{{"d_anc", t.d_anc()},
                {"d_in", t.d_in()},
                {"d_out", t.d_out()},
                {"input_state", operator_to_json(t.input_state())},
                {"povm", std::move(povm)}};
}

inline Test test_from_json(const json& j) {
    const auto d_anc = detail::field<std::size_t>(j, "d_anc");
    const auto d_in = detail::field<std::size_t>(j, "d_in");
    const auto d_out = detail::field<std::size_t>(j, "d_out");
    if (!j.contains("povm") || !j["povm"].is_array()) throw FormatError("test: missing povm array");
    std::vector<LabeledEffect> povm;
    for (const auto& e : j["povm"]) {
        const auto label = detail::field<std::string>(e, "label");
        if (!e.contains("effect")) throw FormatError("povm entry: missing effect");
        povm.push_back({label, HermitianOperator(matrix_from_json(e["effect"]), {})});
    }
    if (!j.contains("input_state")) throw FormatError("test: missing input_state");
    return Test(HermitianOperator(matrix_from_json(j["input_state"]), {}), std::move(povm), d_anc, d_in, d_out);
}

inline json scenario_to_json(const Scenario& s) {
    json tests = json::array();
    for (const auto& t : s.tests()) tests.push_back(test_to_json(t));
    return json{{"weights", s.weights()}, {"tests", std::move(tests)}};
}

inline Scenario scenario_from_json(const json& j) {
    const auto weights = detail::field<std::vector<double>>(j, "weights");
    if (!j.contains("tests") || !j["tests"].is_array()) throw FormatError("scenario: missing tests array");
    std::vector<Test> tests;
    for (const auto& t : j["tests"]) tests.push_back(test_from_json(t));
    return Scenario(std::move(tests), weights);
}

inline json channel_to_json(const Channel& ch) {
    json out{{"kind", to_string(ch.kind())}, {"d_in", ch.d_in()}, {"d_out", ch.d_out()}};
    switch (ch.kind()) {
        case ChannelKind::unitary: out["data"] = matrix_to_json(ch.generators().front()); break;
        case ChannelKind::kraus: {
            json list = json::array();
            for (const auto& k : ch.generators()) list.push_back(matrix_to_json(k, {static_cast<std::size_t>(k.rows()), static_cast<std::size_t>(k.cols())}));
            out["data"] = std::move(list);
            break;
        }
        case ChannelKind::constant: out["data"] = matrix_to_json(ch.generators().front()); break;
        case ChannelKind::choi: out["data"] = operator_to_json(ch.choi()); break;
    }
    return out;
}

inline Channel channel_from_json(const json& j) {
    const auto kind = detail::field<std::string>(j, "kind");
    if (!j.contains("data")) throw FormatError("channel: missing data");
    const auto& data = j["data"];
    if (kind == "unitary") return Channel::from_unitary(matrix_from_json(data));
    if (kind == "kraus") {
        if (!data.is_array()) throw FormatError("kraus channel: data must be an array of matrices");
        std::vector<ComplexMatrix> kraus;
        for (const auto& k : data) kraus.push_back(matrix_from_json(k));
        return Channel::from_kraus(kraus);
    }
    if (kind == "constant") {
        return Channel::constant(detail::field<std::size_t>(j, "d_in"), HermitianOperator(matrix_from_json(data), {}));
    }
    if (kind == "choi") {
        return Channel::from_choi(HermitianOperator(matrix_from_json(data), {}), detail::field<std::size_t>(j, "d_in"),
                                  detail::field<std::size_t>(j, "d_out"));
    }
    throw FormatError("channel: unknown kind '" + kind + "'");
}

inline json basis_to_json(const Basis& b) {
    json kets = json::array();
    for (const auto& k : b) kets.push_back(ket_to_json(k));
    return json{{"d", b.empty() ? 0 : b.front().size()}, {"kets", std::move(kets)}};
}

inline Basis basis_from_json(const json& j) {
    const auto d = detail::field<std::size_t>(j, "d");
    if (!j.contains("kets") || !j["kets"].is_array()) throw FormatError("basis: missing kets");
    Basis out;
    for (const auto& k : j["kets"]) {
        out.push_back(ket_from_json(k));
        if (out.back().size() != d) throw FormatError("basis: ket length differs from d");
    }
    return out;
}

inline json meb_to_json(const MEB& m) {
    json kets = json::array(), gens = json::array();
    for (const auto& k : m.kets()) kets.push_back(ket_to_json(k));
    for (const auto& u : m.generators()) gens.push_back(matrix_to_json(u));
    return json{{"d", m.d()}, {"kets", std::move(kets)}, {"generators", std::move(gens)}};
}

inline MEB meb_from_json(const json& j) {
    if (!j.contains("kets") || !j.contains("generators")) throw FormatError("MEB: missing kets or generators");
    std::vector<KetVector> kets;
    std::vector<ComplexMatrix> gens;
    for (const auto& k : j["kets"]) kets.push_back(ket_from_json(k));
    for (const auto& u : j["generators"]) gens.push_back(matrix_from_json(u));
    MEB m(std::move(kets), std::move(gens));
    if (m.d() != detail::field<std::size_t>(j, "d")) throw FormatError("MEB: d does not match the kets");
    return m;
}

namespace detail {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline json report_to_json(const BoundReport& r) {
    json out{{"combination", r.combination},
             {"trivial", detail::optional_number(r.trivial)},
             {"upper", detail::optional_number(r.upper)},
             {"exact", detail::optional_number(r.exact)},
             {"dual", detail::optional_number(r.dual)},
             {"gap", detail::optional_number(r.gap)},
             {"tradeoff", r.tradeoff},
             {"tight", r.tight},
             {"degenerate", r.degenerate},
             {"optimizer", r.optimizer ? channel_to_json(*r.optimizer) : json(nullptr)}};
    if (r.error) out["error"] = *r.error;
    return out;
}

/// FNV-1a 64-bit hash of the compact scenario encoding, as 16 hex digits.
inline std::string scenario_digest(const Scenario& s) {
    const std::string text = scenario_to_json(s).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json report_file_to_json(const Scenario& s, const std::vector<BoundReport>& reports) {
    json list = json::array();
    for (const auto& r : reports) list.push_back(report_to_json(r));
    return json{{"scenario_digest", "fnv1a64:" + scenario_digest(s)}, {"reports", std::move(list)}};
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

inline std::string to_text(const json& j) { return j.dump() + "\n"; }

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << text;
}

}  // namespace fgur::io
