#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rhm/format.hpp"
#include "rhm/noise.hpp"
#include "rhm/ruleset.hpp"
#include "rhm/sample.hpp"

namespace rhm {

// File formats. Symbols are 1-based in serialized form, 0-based in memory.
// Grammar layers are listed bottom-up: layers[i] maps symbols at level i+1 to
// their child tuples at level i.

inline constexpr int kRuleSetFormatVersion = 1;

inline nlohmann::json ruleset_to_json(const RuleSet& rs) {
    const RhmParams& p = rs.params();
    nlohmann::json j;
    j["version"] = kRuleSetFormatVersion;
    j["v"] = p.v;
    j["s"] = p.s;
    j["m"] = p.m;
    j["L"] = p.L;
    j["seed"] = rs.seed();
    nlohmann::json layers = nlohmann::json::array();
    for (int ell = 0; ell < p.L; ++ell) {
        nlohmann::json table = nlohmann::json::object();
        for (int y = 0; y < p.v; ++y) {
            nlohmann::json prods = nlohmann::json::array();
            for (int r = 0; r < p.m; ++r) {
                const int* t = rs.tuple(ell, y, r);
                nlohmann::json tup = nlohmann::json::array();
                for (int k = 0; k < p.s; ++k) tup.push_back(t[k] + 1);
                prods.push_back(tup);
            }
            table[std::to_string(y + 1)] = prods;
        }
        layers.push_back(table);
    }
    j["layers"] = layers;
    return j;
}

inline RuleSet ruleset_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kRuleSetFormatVersion)
        throw InvalidParams("unsupported grammar file version");
    const RhmParams p = make_params(j.at("v").get<int>(), j.at("s").get<int>(),
                                    j.at("m").get<int>(), j.at("L").get<int>());
    RuleSet rs(p, j.at("seed").get<std::uint64_t>());
    const auto& layers = j.at("layers");
    if (layers.size() != static_cast<std::size_t>(p.L))
        throw InvalidParams("grammar file has the wrong number of layers");
    for (int ell = 0; ell < p.L; ++ell) {
        const auto& table = layers[ell];
        for (int y = 0; y < p.v; ++y) {
            const auto& prods = table.at(std::to_string(y + 1));
            if (prods.size() != static_cast<std::size_t>(p.m))
                throw InvalidParams("grammar file parent has the wrong production count");
            for (int r = 0; r < p.m; ++r) {
                int* t = rs.tuple(ell, y, r);
                for (int k = 0; k < p.s; ++k) {
                    const int sym = prods[r][k].get<int>() - 1;
                    if (sym < 0 || sym >= p.v)
                        throw InvalidParams("grammar file symbol out of range");
                    t[k] = sym;
                }
            }
        }
    }
    rs.rebuild_inverse();
    if (!rs.valid()) throw InvalidParams("grammar file violates tuple distinctness");
    return rs;
}

inline nlohmann::json sample_to_json(const SampleTree& t) {
    nlohmann::json j;
    j["class"] = t.class_symbol() + 1;
    nlohmann::json leaves = nlohmann::json::array();
    for (int x : t.leaves()) leaves.push_back(x + 1);
    j["leaves"] = leaves;
    // Latent layers 1..L-1, bottom-up; the class and leaves have their own keys.
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t ell = 1; ell + 1 < t.values.size(); ++ell) {
        nlohmann::json layer = nlohmann::json::array();
        for (int x : t.values[ell]) layer.push_back(x + 1);
        layers.push_back(layer);
    }
    j["layers"] = layers;
    return j;
}

// One row per leaf: index plus the v per-symbol values.
inline std::string field_to_csv(const Mat& field) {
    std::string out = "leaf";
    for (std::size_t c = 0; c < field.cols; ++c) out += ",b" + std::to_string(c + 1);
    out += "\n";
    for (std::size_t i = 0; i < field.rows; ++i) {
        out += std::to_string(i);
        for (std::size_t c = 0; c < field.cols; ++c) out += "," + format_real(field(i, c));
        out += "\n";
    }
    return out;
}

}  // namespace rhm
