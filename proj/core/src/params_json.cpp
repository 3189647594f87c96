#include "rsinv/market.hpp"

#include <array>
#include <json.hpp>

namespace rsinv {

namespace {

constexpr std::array<const char*, 10> kFields = {
    "r", "c", "m", "lbar0", "sigma", "sigma_bar", "rho", "gamma", "horizon", "x0"};

double require_number(const nlohmann::json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw Error(ErrorCode::config_parse, std::string("missing key '") + key + "'");
    if (!it->is_number())
        throw Error(ErrorCode::config_parse, std::string("key '") + key + "' must be a number");
    return it->get<double>();
}

double number_or(const nlohmann::json& obj, const char* key, double fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number())
        throw Error(ErrorCode::config_parse, std::string("key '") + key + "' must be a number");
    return it->get<double>();
}

} // namespace

MarketParams params_from_json(const std::string& text) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::config_parse, e.what());
    }
    if (!obj.is_object())
        throw Error(ErrorCode::config_parse, "parameters must be a JSON object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* f : kFields) known = known || item.key() == f;
        if (!known)
            throw Error(ErrorCode::config_parse, "unknown key '" + item.key() + "'");
    }

    MarketParams p;
    p.r = require_number(obj, "r");
    p.c = require_number(obj, "c");
    p.m = require_number(obj, "m");
    p.lbar0 = number_or(obj, "lbar0", 0.0);
    p.sigma = require_number(obj, "sigma");
    p.sigma_bar = require_number(obj, "sigma_bar");
    p.rho = require_number(obj, "rho");
    p.gamma = require_number(obj, "gamma");
    p.horizon = require_number(obj, "horizon");
    p.x0 = number_or(obj, "x0", 1.0);
    return p;
}

std::string params_to_json(const MarketParams& p) {
    nlohmann::json obj{
        {"r", p.r},         {"c", p.c},
        {"m", p.m},         {"lbar0", p.lbar0},
        {"sigma", p.sigma}, {"sigma_bar", p.sigma_bar},
        {"rho", p.rho},     {"gamma", p.gamma},
        {"horizon", p.horizon}, {"x0", p.x0}};
    return obj.dump(2);
}

} // namespace rsinv
