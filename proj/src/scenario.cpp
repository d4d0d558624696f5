#include "sbc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <map>

#include "sbc/errors.hpp"

namespace sbc {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return it.key() == k; });
        if (!known) fail(join(path, it.key()), "unknown key");
    }
}

const json& require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    return j;
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double get_positive(const json& j, const std::string& path) {
    const double v = get_number(j, path);
    if (!(v > 0.0)) fail(path, "must be positive");
    return v;
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Eigen::Vector3d get_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 numbers");
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) v(i) = get_number(j[static_cast<std::size_t>(i)], path);
    return v;
}

Eigen::Vector2d get_vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected an array of 2 numbers");
    Eigen::Vector2d v;
    for (int i = 0; i < 2; ++i) v(i) = get_number(j[static_cast<std::size_t>(i)], path);
    return v;
}

json vec_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

ReferenceSpec parse_reference(const json& j, const std::string& path) {
    require_object(j, path);
    const auto type_it = j.find("type");
    if (type_it == j.end()) fail(join(path, "type"), "missing");
    const std::string type = get_string(*type_it, join(path, "type"));

    ReferenceSpec spec;
    if (type == "hover") {
        reject_unknown(j, path, {"type", "point"});
        const auto point = j.find("point");
        if (point == j.end()) fail(join(path, "point"), "missing");
        spec.kind = ReferenceSpec::Kind::kHover;
        spec.hover = get_vec3(*point, join(path, "point"));
    } else if (type == "circle") {
        reject_unknown(j, path, {"type", "radius", "rate", "phase", "z", "center"});
        spec.kind = ReferenceSpec::Kind::kCircle;
        for (const char* key : {"radius", "rate", "z"})
            if (j.find(key) == j.end()) fail(join(path, key), "missing");
        spec.radius = get_number(j["radius"], join(path, "radius"));
        if (spec.radius < 0.0) fail(join(path, "radius"), "must be non-negative");
        spec.rate = get_number(j["rate"], join(path, "rate"));
        spec.z = get_number(j["z"], join(path, "z"));
        if (j.contains("phase")) spec.phase = get_number(j["phase"], join(path, "phase"));
        if (j.contains("center")) spec.center = get_vec2(j["center"], join(path, "center"));
    } else if (type == "bezier") {
        reject_unknown(j, path, {"type", "p0", "p1", "T"});
        spec.kind = ReferenceSpec::Kind::kBezier;
        for (const char* key : {"p0", "p1", "T"})
            if (j.find(key) == j.end()) fail(join(path, key), "missing");
        spec.p0 = get_vec3(j["p0"], join(path, "p0"));
        spec.p1 = get_vec3(j["p1"], join(path, "p1"));
        spec.T = get_positive(j["T"], join(path, "T"));
    } else {
        fail(join(path, "type"), "expected hover, circle, or bezier");
    }
    return spec;
}

json reference_to_json(const ReferenceSpec& spec) {
    json j;
    switch (spec.kind) {
        case ReferenceSpec::Kind::kHover:
            j["type"] = "hover";
            j["point"] = vec_to_json(spec.hover);
            break;
        case ReferenceSpec::Kind::kCircle:
            j["type"] = "circle";
            j["radius"] = spec.radius;
            j["rate"] = spec.rate;
            j["phase"] = spec.phase;
            j["z"] = spec.z;
            j["center"] = json::array({spec.center.x(), spec.center.y()});
            break;
        case ReferenceSpec::Kind::kBezier:
            j["type"] = "bezier";
            j["p0"] = vec_to_json(spec.p0);
            j["p1"] = vec_to_json(spec.p1);
            j["T"] = spec.T;
            break;
    }
    return j;
}

IntegratorState parse_initial(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown(j, path, {"r", "dr", "ddr", "dddr"});
    if (j.find("r") == j.end()) fail(join(path, "r"), "missing");
    IntegratorState q;
    q.r = get_vec3(j["r"], join(path, "r"));
    if (j.contains("dr")) q.dr = get_vec3(j["dr"], join(path, "dr"));
    if (j.contains("ddr")) q.ddr = get_vec3(j["ddr"], join(path, "ddr"));
    if (j.contains("dddr")) q.dddr = get_vec3(j["dddr"], join(path, "dddr"));
    return q;
}

json initial_to_json(const IntegratorState& q) {
    json j;
    j["r"] = vec_to_json(q.r);
    j["dr"] = vec_to_json(q.dr);
    j["ddr"] = vec_to_json(q.ddr);
    j["dddr"] = vec_to_json(q.dddr);
    return j;
}

const std::map<std::string, std::string>& override_aliases() {
    static const std::map<std::string, std::string> aliases = {
        {"ks", "k_s"},
        {"alpha", "snap_bound"},
        {"ds", "geometry.D_s"},
        {"c", "geometry.c"},
        {"shape", "geometry.shape"},
        {"mass", "vehicle.mass"},
        {"gravity", "vehicle.gravity"},
        {"max_tilt_deg", "limits.max_tilt_deg"},
        {"max_thrust_ratio", "limits.max_thrust_ratio"},
        {"retune", "retune.enabled"},
        {"retune_factor", "retune.factor"},
        {"retune_cap", "retune.cap"},
    };
    return aliases;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"static_formation", "spinning_formation", "two_quad_pass"};
}

std::string builtin_summary(const std::string& name) {
    if (name == "static_formation")
        return "one vehicle crosses a ring of four hovering vehicles";
    if (name == "spinning_formation")
        return "one vehicle crosses a formation of four vehicles circling at pi/2 rad/s";
    if (name == "two_quad_pass")
        return "two vehicles swap ends of a corridor head-on";
    throw ValidationError("unknown scenario: " + name);
}

ScenarioConfig builtin_scenario(const std::string& name) {
    ScenarioConfig config;
    config.name = name;
    const double z = -0.8;

    auto hover = [](double x, double y, double z_pos) {
        ReferenceSpec spec;
        spec.kind = ReferenceSpec::Kind::kHover;
        spec.hover = Eigen::Vector3d(x, y, z_pos);
        return spec;
    };
    auto circle = [&](double phase) {
        ReferenceSpec spec;
        spec.kind = ReferenceSpec::Kind::kCircle;
        spec.radius = 0.45;
        spec.rate = kPi / 2.0;
        spec.phase = phase;
        spec.z = z;
        return spec;
    };
    auto bezier = [](const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, double T) {
        ReferenceSpec spec;
        spec.kind = ReferenceSpec::Kind::kBezier;
        spec.p0 = p0;
        spec.p1 = p1;
        spec.T = T;
        return spec;
    };

    if (name == "static_formation") {
        // Rigid time parameterization: the formation members hold station,
        // so a slowing virtual vehicle would stall the crossing instead of
        // softening it.
        config.duration = 8.0;
        config.k_s = 0.0;
        config.references = {hover(0.25, 0.0, z), hover(0.0, 0.25, z), hover(-0.25, 0.0, z),
                             hover(0.0, -0.25, z),
                             bezier({0.6, -0.6, z}, {-0.6, 0.6, z}, 4.0)};
    } else if (name == "spinning_formation") {
        config.duration = 10.0;
        config.k_s = 0.0;
        config.references = {circle(-kPi / 2.0), circle(0.0), circle(kPi / 2.0), circle(kPi),
                             bezier({-0.9, -0.9, z}, {0.9, 0.9, z}, 5.0)};
    } else if (name == "two_quad_pass") {
        // Stiff tracking makes the rigid-parameterization pass aggressive
        // (the head-on encounter demands a hard swerve) while the k_s = 100
        // variant of the same scenario stays gentle.
        config.duration = 10.0;
        config.poles = {10.0, 11.0, 12.0, 13.0};
        config.references = {bezier({-1.2, -0.05, z}, {1.2, -0.05, z}, 2.5),
                             bezier({1.2, 0.05, z}, {-1.2, 0.05, z}, 2.5)};
    } else {
        throw ValidationError("unknown scenario: " + name);
    }

    // Vehicles lift off from hover, so every builtin starts at rest on its
    // path's start point even when the reference itself begins in motion.
    config.initial.reserve(config.references.size());
    for (const ReferenceSpec& spec : config.references) {
        IntegratorState rest;
        rest.r = spec.start_state().r;
        config.initial.push_back(rest);
    }
    return config;
}

ScenarioConfig parse_scenario(const nlohmann::json& doc) {
    require_object(doc, "scenario");
    reject_unknown(doc, "", {"name", "dt", "duration", "k_s", "snap_bound", "poles", "geometry",
                             "vehicle", "limits", "retune", "vehicles"});

    ScenarioConfig config;
    if (doc.contains("name")) config.name = get_string(doc["name"], "name");
    if (doc.contains("dt")) config.dt = get_positive(doc["dt"], "dt");
    if (doc.contains("duration")) config.duration = get_positive(doc["duration"], "duration");
    if (doc.contains("k_s")) {
        config.k_s = get_number(doc["k_s"], "k_s");
        if (config.k_s < 0.0) fail("k_s", "must be non-negative");
    }
    if (doc.contains("snap_bound")) {
        if (doc["snap_bound"].is_null())
            config.snap_bound.reset();
        else
            config.snap_bound = get_positive(doc["snap_bound"], "snap_bound");
    }
    if (doc.contains("poles")) {
        const json& p = doc["poles"];
        if (!p.is_array() || p.size() != 4) fail("poles", "expected an array of 4 numbers");
        for (int i = 0; i < 4; ++i)
            config.poles[static_cast<std::size_t>(i)] =
                get_positive(p[static_cast<std::size_t>(i)], "poles");
    }
    if (doc.contains("geometry")) {
        const json& g = require_object(doc["geometry"], "geometry");
        reject_unknown(g, "geometry", {"D_s", "c", "shape"});
        if (g.contains("D_s")) config.geometry.ds = get_positive(g["D_s"], "geometry.D_s");
        if (g.contains("c")) config.geometry.c = get_positive(g["c"], "geometry.c");
        if (g.contains("shape")) {
            const std::string shape = get_string(g["shape"], "geometry.shape");
            if (shape == "rectangle")
                config.geometry.shape = SafetyShape::kRectangle;
            else if (shape == "cylinder")
                config.geometry.shape = SafetyShape::kCylinder;
            else
                fail("geometry.shape", "expected rectangle or cylinder");
        }
    }
    if (doc.contains("vehicle")) {
        const json& v = require_object(doc["vehicle"], "vehicle");
        reject_unknown(v, "vehicle", {"mass", "inertia", "gravity"});
        if (v.contains("mass")) config.vehicle.mass = get_positive(v["mass"], "vehicle.mass");
        if (v.contains("gravity"))
            config.vehicle.gravity = get_positive(v["gravity"], "vehicle.gravity");
        if (v.contains("inertia")) {
            const json& inertia = v["inertia"];
            if (!inertia.is_array() || inertia.size() != 3)
                fail("vehicle.inertia", "expected an array of 3 principal moments");
            Eigen::Vector3d diag;
            for (int i = 0; i < 3; ++i)
                diag(i) = get_positive(inertia[static_cast<std::size_t>(i)], "vehicle.inertia");
            config.vehicle.inertia = diag.asDiagonal();
        }
    }
    if (doc.contains("limits")) {
        const json& l = require_object(doc["limits"], "limits");
        reject_unknown(l, "limits", {"max_tilt_deg", "max_thrust_ratio"});
        if (l.contains("max_tilt_deg")) {
            const double deg = get_positive(l["max_tilt_deg"], "limits.max_tilt_deg");
            if (deg >= 180.0) fail("limits.max_tilt_deg", "must be below 180");
            config.limits.max_tilt = radians(deg);
        }
        if (l.contains("max_thrust_ratio"))
            config.limits.max_thrust_ratio =
                get_positive(l["max_thrust_ratio"], "limits.max_thrust_ratio");
    }
    if (doc.contains("retune")) {
        const json& r = require_object(doc["retune"], "retune");
        reject_unknown(r, "retune", {"enabled", "factor", "cap"});
        if (r.contains("enabled")) config.retune.enabled = get_bool(r["enabled"], "retune.enabled");
        if (r.contains("factor")) config.retune.factor = get_positive(r["factor"], "retune.factor");
        if (r.contains("cap")) config.retune.cap = get_int(r["cap"], "retune.cap");
    }

    if (!doc.contains("vehicles")) fail("vehicles", "missing");
    const json& vehicles = doc["vehicles"];
    if (!vehicles.is_array() || vehicles.empty()) fail("vehicles", "expected a non-empty array");
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const std::string path = "vehicles[" + std::to_string(i) + "]";
        const json& v = require_object(vehicles[i], path);
        reject_unknown(v, path, {"initial", "reference"});
        if (v.find("reference") == v.end()) fail(join(path, "reference"), "missing");
        ReferenceSpec spec = parse_reference(v["reference"], join(path, "reference"));
        config.references.push_back(spec);
        if (v.contains("initial"))
            config.initial.push_back(parse_initial(v["initial"], join(path, "initial")));
        else
            config.initial.push_back(spec.start_state());
    }

    config.validate();
    return config;
}

nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    json doc;
    doc["name"] = config.name;
    doc["dt"] = config.dt;
    doc["duration"] = config.duration;
    doc["k_s"] = config.k_s;
    doc["snap_bound"] = config.snap_bound ? json(*config.snap_bound) : json(nullptr);
    doc["poles"] = json::array(
        {config.poles[0], config.poles[1], config.poles[2], config.poles[3]});
    doc["geometry"] = {
        {"D_s", config.geometry.ds},
        {"c", config.geometry.c},
        {"shape", config.geometry.shape == SafetyShape::kRectangle ? "rectangle" : "cylinder"},
    };
    const Eigen::Vector3d inertia = config.vehicle.inertia.diagonal();
    doc["vehicle"] = {
        {"mass", config.vehicle.mass},
        {"inertia", json::array({inertia.x(), inertia.y(), inertia.z()})},
        {"gravity", config.vehicle.gravity},
    };
    doc["limits"] = {
        {"max_tilt_deg", degrees(config.limits.max_tilt)},
        {"max_thrust_ratio", config.limits.max_thrust_ratio},
    };
    doc["retune"] = {
        {"enabled", config.retune.enabled},
        {"factor", config.retune.factor},
        {"cap", config.retune.cap},
    };
    doc["vehicles"] = json::array();
    for (std::size_t i = 0; i < config.references.size(); ++i) {
        json v;
        v["reference"] = reference_to_json(config.references[i]);
        v["initial"] = initial_to_json(config.initial[i]);
        doc["vehicles"].push_back(v);
    }
    return doc;
}

ScenarioConfig resolve_scenario(const std::string& name_or_path,
                                const std::vector<std::string>& overrides) {
    const std::vector<std::string> names = builtin_names();
    json doc;
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        doc = scenario_to_json(builtin_scenario(name_or_path));
    } else {
        std::ifstream in(name_or_path);
        if (!in) throw ValidationError("cannot open scenario: " + name_or_path);
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError("scenario " + name_or_path + ": " + e.what());
        }
    }
    for (const std::string& assignment : overrides) apply_override(doc, assignment);
    return parse_scenario(doc);
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("override must look like key=value: " + assignment);
    std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    const auto alias = override_aliases().find(key);
    if (alias != override_aliases().end()) key = alias->second;

    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings like rectangle
    }

    json* node = &doc;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = key.find('.', begin);
        const std::string part = key.substr(begin, dot - begin);
        if (part.empty()) throw ValidationError("override key has an empty segment: " + key);
        if (dot == std::string::npos) {
            (*node)[part] = parsed;
            break;
        }
        node = &(*node)[part];
        begin = dot + 1;
    }
}

}  // namespace sbc
