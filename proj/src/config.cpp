#include <geomech/config.hpp>

#include <geomech/errors.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace geomech::cli {

using nlohmann::json;
using namespace geomech::exprlang;

namespace {

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {"free_particle", "harmonic", "central_force",
                                                   "magnetic_kk",   "aks_sl2",  "aks_sl3"};
    return names;
}

std::vector<double> as_doubles(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(std::string(what) + " must contain numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Vec to_vec(const std::vector<double>& xs) {
    Vec v(static_cast<int>(xs.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = xs[static_cast<std::size_t>(i)];
    return v;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    if (j.contains("mode")) cfg.mode = j["mode"].get<std::string>();

    if (!j.contains("system")) throw ConfigError("config requires a 'system' field");
    const json& sys = j["system"];
    if (sys.is_string()) {
        cfg.builtin = sys.get<std::string>();
        bool known = false;
        for (const auto& n : builtin_names()) known = known || n == cfg.builtin;
        if (!known) throw ConfigError("unknown builtin system '" + cfg.builtin + "'");
    } else if (sys.is_object()) {
        if (!sys.contains("dim") || !sys.contains("lagrangian"))
            throw ConfigError("expression-defined system requires 'dim' and 'lagrangian'");
        cfg.dim = sys["dim"].get<int>();
        if (cfg.dim <= 0) throw ConfigError("system dim must be positive");
        cfg.lagrangian = sys["lagrangian"].get<std::string>();
        if (sys.contains("force")) {
            for (const auto& f : sys["force"]) cfg.force.push_back(f.get<std::string>());
            if (static_cast<int>(cfg.force.size()) != cfg.dim)
                throw ConfigError("force must list one expression per coordinate");
        }
        if (sys.contains("params"))
            for (auto it = sys["params"].begin(); it != sys["params"].end(); ++it)
                cfg.params[it.key()] = it.value().get<double>();
    } else {
        throw ConfigError("'system' must be a builtin name or an object");
    }

    if (j.contains("symmetry")) {
        const json& s = j["symmetry"];
        SymmetryConfig sc;
        if (!s.contains("group_coords"))
            throw ConfigError("symmetry block requires 'group_coords'");
        for (const auto& g : s["group_coords"]) {
            int idx = g.get<int>();
            if (idx < 1) throw ConfigError("group_coords are 1-based");
            sc.group_coords.push_back(idx - 1);
        }
        if (s.contains("generators"))
            for (const auto& gen : s["generators"]) {
                std::vector<std::string> comps;
                for (const auto& c : gen) comps.push_back(c.get<std::string>());
                sc.generators.push_back(comps);
            }
        if (s.contains("structure_constants"))
            sc.structure_constants = as_doubles(s["structure_constants"], "structure_constants");
        if (s.contains("A"))
            for (const auto& row : s["A"]) {
                std::vector<std::string> comps;
                for (const auto& c : row) comps.push_back(c.get<std::string>());
                sc.A.push_back(comps);
            }
        if (!s.contains("mu")) throw ConfigError("symmetry block requires 'mu'");
        sc.mu = as_doubles(s["mu"], "mu");
        if (sc.mu.size() != sc.group_coords.size())
            throw ConfigError("mu must have one component per group coordinate");
        cfg.symmetry = std::move(sc);
    }

    if (j.contains("integration")) {
        const json& it = j["integration"];
        if (it.contains("t0")) cfg.t0 = it["t0"].get<double>();
        if (it.contains("t1")) cfg.t1 = it["t1"].get<double>();
        if (it.contains("dt")) cfg.dt = it["dt"].get<double>();
    }
    if (!(cfg.dt > 0.0)) throw ConfigError("integration dt must be positive");
    if (!(cfg.t1 > cfg.t0)) throw ConfigError("integration requires t1 > t0");

    if (j.contains("ic")) {
        if (j["ic"].contains("q")) cfg.q0 = as_doubles(j["ic"]["q"], "ic.q");
        if (j["ic"].contains("v")) cfg.v0 = as_doubles(j["ic"]["v"], "ic.v");
    }
    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        if (o.contains("csv")) cfg.csv = o["csv"].get<std::string>();
        if (o.contains("diagnostics"))
            for (const auto& d : o["diagnostics"]) cfg.diagnostics.push_back(d.get<std::string>());
    }
    if (j.contains("tolerances"))
        for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it)
            cfg.tolerances[it.key()] = it.value().get<double>();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string effective_config(const RunConfig& cfg) {
    json j;
    j["mode"] = cfg.mode;
    if (!cfg.builtin.empty()) {
        j["system"] = cfg.builtin;
    } else {
        json s;
        s["dim"] = cfg.dim;
        s["lagrangian"] = cfg.lagrangian;
        s["force"] = cfg.force;
        json pr = json::object();
        for (const auto& [k, v] : cfg.params) pr[k] = v;
        s["params"] = pr;
        j["system"] = s;
    }
    if (cfg.symmetry) {
        json s;
        json gc = json::array();
        for (int g : cfg.symmetry->group_coords) gc.push_back(g + 1);
        s["group_coords"] = gc;
        if (!cfg.symmetry->generators.empty()) s["generators"] = cfg.symmetry->generators;
        if (!cfg.symmetry->structure_constants.empty())
            s["structure_constants"] = cfg.symmetry->structure_constants;
        if (!cfg.symmetry->A.empty()) s["A"] = cfg.symmetry->A;
        s["mu"] = cfg.symmetry->mu;
        j["symmetry"] = s;
    }
    j["integration"] = {{"t0", cfg.t0}, {"t1", cfg.t1}, {"dt", cfg.dt}};
    j["ic"] = {{"q", cfg.q0}, {"v", cfg.v0}};
    j["outputs"] = {{"csv", cfg.csv}, {"diagnostics", cfg.diagnostics}};
    json tol = json::object();
    for (const auto& [k, v] : cfg.tolerances) tol[k] = v;
    j["tolerances"] = tol;
    return j.dump(2);
}

namespace {

// Slot layout shared by all compiled chart expressions:
// 0 -> t, 1..n -> q, n+1..2n -> v, then the declared parameters.
struct ChartSlots {
    std::map<std::string, int> index;
    std::vector<double> param_values;  // appended after the chart slots
    int n = 0;

    std::vector<double> fill(double t, const Vec& q, const Vec& v) const {
        std::vector<double> s(static_cast<std::size_t>(2 * n + 1) + param_values.size());
        s[0] = t;
        for (int i = 0; i < n; ++i) {
            s[static_cast<std::size_t>(1 + i)] = q[i];
            s[static_cast<std::size_t>(1 + n + i)] = v[i];
        }
        for (std::size_t k = 0; k < param_values.size(); ++k)
            s[static_cast<std::size_t>(2 * n + 1) + k] = param_values[k];
        return s;
    }
};

ChartSlots chart_slots(int n, const std::map<std::string, double>& params) {
    ChartSlots cs;
    cs.n = n;
    cs.index["t"] = 0;
    for (int i = 0; i < n; ++i) {
        cs.index["q" + std::to_string(i + 1)] = 1 + i;
        cs.index["v" + std::to_string(i + 1)] = 1 + n + i;
    }
    int at = 2 * n + 1;
    for (const auto& [k, v] : params) {
        cs.index[k] = at++;
        cs.param_values.push_back(v);
    }
    return cs;
}

ScalarField expression_lagrangian(int n, const std::string& source,
                                  const std::map<std::string, double>& params) {
    std::set<std::string> declared;
    for (const auto& [k, v] : params) declared.insert(k);
    declared = chart_names(n, declared);
    Expression expr = parse(source, &declared);
    ChartSlots cs = chart_slots(n, params);
    CompiledFn fn = compile(expr, cs.index);
    ScalarField f;
    f.dim = n;
    f.eval = [fn, cs](double t, const Vec& q, const Vec& v) {
        auto s = cs.fill(t, q, v);
        return fn(s.data());
    };
    return f;
}

mech::ForceField expression_force(int n, const std::vector<std::string>& comps,
                                  const std::map<std::string, double>& params) {
    if (comps.empty()) return nullptr;
    std::set<std::string> declared;
    for (const auto& [k, v] : params) declared.insert(k);
    declared = chart_names(n, declared);
    ChartSlots cs = chart_slots(n, params);
    std::vector<CompiledFn> fns;
    for (const auto& c : comps) fns.push_back(compile(parse(c, &declared), cs.index));
    return [fns, cs, n](double t, const Vec& q, const Vec& v) {
        auto s = cs.fill(t, q, v);
        Vec out(n);
        for (int i = 0; i < n; ++i) out[i] = fns[static_cast<std::size_t>(i)](s.data());
        return out;
    };
}

BuiltSystem builtin_free_particle() {
    BuiltSystem b;
    b.sys.n = 2;
    b.sys.label = "free_particle";
    b.sys.L.dim = 2;
    b.sys.L.eval = [](double, const Vec&, const Vec& v) { return 0.5 * v.squaredNorm(); };
    b.sys.L.dq = [](double, const Vec& q, const Vec&) { return Vec(Vec::Zero(q.size())); };
    b.sys.L.dv = [](double, const Vec&, const Vec& v) { return v; };
    b.action = symmetry::translation_action(2, {0, 1});
    b.conn = symmetry::flat_connection(2, {0, 1});
    b.mu = Vec::Zero(2);
    b.q0 = Vec::Zero(2);
    b.v0 = to_vec({1.0, 0.5});
    return b;
}

BuiltSystem builtin_harmonic() {
    BuiltSystem b;
    b.sys.n = 1;
    b.sys.label = "harmonic";
    b.sys.L.dim = 1;
    b.sys.L.eval = [](double, const Vec& q, const Vec& v) {
        return 0.5 * v[0] * v[0] - 0.5 * q[0] * q[0];
    };
    b.sys.L.dq = [](double, const Vec& q, const Vec&) { return Vec(-q); };
    b.sys.L.dv = [](double, const Vec&, const Vec& v) { return v; };
    b.q0 = to_vec({1.0});
    b.v0 = to_vec({0.0});
    return b;
}

BuiltSystem builtin_central_force() {
    BuiltSystem b;
    b.sys.n = 2;
    b.sys.label = "central_force";
    b.sys.L.dim = 2;
    b.sys.L.eval = [](double, const Vec& q, const Vec& v) {
        return 0.5 * v[0] * v[0] + 0.5 * q[0] * q[0] * v[1] * v[1] - 0.5 * q[0] * q[0];
    };
    b.sys.L.dq = [](double, const Vec& q, const Vec& v) {
        Vec g(2);
        g << q[0] * v[1] * v[1] - q[0], 0.0;
        return g;
    };
    b.sys.L.dv = [](double, const Vec& q, const Vec& v) {
        Vec g(2);
        g << v[0], q[0] * q[0] * v[1];
        return g;
    };
    b.action = symmetry::translation_action(2, {1});
    b.conn = symmetry::flat_connection(2, {1});
    b.mu = to_vec({1.0});
    b.q0 = to_vec({1.0, 0.0});
    b.v0 = to_vec({0.3, 1.0});  // J = r^2 thetadot = 1
    return b;
}

BuiltSystem builtin_magnetic_kk() {
    BuiltSystem b;
    b.sys.n = 3;
    b.sys.label = "magnetic_kk";
    auto wv = [](const Vec& q, const Vec& v) {
        return v[2] - 0.5 * q[1] * v[0] + 0.5 * q[0] * v[1];
    };
    b.sys.L.dim = 3;
    b.sys.L.eval = [wv](double, const Vec& q, const Vec& v) {
        double w = wv(q, v);
        return 0.5 * (v[0] * v[0] + v[1] * v[1]) + 0.5 * w * w;
    };
    b.sys.L.dq = [wv](double, const Vec& q, const Vec& v) {
        double w = wv(q, v);
        Vec g(3);
        g << w * 0.5 * v[1], w * (-0.5) * v[0], 0.0;
        return g;
    };
    b.sys.L.dv = [wv](double, const Vec& q, const Vec& v) {
        double w = wv(q, v);
        Vec g(3);
        g << v[0] - 0.5 * q[1] * w, v[1] + 0.5 * q[0] * w, w;
        return g;
    };
    b.action = symmetry::translation_action(3, {2});
    b.conn = symmetry::make_connection(3, {2}, [](const Vec& s) {
        Mat A(1, 2);
        A << -0.5 * s[1], 0.5 * s[0];
        return A;
    });
    b.mu = to_vec({1.0});
    b.q0 = Vec::Zero(3);
    b.v0 = to_vec({1.0, 0.0, 1.0});  // J = thetadot + A.v = 1 at the origin
    return b;
}

BuiltSystem builtin_aks(int d) {
    BuiltSystem b;
    b.is_aks = true;
    b.aks_params = (d == 2) ? aks::sl2_params() : aks::sl3_params();
    aks::FeherSystem fs(*b.aks_params);
    // expose the full-chart Lagrangian for reporting; the aks runner drives
    // the FeherSystem directly
    b.sys = fs.full_chart_system(b.aks_params->g0);
    b.q0 = Vec::Zero(b.sys.n);
    b.v0 = Vec::Zero(b.sys.n);
    b.v0.head(fs.chart_dim()) = fs.velocity_coords(b.aks_params->zeta0);
    return b;
}

}  // namespace

BuiltSystem build_system(const RunConfig& cfg) {
    BuiltSystem b;
    if (!cfg.builtin.empty()) {
        if (cfg.builtin == "free_particle") b = builtin_free_particle();
        else if (cfg.builtin == "harmonic") b = builtin_harmonic();
        else if (cfg.builtin == "central_force") b = builtin_central_force();
        else if (cfg.builtin == "magnetic_kk") b = builtin_magnetic_kk();
        else if (cfg.builtin == "aks_sl2") b = builtin_aks(2);
        else if (cfg.builtin == "aks_sl3") b = builtin_aks(3);
        else throw ConfigError("unknown builtin system '" + cfg.builtin + "'");
    } else {
        b.sys.n = cfg.dim;
        b.sys.label = "custom";
        b.sys.L = expression_lagrangian(cfg.dim, cfg.lagrangian, cfg.params);
        b.sys.F = expression_force(cfg.dim, cfg.force, cfg.params);
        b.q0 = Vec::Zero(cfg.dim);
        b.v0 = Vec::Zero(cfg.dim);
    }

    if (cfg.symmetry) {
        const auto& sc = *cfg.symmetry;
        const int n = b.sys.n;
        const int m = static_cast<int>(sc.group_coords.size());
        for (int g : sc.group_coords)
            if (g < 0 || g >= n) throw ConfigError("group coordinate index out of range");

        symmetry::GroupAction action;
        action.m = m;
        if (sc.generators.empty()) {
            action = symmetry::translation_action(n, sc.group_coords);
        } else {
            if (static_cast<int>(sc.generators.size()) != m)
                throw ConfigError("one generator per group coordinate required");
            std::set<std::string> declared;
            for (const auto& [k, v] : cfg.params) declared.insert(k);
            declared = exprlang::chart_names(n, declared);
            ChartSlots cs = chart_slots(n, cfg.params);
            for (const auto& gen : sc.generators) {
                if (static_cast<int>(gen.size()) != n)
                    throw ConfigError("generator components must match the chart dimension");
                std::vector<CompiledFn> fns;
                for (const auto& c : gen)
                    fns.push_back(compile(exprlang::parse(c, &declared), cs.index));
                action.generators.push_back(VectorFieldSpec{
                    n, [fns, cs, n](const Vec& q) {
                        auto s = cs.fill(0.0, q, Vec(Vec::Zero(n)));
                        Vec out(n);
                        for (int i = 0; i < n; ++i) out[i] = fns[static_cast<std::size_t>(i)](s.data());
                        return out;
                    }});
            }
            action.c = sc.structure_constants;
            if (action.c.empty()) action.c.assign(static_cast<std::size_t>(m) * m * m, 0.0);
            if (action.c.size() != static_cast<std::size_t>(m) * m * m)
                throw ConfigError("structure_constants must have m^3 entries");
        }

        if (sc.A.empty()) {
            b.conn = symmetry::flat_connection(n, sc.group_coords);
        } else {
            if (static_cast<int>(sc.A.size()) != m)
                throw ConfigError("connection A needs one row per group coordinate");
            std::set<std::string> declared;
            for (const auto& [k, v] : cfg.params) declared.insert(k);
            declared = exprlang::chart_names(n, declared);
            ChartSlots cs = chart_slots(n, cfg.params);
            std::vector<std::vector<CompiledFn>> rows;
            for (const auto& row : sc.A) {
                if (static_cast<int>(row.size()) != n - m)
                    throw ConfigError("connection A rows must have n-m entries");
                std::vector<CompiledFn> r;
                for (const auto& c : row)
                    r.push_back(compile(exprlang::parse(c, &declared), cs.index));
                rows.push_back(std::move(r));
            }
            auto base = symmetry::flat_connection(n, sc.group_coords).base_coords();
            b.conn = symmetry::make_connection(
                n, sc.group_coords, [rows, cs, base, m, n](const Vec& s) {
                    Vec q = Vec::Zero(n);
                    for (std::size_t i = 0; i < base.size(); ++i)
                        q[base[i]] = s[static_cast<int>(i)];
                    auto slots = cs.fill(0.0, q, Vec(Vec::Zero(n)));
                    Mat A(m, n - m);
                    for (int a = 0; a < m; ++a)
                        for (int i = 0; i < n - m; ++i)
                            A(a, i) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)](
                                slots.data());
                    return A;
                });
        }
        b.action = std::move(action);
        b.mu = to_vec(sc.mu);
    }

    if (!cfg.q0.empty()) {
        if (static_cast<int>(cfg.q0.size()) != b.sys.n)
            throw ConfigError("ic.q dimension does not match the system");
        b.q0 = to_vec(cfg.q0);
    }
    if (!cfg.v0.empty()) {
        if (static_cast<int>(cfg.v0.size()) != b.sys.n)
            throw ConfigError("ic.v dimension does not match the system");
        b.v0 = to_vec(cfg.v0);
    }

    // Registration-time validation: analytic partials against finite
    // differences, and the symmetry block's structural identities.
    if (b.sys.L.dq || b.sys.L.dv || b.sys.L.dt) {
        std::vector<ChartSample> samples;
        for (double eps : {0.0, 0.05, -0.07}) {
            Vec q = b.q0, v = b.v0;
            q.array() += eps;
            v.array() += 0.5 * eps;
            samples.push_back({0.1, q, v});
        }
        validate_partials(b.sys.L, samples);
    }
    if (b.action && !b.is_aks) {
        std::vector<Vec> qs;
        for (double eps : {0.0, 0.1, -0.2}) {
            Vec q = b.q0;
            q.array() += eps;
            qs.push_back(q);
        }
        try {
            symmetry::validate_action(*b.action, qs);
            if (b.conn) symmetry::validate_connection(*b.conn, *b.action, qs);
        } catch (const InvarianceFailure& e) {
            throw ConfigError(std::string("symmetry block is inconsistent: ") + e.what());
        }
    }
    return b;
}

double tolerance(const RunConfig& cfg, const std::string& name, double fallback) {
    auto it = cfg.tolerances.find(name);
    return it == cfg.tolerances.end() ? fallback : it->second;
}

}  // namespace geomech::cli
