#include <cstdio>
#include <fstream>
#include <set>

#include "eivlpe/bench.hpp"

namespace eivlpe {

namespace {

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!ok.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw ConfigError(where + "." + key + ": " + ex.what());
    }
}

template <class T>
void maybe(const json& j, const char* key, T& out, const std::string& where)
{
    if (j.contains(key))
        out = get<T>(j, key, where);
}

std::pair<double, double> get_pair(const json& j, const char* key, const std::string& where)
{
    const auto v = get<std::vector<double>>(j, key, where);
    if (v.size() != 2)
        throw ConfigError(where + "." + key + ": expected [start, end]");
    return {v[0], v[1]};
}

const char* start_name(StartKind k)
{
    switch (k) {
    case StartKind::Database: return "database";
    case StartKind::Zero: return "zero";
    case StartKind::Tls: return "tls";
    }
    return "database";
}

json profile_to_json(const LoadRampProfile& p)
{
    return {{"n_records", p.n_records},
            {"vk_mag", {p.vk_mag.first, p.vk_mag.second}},
            {"vl_mag", {p.vl_mag.first, p.vl_mag.second}},
            {"angle_spread", {p.angle_spread.first, p.angle_spread.second}},
            {"vk_angle", {p.vk_angle.first, p.vk_angle.second}}};
}

LoadRampProfile profile_from_json(const json& j, const std::string& where)
{
    reject_unknown(j, {"n_records", "vk_mag", "vl_mag", "angle_spread", "vk_angle"}, where);
    LoadRampProfile p;
    maybe(j, "n_records", p.n_records, where);
    if (j.contains("vk_mag"))
        p.vk_mag = get_pair(j, "vk_mag", where);
    if (j.contains("vl_mag"))
        p.vl_mag = get_pair(j, "vl_mag", where);
    if (j.contains("angle_spread"))
        p.angle_spread = get_pair(j, "angle_spread", where);
    if (j.contains("vk_angle"))
        p.vk_angle = get_pair(j, "vk_angle", where);
    return p;
}

void apply_estimator_fields(const json& j, EstimatorSpec& s, const std::string& where)
{
    reject_unknown(j,
                   {"label", "method", "step", "kernel_sigma", "max_iters", "tol", "m_max", "inner_tol",
                    "outer_tol", "inner_max", "constrained", "zero_mean", "seed", "w0"},
                   where);
    EstimatorConfig& c = s.config;
    maybe(j, "label", s.label, where);
    if (j.contains("step")) {
        if (j.at("step").is_string()) {
            if (j.at("step") != "auto")
                throw ConfigError(where + ".step: expected a number or \"auto\"");
            c.auto_step = true;
        } else {
            c.step = get<double>(j, "step", where);
            c.auto_step = false;
        }
    }
    maybe(j, "kernel_sigma", c.kernel_sigma, where);
    maybe(j, "max_iters", c.max_iters, where);
    maybe(j, "tol", c.tol, where);
    maybe(j, "m_max", c.egle_m_max, where);
    maybe(j, "inner_tol", c.egle_inner_tol, where);
    maybe(j, "outer_tol", c.egle_outer_tol, where);
    maybe(j, "inner_max", c.egle_inner_max, where);
    maybe(j, "constrained", c.constrained, where);
    maybe(j, "zero_mean", c.egle_zero_mean, where);
    maybe(j, "seed", c.seed, where);
    if (j.contains("w0")) {
        const json& w = j.at("w0");
        if (w.is_string()) {
            const std::string k = w.get<std::string>();
            c.w0.reset();
            if (k == "database")
                c.start = StartKind::Database;
            else if (k == "zero")
                c.start = StartKind::Zero;
            else if (k == "tls")
                c.start = StartKind::Tls;
            else
                throw ConfigError(where + ".w0: expected database, zero, tls or a vector");
        } else {
            const auto v = get<std::vector<double>>(j, "w0", where);
            c.w0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
    }
    try {
        c.validate();
    } catch (const InvalidInput& ex) {
        throw ConfigError(where + ": " + ex.what());
    }
}

}  // namespace

json noise_to_json(const NoiseModel& model)
{
    if (const auto* g = std::get_if<GaussianNoise>(&model))
        return {{"kind", "gaussian"}, {"mu", g->mu}, {"sigma", g->sigma}};
    if (const auto* l = std::get_if<LaplacianNoise>(&model))
        return {{"kind", "laplacian"}, {"mu", l->mu}, {"scale", l->scale}};
    const auto& gm = std::get<GmmModel>(model);
    return {{"kind", "gmm"}, {"weights", gm.weights}, {"means", gm.means}, {"variances", gm.variances}};
}

NoiseModel noise_from_json(const json& j)
{
    const std::string where = "noise";
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("noise: expected an object with a 'kind'");
    const std::string kind = get<std::string>(j, "kind", where);
    NoiseModel model;
    if (kind == "gaussian") {
        reject_unknown(j, {"kind", "mu", "sigma"}, where);
        GaussianNoise g;
        maybe(j, "mu", g.mu, where);
        g.sigma = get<double>(j, "sigma", where);
        model = g;
    } else if (kind == "laplacian") {
        reject_unknown(j, {"kind", "mu", "scale"}, where);
        LaplacianNoise l;
        maybe(j, "mu", l.mu, where);
        l.scale = get<double>(j, "scale", where);
        model = l;
    } else if (kind == "gmm") {
        reject_unknown(j, {"kind", "weights", "means", "variances", "sigmas"}, where);
        GmmModel g;
        g.weights = get<std::vector<double>>(j, "weights", where);
        g.means = get<std::vector<double>>(j, "means", where);
        if (j.contains("variances") == j.contains("sigmas"))
            throw ConfigError("noise: give exactly one of 'variances' or 'sigmas'");
        if (j.contains("variances")) {
            g.variances = get<std::vector<double>>(j, "variances", where);
        } else {
            for (double s : get<std::vector<double>>(j, "sigmas", where))
                g.variances.push_back(s * s);
        }
        model = g;
    } else {
        throw ConfigError("noise: unknown kind '" + kind + "'");
    }
    try {
        validate_noise(model);
    } catch (const InvalidInput& ex) {
        throw ConfigError(std::string("noise: ") + ex.what());
    }
    return model;
}

json estimator_to_json(const EstimatorSpec& spec)
{
    const EstimatorConfig& c = spec.config;
    json j = {{"label", spec.label},
              {"method", method_name(c.method)},
              {"step", c.auto_step ? json("auto") : json(c.step)},
              {"kernel_sigma", c.kernel_sigma},
              {"max_iters", c.max_iters},
              {"tol", c.tol},
              {"m_max", c.egle_m_max},
              {"inner_tol", c.egle_inner_tol},
              {"outer_tol", c.egle_outer_tol},
              {"inner_max", c.egle_inner_max},
              {"constrained", c.constrained},
              {"zero_mean", c.egle_zero_mean},
              {"seed", c.seed}};
    if (c.w0)
        j["w0"] = std::vector<double>(c.w0->data(), c.w0->data() + c.w0->size());
    else
        j["w0"] = start_name(c.start);
    return j;
}

EstimatorSpec estimator_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("method"))
        throw ConfigError("estimator: expected an object with a 'method'");
    EstimatorSpec s;
    try {
        s.config = default_config(parse_method(j.at("method").get<std::string>()));
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("estimator.method: ") + ex.what());
    }
    const std::string where = "estimator " + j.at("method").get<std::string>();
    apply_estimator_fields(j, s, where);
    if (s.label.empty())
        s.label = method_name(s.config.method) + (s.config.constrained ? "-C" : "");
    return s;
}

void BenchConfig::validate() const
{
    if (schema != kSchema)
        throw ConfigError("unsupported schema '" + schema + "', expected '" + kSchema + "'");
    if (scenarios.empty() || estimators.empty() || seeds.empty())
        throw ConfigError("scenarios, estimators and seeds must all be non-empty");
    std::set<std::string> labels, est;
    for (const auto& e : estimators) {
        if (!est.insert(e.label).second)
            throw ConfigError("duplicate estimator label '" + e.label + "'");
    }
    for (const auto& s : scenarios) {
        if (!labels.insert(s.scenario.label).second)
            throw ConfigError("duplicate scenario label '" + s.scenario.label + "'");
        for (const auto& l : s.estimators) {
            if (!est.count(l))
                throw ConfigError("scenario '" + s.scenario.label + "' names unknown estimator '" + l + "'");
        }
        for (const auto& [l, _] : s.overrides) {
            if (!est.count(l))
                throw ConfigError("scenario '" + s.scenario.label + "' overrides unknown estimator '" + l + "'");
        }
        try {
            s.scenario.profile.validate();
            validate_noise(s.scenario.noise);
            params_to_admittance(s.scenario.line);
        } catch (const InvalidInput& ex) {
            throw ConfigError("scenario '" + s.scenario.label + "': " + ex.what());
        }
    }
    if (trace_points < 0 || trace_points == 1)
        throw ConfigError("trace_points must be 0 (keep all) or >= 2");
}

json bench_config_to_json(const BenchConfig& cfg)
{
    json j;
    j["schema"] = cfg.schema;
    j["output_dir"] = cfg.output_dir;
    j["seeds"] = cfg.seeds;
    j["trace_points"] = cfg.trace_points;
    j["estimators"] = json::array();
    for (const auto& e : cfg.estimators)
        j["estimators"].push_back(estimator_to_json(e));
    j["scenarios"] = json::array();
    for (const auto& s : cfg.scenarios) {
        json js = {{"label", s.scenario.label},
                   {"line", {{"r", s.scenario.line.r}, {"x", s.scenario.line.x}, {"b", s.scenario.line.b}}},
                   {"profile", profile_to_json(s.scenario.profile)},
                   {"noise", noise_to_json(s.scenario.noise)}};
        if (!s.study.empty())
            js["study"] = s.study;
        if (!s.estimators.empty())
            js["estimators"] = s.estimators;
        if (!s.overrides.empty()) {
            js["overrides"] = json::object();
            for (const auto& [l, o] : s.overrides)
                js["overrides"][l] = o;
        }
        if (s.records_csv)
            js["records_csv"] = s.records_csv->string();
        j["scenarios"].push_back(js);
    }
    if (cfg.sweep) {
        j["sweep"] = {{"estimators", cfg.sweep->estimators},
                      {"step", cfg.sweep->step},
                      {"kernel_sigma", cfg.sweep->kernel_sigma}};
    }
    return j;
}

BenchConfig bench_config_from_json(const json& j, const fs::path& base_dir)
{
    reject_unknown(j, {"schema", "output_dir", "seeds", "trace_points", "estimators", "scenarios", "sweep"}, "config");
    BenchConfig cfg;
    if (!j.contains("schema"))
        throw ConfigError("config: missing 'schema'");
    cfg.schema = get<std::string>(j, "schema", "config");
    maybe(j, "output_dir", cfg.output_dir, "config");
    maybe(j, "trace_points", cfg.trace_points, "config");
    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        if (s.is_object()) {
            reject_unknown(s, {"start", "count"}, "config.seeds");
            std::uint64_t start = 0;
            int count = 0;
            maybe(s, "start", start, "config.seeds");
            count = get<int>(s, "count", "config.seeds");
            for (int k = 0; k < count; ++k)
                cfg.seeds.push_back(start + static_cast<std::uint64_t>(k));
        } else {
            cfg.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "config");
        }
    }
    if (j.contains("estimators")) {
        for (const json& e : j.at("estimators"))
            cfg.estimators.push_back(estimator_from_json(e));
    }
    if (j.contains("scenarios")) {
        for (const json& s : j.at("scenarios")) {
            const std::string where = "scenario";
            reject_unknown(s, {"label", "study", "line", "profile", "noise", "estimators", "overrides", "records_csv"},
                           where);
            ScenarioSpec sp;
            sp.scenario.label = get<std::string>(s, "label", where);
            const std::string w2 = "scenario '" + sp.scenario.label + "'";
            maybe(s, "study", sp.study, w2);
            if (s.contains("line")) {
                const json& l = s.at("line");
                reject_unknown(l, {"r", "x", "b"}, w2 + ".line");
                sp.scenario.line = {get<double>(l, "r", w2), get<double>(l, "x", w2), get<double>(l, "b", w2)};
            }
            if (s.contains("profile"))
                sp.scenario.profile = profile_from_json(s.at("profile"), w2 + ".profile");
            if (s.contains("noise"))
                sp.scenario.noise = noise_from_json(s.at("noise"));
            maybe(s, "estimators", sp.estimators, w2);
            if (s.contains("overrides")) {
                for (auto it = s.at("overrides").begin(); it != s.at("overrides").end(); ++it)
                    sp.overrides[it.key()] = it.value();
            }
            if (s.contains("records_csv")) {
                fs::path p = get<std::string>(s, "records_csv", w2);
                if (p.is_relative() && !base_dir.empty())
                    p = base_dir / p;
                sp.records_csv = p;
            }
            cfg.scenarios.push_back(std::move(sp));
        }
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        reject_unknown(s, {"estimators", "step", "kernel_sigma"}, "config.sweep");
        Sweep sw;
        maybe(s, "estimators", sw.estimators, "config.sweep");
        maybe(s, "step", sw.step, "config.sweep");
        maybe(s, "kernel_sigma", sw.kernel_sigma, "config.sweep");
        cfg.sweep = sw;
    }
    cfg.validate();
    // Overrides must parse as estimator fields.
    for (const auto& s : cfg.scenarios)
        resolve_estimators(cfg, s);
    return cfg;
}

BenchConfig load_bench_config(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& ex) {
        throw ConfigError(path.string() + ": " + ex.what());
    }
    return bench_config_from_json(j, path.parent_path());
}

std::vector<EstimatorSpec> resolve_estimators(const BenchConfig& cfg, const ScenarioSpec& sc)
{
    std::vector<EstimatorSpec> base;
    for (const auto& e : cfg.estimators) {
        if (!sc.estimators.empty() &&
            std::find(sc.estimators.begin(), sc.estimators.end(), e.label) == sc.estimators.end())
            continue;
        EstimatorSpec s = e;
        if (auto it = sc.overrides.find(e.label); it != sc.overrides.end()) {
            json o = it->second;
            o.erase("label");
            if (o.contains("method"))
                throw ConfigError("scenario '" + sc.scenario.label + "': overrides may not change the method");
            apply_estimator_fields(o, s, "scenario '" + sc.scenario.label + "' override " + e.label);
        }
        base.push_back(std::move(s));
    }
    if (!cfg.sweep)
        return base;
    std::vector<EstimatorSpec> out;
    const Sweep& sw = *cfg.sweep;
    for (const auto& s : base) {
        const bool swept = sw.estimators.empty()
                               ? s.config.method != Method::TLS && s.config.method != Method::EGLE
                               : std::find(sw.estimators.begin(), sw.estimators.end(), s.label) != sw.estimators.end();
        if (!swept) {
            out.push_back(s);
            continue;
        }
        const std::vector<double> steps = sw.step.empty() ? std::vector<double>{s.config.step} : sw.step;
        const std::vector<double> sigmas =
            sw.kernel_sigma.empty() ? std::vector<double>{s.config.kernel_sigma} : sw.kernel_sigma;
        for (double st : steps) {
            for (double sg : sigmas) {
                EstimatorSpec v = s;
                v.config.step = st;
                if (!sw.step.empty())
                    v.config.auto_step = false;
                v.config.kernel_sigma = sg;
                v.label = s.label + "[step=" + short_number(st) + ",sigma=" + short_number(sg) + "]";
                try {
                    v.config.validate();
                } catch (const InvalidInput& ex) {
                    throw ConfigError("sweep: " + std::string(ex.what()));
                }
                out.push_back(std::move(v));
            }
        }
    }
    return out;
}

namespace {

EstimatorSpec spec(Method m, const std::string& label, bool constrained = false)
{
    EstimatorSpec s;
    s.config = default_config(m);
    s.config.constrained = constrained;
    s.label = label;
    return s;
}

}  // namespace

BenchConfig stock_config()
{
    BenchConfig cfg;
    cfg.output_dir = "out";
    cfg.seeds = {0};
    cfg.estimators = {spec(Method::TLS, "TLS"), spec(Method::MTC, "MTC"), spec(Method::CMTC, "CMTC"),
                      spec(Method::EGLE, "EGLE"), spec(Method::MTEE, "MTEE")};
    const GmmModel gmm{{0.3, 0.7}, {0.0, 0.01}, {0.002 * 0.002, 0.002 * 0.002}};
    for (const char* l : {"L_8-9", "L_9-10", "L_8-30", "L_26-30", "L_30-38", "L_38-65", "L_63-64", "L_64-65",
                          "L_65-68", "L_68-81"}) {
        ScenarioSpec s;
        s.scenario.label = l;
        s.scenario.noise = gmm;
        cfg.scenarios.push_back(s);
    }
    return cfg;
}

BenchConfig studies_config()
{
    BenchConfig cfg;
    cfg.output_dir = "out/studies";
    for (std::uint64_t s = 0; s < 10; ++s)
        cfg.seeds.push_back(s);
    cfg.estimators = {spec(Method::TLS, "TLS"),   spec(Method::MTC, "MTC"),
                      spec(Method::CMTC, "CMTC"), spec(Method::EGLE, "EGLE"),
                      spec(Method::EGLE, "EGLE-C", true), spec(Method::MTEE, "MTEE")};
    struct Study {
        const char* name;
        NoiseModel noise;
        int mtee_records;
    };
    const std::vector<Study> studies = {
        {"gaussian", GaussianNoise{0.0, 0.005}, 100},
        {"laplacian", LaplacianNoise{0.0, 0.005}, 250},
        {"gmm", GmmModel{{0.3, 0.7}, {0.0, 0.01}, {0.002 * 0.002, 0.002 * 0.002}}, 250},
    };
    for (const auto& st : studies) {
        const std::string study = std::string("L_64-65_") + st.name;
        ScenarioSpec main;
        main.scenario.label = study;
        main.scenario.noise = st.noise;
        main.scenario.profile.n_records = 1000;
        main.study = study;
        main.estimators = {"TLS", "MTC", "CMTC", "EGLE", "EGLE-C"};
        cfg.scenarios.push_back(main);
        ScenarioSpec mtee = main;
        mtee.scenario.label = study + "_n" + std::to_string(4 * st.mtee_records);
        mtee.scenario.profile.n_records = st.mtee_records;
        mtee.estimators = {"MTEE"};
        cfg.scenarios.push_back(mtee);
    }
    return cfg;
}

}  // namespace eivlpe
