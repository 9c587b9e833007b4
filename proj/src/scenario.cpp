#include "mc2d/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mc2d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDetectorLo = 2.05;
constexpr double kDetectorHi = 2.20;

using nlohmann::json;

Scene flat_preset() {
    Scene sc;
    sc.id = "flat";
    sc.materials = {
        {"absorb", 0.0, 0.0, 1.0, false},
        {"lambert", 1.0, 0.0, 1.0, false},
        {"detector", 0.0, 0.0, 1.0, true},
    };
    sc.profile = make_flat_profile({-2.5, 2.5}, {kDetectorLo, kDetectorHi},
                                   {0, 1, 0}, {0, 2, 0}, 0, 0);
    sc.source.present = true;
    sc.source.profile = SourceProfile::Uniform;
    sc.detector_a = {kPi, kDetectorLo};
    sc.detector_b = {kPi, kDetectorHi};
    sc.has_detector = true;
    return sc;
}

Scene cos3_preset() {
    Scene sc;
    sc.id = "cos3";
    sc.materials = {
        {"absorb", 0.0, 0.0, 1.0, false},
        {"band_left", 0.35, 0.25, 0.05, false},
        {"band_right", 0.75, 0.25, 0.05, false},
        {"detector", 0.0, 0.0, 1.0, true},
    };
    sc.profile = make_cos3_profile({-2.5, 1.0, 2.5}, {kDetectorLo, kDetectorHi},
                                   {0, 1, 2, 0}, {0, 3, 0}, 0, 0);
    sc.source.present = true;
    sc.source.profile = SourceProfile::PaperSin;
    sc.detector_a = {kPi, kDetectorLo};
    sc.detector_b = {kPi, kDetectorHi};
    sc.has_detector = true;
    return sc;
}

Scene circle_preset() {
    Scene sc;
    sc.id = "circle";
    sc.materials = {
        {"detector", 0.0, 0.0, 1.0, true},
        {"gray", 0.5, 0.0, 1.0, false},
    };
    sc.profile = make_circle_profile(1.0, {-0.1, 0.1}, {0, 1});
    sc.source.present = false;
    sc.detector_a = unit_from_angle(-0.1);
    sc.detector_b = unit_from_angle(0.1);
    sc.has_detector = true;
    sc.diameter = 2.0;
    return sc;
}

SurfaceMaterial material_from_json(const json& j) {
    SurfaceMaterial m;
    m.name = j.value("name", "material");
    m.c0 = j.value("c0", 0.0);
    m.amp = j.value("amp", 0.0);
    m.period = j.value("period", 1.0);
    m.detector = j.value("detector", false);
    if (m.period <= 0.0)
        throw std::invalid_argument("material '" + m.name + "': period must be positive");
    return m;
}

Scene scene_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("scenario file not found: " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::invalid_argument("scenario parse error in " + path + ": " + e.what());
    }

    std::string base = j.value("base", "flat");
    Scene sc;
    if (base == "flat") sc = flat_preset();
    else if (base == "cos3") sc = cos3_preset();
    else if (base == "circle") sc = circle_preset();
    else throw std::invalid_argument("scenario key 'base': unknown id '" + base + "'");
    sc.id = j.value("id", base);

    if (j.contains("materials")) {
        const auto& ms = j.at("materials");
        if (!ms.is_array())
            throw std::invalid_argument("scenario key 'materials': expected array");
        for (size_t k = 0; k < ms.size() && k < sc.materials.size(); ++k)
            sc.materials[k] = material_from_json(ms[k]);
    }
    if (j.contains("volume")) {
        const auto& v = j.at("volume");
        sc.vol.bg_sigma_a = v.value("sigma_a", 0.0);
        sc.vol.bg_sigma_s = v.value("sigma_s", 0.0);
        std::string ph = v.value("phase", "paper");
        if (ph == "paper") sc.vol.phase = PhaseKind::PaperSquare;
        else if (ph == "isotropic") sc.vol.phase = PhaseKind::Isotropic;
        else throw std::invalid_argument("scenario key 'volume.phase': unknown '" + ph + "'");
        for (const auto& r : v.value("regions", json::array())) {
            BoxRegion box;
            box.lo = {r.at("lo")[0].get<double>(), r.at("lo")[1].get<double>()};
            box.hi = {r.at("hi")[0].get<double>(), r.at("hi")[1].get<double>()};
            box.sigma_a = r.value("sigma_a", 0.0);
            box.sigma_s = r.value("sigma_s", 0.0);
            sc.vol.regions.push_back(box);
        }
    }
    if (j.contains("source")) {
        const auto& s = j.at("source");
        sc.source.x_lo = s.value("x_lo", sc.source.x_lo);
        sc.source.x_hi = s.value("x_hi", sc.source.x_hi);
        std::string pr = s.value("profile", "uniform");
        if (pr == "uniform") sc.source.profile = SourceProfile::Uniform;
        else if (pr == "sin") sc.source.profile = SourceProfile::PaperSin;
        else throw std::invalid_argument("scenario key 'source.profile': unknown '" + pr + "'");
    }
    sc.diameter = j.value("diameter", sc.diameter);
    try {
        sc.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument("scenario " + path + ": " + e.what());
    }
    return sc;
}
} // namespace

std::string chain_name(ChainKind k) {
    switch (k) {
    case ChainKind::Analog: return "analog";
    case ChainKind::SurvivalBiasing: return "sb";
    case ChainKind::Heuristic: return "heuristic";
    case ChainKind::Sai: return "sai";
    }
    return "?";
}

ChainKind chain_from_name(const std::string& s) {
    if (s == "analog") return ChainKind::Analog;
    if (s == "sb" || s == "survival" || s == "survival-biasing") return ChainKind::SurvivalBiasing;
    if (s == "heuristic" || s == "heu") return ChainKind::Heuristic;
    if (s == "sai") return ChainKind::Sai;
    throw std::invalid_argument("unknown chain '" + s + "'");
}

Scene load_scenario(const std::string& id_or_path, double mfp_mult) {
    Scene sc;
    if (id_or_path == "flat") sc = flat_preset();
    else if (id_or_path == "cos3") sc = cos3_preset();
    else if (id_or_path == "circle") sc = circle_preset();
    else sc = scene_from_file(id_or_path);

    if (!std::isnan(mfp_mult)) {
        if (mfp_mult <= 0.0)
            throw std::invalid_argument("mfp_mult must be positive (use inf for sigma = 0)");
        double sigma = std::isinf(mfp_mult) ? 0.0 : 1.0 / (mfp_mult * sc.diameter);
        sc.vol.bg_sigma_a = sigma / 3.0;       // sigma_s = 2 sigma_a
        sc.vol.bg_sigma_s = 2.0 * sigma / 3.0;
        sc.vol.regions.clear();
    }
    sc.validate();
    return sc;
}

SweepResult run_sweep(const RunSpec& spec) {
    SweepResult out;
    const bool needs_field = spec.chain == ChainKind::Sai;
    std::map<double, std::shared_ptr<AdjointField>> field_cache;
    std::map<double, std::shared_ptr<BoundaryMesh>> mesh_cache;

    for (double mfp : spec.mfp_mult) {
        Scene scene = load_scenario(spec.scenario, mfp);
        for (double h : spec.h) {
            std::shared_ptr<AdjointField> field;
            std::shared_ptr<BoundaryMesh> mesh;
            if (needs_field) {
                auto it = field_cache.find(h);
                if (it == field_cache.end()) {
                    mesh = std::make_shared<BoundaryMesh>(build_mesh(scene.profile, h));
                    field = std::make_shared<AdjointField>(
                        build_adjoint_field(scene, *mesh, spec.jacobian));
                    mesh_cache[h] = mesh;
                    field_cache[h] = field;
                    ++out.radiosity_solves;
                } else {
                    field = it->second;
                    mesh = mesh_cache[h];
                }
            }
            for (double qs : spec.qs) {
                for (double qv : spec.qv) {
                    ResultRow row;
                    row.record.scenario = scene.id;
                    row.record.chain = spec.chain;
                    row.record.h = h;
                    row.record.qs = qs;
                    row.record.qv = qv;
                    row.record.mfp_mult = mfp;
                    row.record.seed = spec.seed;
                    try {
                        ChainSpec cs;
                        cs.scene = &scene;
                        cs.field = field.get();
                        cs.kind = spec.chain;
                        cs.qs = qs;
                        cs.qv = qv;
                        cs.rotation = spec.rotation;
                        cs.collision_cap = spec.collision_cap;
                        BatchResult br = run_batch(cs, spec.shots, spec.seed, spec.threads);
                        row.record = br.record;
                        row.record.scenario = scene.id;
                        row.record.h = h;
                        row.record.mfp_mult = mfp;
                        row.record.t0_seconds = field ? field->t0_seconds : 0.0;
                        row.counters = br.counters;
                        out.total_shots += br.record.shots;
                        out.cap_hits += br.counters.cap_hits;
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                    out.rows.push_back(std::move(row));
                }
            }
        }
    }
    return out;
}

namespace {
void write_row_values(std::ostream& os, const EstimateRecord& r, char sep) {
    os.precision(17);
    os << r.scenario << sep << chain_name(r.chain) << sep << r.h << sep << r.qs << sep
       << r.qv << sep << r.mfp_mult << sep << r.shots << sep << r.mean << sep
       << r.variance << sep << r.stderror << sep << r.shots_per_sec << sep
       << r.t0_seconds << sep << figure_of_merit(r, kFomReuse, kFomEps) << sep
       << figure_of_merit(r, std::numeric_limits<double>::infinity(), kFomEps) << sep
       << r.seed;
}
} // namespace

void emit_results(const std::vector<ResultRow>& rows, EmitFormat format,
                  const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("emit_results: empty table");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("emit_results: cannot open " + path);
    if (format == EmitFormat::Csv) {
        f << "scenario,chain,h,q_s,q_v,mfp_mult,N,mean,variance,stderr,shots_per_sec,"
             "t0_seconds,fom_m10,fom_minf,seed\n";
        for (const auto& row : rows) {
            write_row_values(f, row.record, ',');
            f << '\n';
        }
    } else {
        json arr = json::array();
        for (const auto& row : rows) {
            const auto& r = row.record;
            json o;
            o["scenario"] = r.scenario;
            o["chain"] = chain_name(r.chain);
            o["h"] = r.h;
            o["q_s"] = r.qs;
            o["q_v"] = r.qv;
            o["mfp_mult"] = r.mfp_mult;
            o["N"] = r.shots;
            o["mean"] = r.mean;
            o["variance"] = r.variance;
            o["stderr"] = r.stderror;
            o["shots_per_sec"] = r.shots_per_sec;
            o["t0_seconds"] = r.t0_seconds;
            o["fom_m10"] = figure_of_merit(r, kFomReuse, kFomEps);
            o["fom_minf"] =
                figure_of_merit(r, std::numeric_limits<double>::infinity(), kFomEps);
            o["seed"] = r.seed;
            arr.push_back(o);
        }
        f << arr.dump(1) << '\n';
    }
}

void emit_adjoint(const std::string& scenario, double h, JacobianConvention conv,
                  const std::string& path) {
    Scene sc = load_scenario(scenario);
    BoundaryMesh mesh = build_mesh(sc.profile, h);
    AdjointField field = build_adjoint_field(sc, mesh, conv);
    dump_adjoint_csv(field, path);
}

void emit_mesh(const std::string& scenario, double h, const std::string& path) {
    Scene sc = load_scenario(scenario);
    BoundaryMesh mesh = build_mesh(sc.profile, h);
    dump_mesh_csv(mesh, path);
}

} // namespace mc2d
