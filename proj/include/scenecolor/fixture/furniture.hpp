#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scenecolor/core/random.hpp"
#include "scenecolor/datastore/datastore.hpp"
#include "scenecolor/geometry/primitives.hpp"

namespace scenecolor::fixture {

using datastore::SchemeLabel;
using datastore::SegmentationScheme;
using geometry::TriangleMesh;
using geometry::Vec3;

/// Draws shape parameters; held-out models extend every range upward by
/// `widen` times its width, so test meshes go beyond the training shapes.
struct Sampler {
  Rng& rng;
  double widen = 0.0;

  double operator()(double lo, double hi) { return rng.uniform(lo, hi + widen * (hi - lo)); }
  bool chance(double p) { return rng.uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng.index(n)); }
};

/// Procedural furniture model with every component tagged by its role
/// (seat, leg, ...). Schemes map roles to part labels.
struct FurnitureModel {
  TriangleMesh mesh;
  std::map<std::string, std::string> role;  // component id -> role
};

/// A scheme in role terms: role -> label, plus each label's material.
struct SchemeDef {
  SegmentationScheme scheme;
  std::map<std::string, std::string> label_of_role;
};

struct CategoryDef {
  std::string name;
  std::vector<SchemeDef> schemes;  // first is the evaluated scheme
  std::function<FurnitureModel(Sampler&)> generate;
};

namespace detail {

inline void add(FurnitureModel& m, const TriangleMesh& part, const std::string& id, const std::string& role) {
  geometry::append_component(m.mesh, part, id);
  m.role[id] = role;
}

inline geometry::TriangleMesh box(double x0, double y0, double z0, double x1, double y1, double z1, int n = 1) {
  return geometry::make_box({x0, y0, z0}, {x1, y1, z1}, n);
}

inline void four_legs(FurnitureModel& m, double w, double d, double h, double t, double inset,
                      const std::string& role) {
  int k = 0;
  for (double x : {inset, w - inset - t})
    for (double z : {inset, d - inset - t}) add(m, box(x, 0.0, z, x + t, h, z + t), "leg" + std::to_string(k++), role);
}

inline SchemeDef scheme(std::string id, std::string category, std::vector<SchemeLabel> labels,
                        std::map<std::string, std::string> label_of_role) {
  return {{std::move(id), std::move(category), std::move(labels)}, std::move(label_of_role)};
}

}  // namespace detail

inline FurnitureModel make_chair(Sampler& u) {
  using detail::add, detail::box;
  FurnitureModel m;
  m.mesh.category = "chair";
  const double w = u(0.40, 0.50), d = u(0.38, 0.48), h = u(0.40, 0.48);
  const double st = u(0.04, 0.08), bh = u(0.35, 0.55), bt = u(0.03, 0.05);
  const double lt = u(0.03, 0.06);
  add(m, box(0.0, h, 0.0, w, h + st, d, 2), "seat", "seat");
  if (u.chance(0.5)) {
    add(m, box(0.0, h + st, d - bt, w, h + st + bh, d, 2), "back", "back");
  } else {
    // Slatted back: a top rail over vertical sticks.
    const double rail = u(0.06, 0.10);
    add(m, box(0.0, h + st + bh - rail, d - bt, w, h + st + bh, d, 2), "back", "back");
    const int slats = 2 + static_cast<int>(u.index(3));
    for (int k = 0; k < slats; ++k) {
      const double x = (k + 1) * w / (slats + 1) - lt / 2;
      add(m, box(x, h + st, d - bt, x + lt, h + st + bh - rail, d - bt + lt), "slat" + std::to_string(k), "back");
    }
  }
  if (u.chance(0.5)) {
    detail::four_legs(m, w, d, h, lt, 0.01, "leg");
  } else {
    int k = 0;
    for (double x : {0.01 + lt / 2, w - 0.01 - lt / 2})
      for (double z : {0.01 + lt / 2, d - 0.01 - lt / 2})
        add(m, geometry::make_cylinder({x, 0.0, z}, lt / 2, h, 8), "leg" + std::to_string(k++), "leg");
  }
  return m;
}

/// Held-out chair with a thick upholstered back. Its back faces look like
/// seat faces to the per-triangle classifier; the component descriptor
/// still identifies the back.
inline FurnitureModel make_padded_chair() {
  using detail::add, detail::box;
  FurnitureModel m;
  m.mesh.category = "chair";
  const double w = 0.45, d = 0.42, h = 0.44, st = 0.06, bt = 0.12, bh = 0.25;
  add(m, box(0.0, h, 0.0, w, h + st, d, 2), "seat", "seat");
  add(m, box(0.0, h + st, d - bt, w, h + st + bh, d, 2), "back", "back");
  detail::four_legs(m, w, d, h, 0.04, 0.01, "leg");
  return m;
}

inline FurnitureModel make_table(Sampler& u) {
  using detail::add, detail::box;
  FurnitureModel m;
  m.mesh.category = "table";
  const double w = u(0.8, 1.6), d = u(0.6, 1.0), h = u(0.70, 0.78);
  const double tt = u(0.03, 0.06), lt = u(0.04, 0.08);
  add(m, box(0.0, h - tt, 0.0, w, h, d, 3), "top", "top");
  if (u.chance(0.3)) {
    // Pedestal: one column on a foot plate.
    add(m, geometry::make_cylinder({w / 2, 0.03, d / 2}, 2 * lt, h - tt - 0.03, 12), "column", "leg");
    add(m, box(w / 2 - 0.25, 0.0, d / 2 - 0.25, w / 2 + 0.25, 0.03, d / 2 + 0.25), "foot", "leg");
  } else {
    detail::four_legs(m, w, d, h - tt, lt, 0.04, "leg");
    if (u.chance(0.5)) {
      add(m, box(0.04, h - tt - 0.08, 0.04, w - 0.04, h - tt, 0.06), "apron0", "apron");
      add(m, box(0.04, h - tt - 0.08, d - 0.06, w - 0.04, h - tt, d - 0.04), "apron1", "apron");
    }
  }
  return m;
}

inline FurnitureModel make_sofa(Sampler& u) {
  using detail::add, detail::box;
  FurnitureModel m;
  m.mesh.category = "sofa";
  const double w = u(1.6, 2.2), d = u(0.80, 0.95), f = u(0.08, 0.12);
  const double bh = u(0.20, 0.30), aw = u(0.12, 0.20), ah = u(0.20, 0.30);
  const double bt = u(0.15, 0.22), ch = u(0.10, 0.16), backh = u(0.35, 0.50);
  const int cushions = 2 + static_cast<int>(u.index(2));
  add(m, box(0.0, f, 0.0, w, f + bh, d, 2), "base", "base");
  add(m, box(aw, f + bh, d - bt, w - aw, f + bh + backh, d, 2), "backrest", "backrest");
  add(m, box(0.0, f + bh, 0.0, aw, f + bh + ah, d, 2), "arm0", "arm");
  add(m, box(w - aw, f + bh, 0.0, w, f + bh + ah, d, 2), "arm1", "arm");
  const double cw = (w - 2 * aw) / cushions;
  for (int c = 0; c < cushions; ++c)
    add(m, box(aw + c * cw + 0.005, f + bh, 0.0, aw + (c + 1) * cw - 0.005, f + bh + ch, d - bt, 2),
        "cushion" + std::to_string(c), "cushion");
  detail::four_legs(m, w, d, f, 0.05, 0.03, "foot");
  return m;
}

inline FurnitureModel make_bed(Sampler& u) {
  using detail::add, detail::box;
  FurnitureModel m;
  m.mesh.category = "bed";
  const double w = u(1.4, 1.9), l = u(2.0, 2.2), f = u(0.10, 0.20);
  const double bh = u(0.15, 0.25), mh = u(0.18, 0.28), hh = u(0.5, 0.9);
  add(m, box(0.0, f, 0.0, w, f + bh, l, 2), "base", "base");
  add(m, box(0.03, f + bh, 0.03, w - 0.03, f + bh + mh, l - 0.08, 2), "mattress", "mattress");
  add(m, box(0.0, 0.0, l - 0.08, w, f + bh + mh + hh, l, 2), "headboard", "headboard");
  const double pw = (w - 0.2) / 2.0;
  for (int p = 0; p < 2; ++p)
    add(m, box(0.08 + p * (pw + 0.04), f + bh + mh, l - 0.55, 0.08 + p * (pw + 0.04) + pw, f + bh + mh + 0.12, l - 0.12),
        "pillow" + std::to_string(p), "pillow");
  detail::four_legs(m, w, l - 0.08, f, 0.06, 0.02, "leg");
  return m;
}

inline FurnitureModel make_cabinet(Sampler& u) {
  using detail::add, detail::box;
  FurnitureModel m;
  m.mesh.category = "cabinet";
  const double w = u(0.8, 1.2), h = u(0.8, 1.6), d = u(0.40, 0.50);
  const double dt = u(0.015, 0.03);
  add(m, box(0.0, 0.0, 0.0, w, h, d, 2), "body", "body");
  const double dw = (w - 0.06) / 2.0;
  for (int k = 0; k < 2; ++k) {
    const double x0 = 0.02 + k * (dw + 0.02);
    add(m, box(x0, 0.05, -dt, x0 + dw, h - 0.05, 0.0, 2), "door" + std::to_string(k), "door");
    const double hx = k == 0 ? x0 + dw - 0.06 : x0 + 0.03;
    add(m, box(hx, h / 2 - 0.08, -dt - 0.03, hx + 0.03, h / 2 + 0.08, -dt), "handle" + std::to_string(k), "handle");
  }
  return m;
}

inline FurnitureModel make_lamp(Sampler& u) {
  using detail::add;
  FurnitureModel m;
  m.mesh.category = "lamp";
  const double br = u(0.10, 0.15), ph = u(1.2, 1.6), sr = u(0.15, 0.25);
  const double sh = u(0.25, 0.35);
  add(m, geometry::make_cylinder({0, 0, 0}, br, 0.03, 16), "base", "base");
  add(m, geometry::make_cylinder({0, 0.03, 0}, 0.015, ph, 8), "pole", "pole");
  add(m, geometry::make_cylinder({0, 0.03 + ph, 0}, sr, sh, 16), "shade", "shade");
  return m;
}

/// Closed category and part taxonomy of the fixture corpus.
inline const std::vector<CategoryDef>& categories() {
  using detail::scheme;
  static const std::vector<CategoryDef> defs = {
      {"bed",
       {scheme("bed.frame-mattress-pillows", "bed", {{"frame", "wood"}, {"mattress", "fabric"}, {"pillows", "fabric"}},
               {{"base", "frame"}, {"headboard", "frame"}, {"leg", "frame"}, {"mattress", "mattress"}, {"pillow", "pillows"}}),
        scheme("bed.frame-bedding", "bed", {{"frame", "wood"}, {"bedding", "fabric"}},
               {{"base", "frame"}, {"headboard", "frame"}, {"leg", "frame"}, {"mattress", "bedding"}, {"pillow", "bedding"}})},
       make_bed},
      {"cabinet",
       {scheme("cabinet.body-doors-handles", "cabinet", {{"body", "wood"}, {"doors", "wood"}, {"handles", "metal"}},
               {{"body", "body"}, {"door", "doors"}, {"handle", "handles"}}),
        scheme("cabinet.whole", "cabinet", {{"whole", "wood"}},
               {{"body", "whole"}, {"door", "whole"}, {"handle", "whole"}})},
       make_cabinet},
      {"chair",
       {scheme("chair.seat-back-legs", "chair", {{"seat", "fabric"}, {"back", "wood"}, {"legs", "wood"}},
               {{"seat", "seat"}, {"back", "back"}, {"leg", "legs"}}),
        scheme("chair.cushion-frame", "chair", {{"cushion", "fabric"}, {"frame", "wood"}},
               {{"seat", "cushion"}, {"back", "frame"}, {"leg", "frame"}}),
        scheme("chair.whole", "chair", {{"whole", "wood"}}, {{"seat", "whole"}, {"back", "whole"}, {"leg", "whole"}})},
       make_chair},
      {"lamp",
       {scheme("lamp.shade-stand", "lamp", {{"shade", "fabric"}, {"stand", "metal"}},
               {{"base", "stand"}, {"pole", "stand"}, {"shade", "shade"}})},
       make_lamp},
      {"sofa",
       {scheme("sofa.cushions-frame-feet", "sofa", {{"cushions", "fabric"}, {"frame", "leather"}, {"feet", "wood"}},
               {{"base", "frame"}, {"backrest", "frame"}, {"arm", "frame"}, {"cushion", "cushions"}, {"foot", "feet"}}),
        scheme("sofa.upholstery-feet", "sofa", {{"upholstery", "fabric"}, {"feet", "wood"}},
               {{"base", "upholstery"}, {"backrest", "upholstery"}, {"arm", "upholstery"}, {"cushion", "upholstery"},
                {"foot", "feet"}})},
       make_sofa},
      {"table",
       {scheme("table.top-legs", "table", {{"top", "wood"}, {"legs", "metal"}}, {{"top", "top"}, {"apron", "top"}, {"leg", "legs"}}),
        scheme("table.whole", "table", {{"whole", "wood"}}, {{"top", "whole"}, {"apron", "whole"}, {"leg", "whole"}})},
       make_table},
  };
  return defs;
}

inline const CategoryDef& category(const std::string& name) {
  for (const auto& c : categories())
    if (c.name == name) return c;
  fail(ErrorCode::UnknownCategory, "fixture has no category " + name);
}

/// Component -> label map of `m` under `def`.
inline std::map<std::string, std::string> labels_under(const FurnitureModel& m, const SchemeDef& def) {
  std::map<std::string, std::string> out;
  for (const auto& [comp, role] : m.role) out[comp] = def.label_of_role.at(role);
  return out;
}

}  // namespace scenecolor::fixture
