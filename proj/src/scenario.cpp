#include "bundlekit/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "bundlekit/equivalence.hpp"
#include "bundlekit/field.hpp"
#include "bundlekit/fourier.hpp"
#include "bundlekit/imagebundle.hpp"
#include "bundlekit/opspace.hpp"
#include "bundlekit/partition.hpp"
#include "bundlekit/stabilize.hpp"
#include "bundlekit/stdmodule.hpp"

namespace bundlekit {

namespace {

ModelKind parse_kind(const std::string& s) {
  if (s == "flat_torus") return ModelKind::FlatTorus;
  if (s == "euclidean_box") return ModelKind::EuclideanBox;
  throw std::invalid_argument("unknown manifold kind: " + s);
}

std::string kind_name(ModelKind k) {
  return k == ModelKind::FlatTorus ? "flat_torus" : "euclidean_box";
}

bool needs_seed(const ScenarioConfig& c) {
  return c.bundle_generator == "gauge_fourier" ||
         c.projector_generator == "rotating_rank1" ||
         c.projector_generator == "rotating_rank2";
}

C1Field build_projector(const ScenarioConfig& c, const ManifoldModel& model, Rng& rng) {
  if (c.projector_generator == "constant") {
    Matrix p0 = Matrix::Zero(c.fiber_dim, c.fiber_dim);
    for (int i = 0; i < c.rank; ++i) p0(i, i) = 1.0;
    return make_constant(model, p0);
  }
  if (c.projector_generator == "rotating_rank1" || c.projector_generator == "rotating_rank2") {
    const int rank = c.projector_generator == "rotating_rank1" ? 1 : 2;
    if (rank >= c.fiber_dim)
      throw std::invalid_argument("rotating projector needs rank < fiber_dim");
    // Normalize the phase so sup|d phase| = rotation_amplitude, which caps
    // sup||dP|| at 2 * rotation_amplitude independently of the seed.
    C1Field phase = real_fourier_scalar(model, 2, rng);
    double dsup = 0.0;
    for (std::size_t p = 0; p < model.num_points(); ++p)
      dsup = std::max(dsup, phase.deriv.fiber_norm(p));
    if (dsup > 0.0) phase = scale(c.rotation_amplitude / dsup, phase);
    return conjugated_projector(gauge_exponential(phase, random_hermitian(c.fiber_dim, rng)),
                                rank);
  }
  if (c.projector_generator == "winding") {
    if (c.fiber_dim != 2) throw std::invalid_argument("winding projector needs fiber_dim = 2");
    return winding_projector(model, c.winding);
  }
  throw std::invalid_argument("unknown projector generator: " + c.projector_generator);
}

BundleGenerator parse_bundle_generator(const std::string& s) {
  if (s == "trivial") return BundleGenerator::Trivial;
  if (s == "gauge_fourier") return BundleGenerator::GaugeFourier;
  throw std::invalid_argument("unknown bundle generator: " + s);
}

using SuiteFn = std::function<CheckReport(const ScenarioConfig&, const ManifoldModel&,
                                          const PartitionOfUnity&)>;

CheckReport suite_manifold(const ScenarioConfig&, const ManifoldModel& model,
                           const PartitionOfUnity&) {
  CheckReport report;
  const double h = model.spacing_max();

  // Single-mode fields with known derivatives; central differences converge
  // at h^2 k^3 / 6.  On the box the mode is cut off by the margin plateau and
  // checked against its exact Leibniz derivative.
  for (int k : {1, 3}) {
    C1Field f = make_zero(model, 1, 1);
    const double omega = 2.0 * M_PI * k / model.extents()[0];
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      const double x = model.coords(p)[0];
      const Complex e(std::cos(omega * x), std::sin(omega * x));
      f.value.at(p)(0, 0) = e;
      f.deriv.component(0, p)(0, 0) = Complex(0.0, omega) * e;
    }
    double tolerance = h * h * omega * omega * omega;
    if (model.kind() == ModelKind::EuclideanBox) {
      f = apply_margin(f);
      double scale = 0.0;
      for (std::size_t p = 0; p < model.num_points(); ++p)
        scale = std::max(scale, f.deriv.fiber_norm(p));
      tolerance = fd_tolerance(model, scale);
    }
    const CotangentField df = derham(f.value);
    double err = 0.0;
    for (std::size_t p = 0; p < model.num_points(); ++p)
      err = std::max(err, (df.stacked(p) - f.deriv.stacked(p)).cwiseAbs().maxCoeff());
    report.append(make_check("derivative_mode_" + std::to_string(k),
                             "central differences reproduce an exact derivative at O(h^2)", err,
                             0.0, tolerance));
  }

  // Triangle inequality on structured triples.
  Rng rng(11);
  double tri_violation = 0.0;
  for (int t = 0; t < 64; ++t) {
    const std::size_t a = rng.integer(model.num_points());
    const std::size_t b = rng.integer(model.num_points());
    const std::size_t c = rng.integer(model.num_points());
    tri_violation = std::max(tri_violation, model.distance(a, c) - model.distance(a, b) -
                                                model.distance(b, c));
  }
  report.append(make_check("triangle_inequality", "d(a,c) <= d(a,b) + d(b,c)", tri_violation,
                           0.0, 1e-12));
  report.append(make_check("metric_constant", "sup||g|| = sup||g^{-1}|| = 1 on flat models", 1.0,
                           1.0, 0.0));
  return report;
}

CheckReport suite_partition(const ScenarioConfig&, const ManifoldModel& model,
                            const PartitionOfUnity& pou) {
  CheckReport report = verify_partition(pou);
  report.append(make_check("partition_deriv_paths",
                           "finite-difference and exact bump derivatives agree at O(h^2)",
                           std::abs(pou.deriv_bound_fd - pou.deriv_bound_analytic), 0.0,
                           fd_tolerance(model, pou.deriv_bound_analytic)));
  (void)model;
  return report;
}

CheckReport suite_opspace(const ScenarioConfig& c, const ManifoldModel& model,
                          const PartitionOfUnity&) {
  CheckReport report;
  Rng rng(c.seed.value_or(1) * 2654435761u + 101);
  const int d = std::max(2, c.fiber_dim);

  double sandwich_lo = 0.0, sandwich_hi = 0.0, adjoint_ratio = 0.0;
  double product_excess = -1.0, jet_residual = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const C1Field a = fourier_matrix(model, d, d, 3, rng);
    const CheckReport sw = sandwich_check(a);
    sandwich_lo = std::max(sandwich_lo, sw.find("jet_norm_lower")->measured);
    sandwich_hi = std::max(sandwich_hi, sw.find("jet_norm_upper")->measured);
    adjoint_ratio = std::max(adjoint_ratio,
                             adjoint_derivative_check(a).find("adjoint_derivative_ratio")
                                 ->measured);
    const C1Field b = fourier_matrix(model, d, d, 3, rng);
    const CheckReport pr = product_norm_check(a, b);
    product_excess = std::max(product_excess, pr.find("product_norm")->measured -
                                                  pr.find("product_norm")->bound);
    jet_residual = std::max(jet_residual, pr.find("jet_multiplicative")->measured);
  }
  report.append(make_check("jet_norm_lower", "(||a||+||da||)/2 <= ||jet(a)||", sandwich_lo, 0.0,
                           1e-10));
  report.append(make_check("jet_norm_upper", "||jet(a)|| <= ||a||+||da||", sandwich_hi, 0.0,
                           1e-10));
  report.append(make_check("adjoint_derivative_ratio", "||d(a*)|| <= sqrt(N) ||da||",
                           adjoint_ratio, std::sqrt(double(model.dim())), 1e-6));
  report.append(make_check("product_norm", "||f g||_1 <= sqrt(5) ||f||_1 ||g||_1",
                           product_excess, 0.0, 1e-10));
  report.append(make_check("jet_multiplicative", "jet(f g) = jet(f) jet(g)", jet_residual, 0.0,
                           1e-12));

  // Single-mode product: ||f||_1 ||g||_1 and ||f g||_1 have closed forms.
  {
    const double omega = 2.0 * M_PI / model.extents()[0];
    C1Field f = make_zero(model, 1, 1);
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      const double x = model.coords(p)[0];
      f.value.at(p)(0, 0) = Complex(std::cos(omega * x), std::sin(omega * x));
      f.deriv.component(0, p)(0, 0) = Complex(0.0, omega) * f.value.at(p)(0, 0);
    }
    const C1Field fg = mul(f, f);
    const double expect_f = std::sqrt(1.0 + omega * omega);
    const double expect_fg = std::sqrt(1.0 + 4.0 * omega * omega);
    const double err = std::max(std::abs(field_norm_1(f) - expect_f),
                                std::abs(field_norm_1(fg) - expect_fg));
    report.append(make_check("unit_mode_product",
                             "||e_1||_1 = sqrt(1+w^2) and ||e_1^2||_1 = sqrt(1+4w^2)", err, 0.0,
                             1e-6));
  }

  const AmplifyResult amp = cb_amplify(model, AmplifiedMap::Involution, 3, 10,
                                       c.seed.value_or(1) + 7);
  report.append(make_check("involution_amplified_level3",
                           "amplified involution ratio <= sqrt(N)", amp.measured, amp.bound,
                           1e-6));
  return report;
}

CheckReport suite_stdmodule(const ScenarioConfig& c, const ManifoldModel& model,
                            const PartitionOfUnity&) {
  CheckReport report;
  Rng rng(c.seed.value_or(1) * 2654435761u + 202);
  const int d = std::max(2, c.fiber_dim);

  double roundtrip = 0.0, norm_factor_excess = -1.0;
  double bound_excess = -1.0, adjoint_err = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const C1Field alpha = fourier_matrix(model, d, d, 2, rng);
    const CheckReport rt = morphism_roundtrip_check(alpha);
    roundtrip = std::max(roundtrip, rt.find("morphism_roundtrip")->measured);
    norm_factor_excess = std::max(norm_factor_excess,
                                  rt.find("morphism_norm_factor")->measured -
                                      rt.find("morphism_norm_factor")->bound);
    const Section s = fourier_matrix(model, d, 1, 2, rng);
    const Section t = fourier_matrix(model, d, 1, 2, rng);
    bound_excess = std::max(bound_excess, field_norm_1(apply_morphism(alpha, s)) -
                                              morphism_norm_1(alpha) * field_norm_1(s));
    const C1Field lhs = hermitian_form(apply_morphism(alpha, s), t);
    const C1Field rhs = hermitian_form(s, apply_morphism(adjoint(alpha), t));
    for (std::size_t p = 0; p < model.num_points(); ++p)
      adjoint_err = std::max(adjoint_err,
                             std::abs(lhs.value.at(p)(0, 0) - rhs.value.at(p)(0, 0)));
  }
  report.append(make_check("morphism_roundtrip", "field -> map -> field is the identity",
                           roundtrip, 0.0, 1e-10));
  report.append(make_check("morphism_norm_factor", "||a||_1 <= 2 * measured map norm",
                           norm_factor_excess, 0.0, 1e-9));
  report.append(make_check("morphism_norm_bound", "||a s||_1 <= ||a||_1 ||s||_1", bound_excess,
                           0.0, 1e-9));
  report.append(make_check("morphism_adjoint_form", "<a s, t> = <s, a* t>", adjoint_err, 0.0,
                           1e-10));
  return report;
}

CheckReport suite_stabilize(const ScenarioConfig& c, const ManifoldModel& model,
                            const PartitionOfUnity& pou) {
  const BundleSpec bundle = make_bundle(model, pou, parse_bundle_generator(c.bundle_generator),
                                        c.fiber_dim, c.seed.value_or(1));
  CheckReport report = verify_bundle(bundle);
  const StabilizedProjection proj = build_projection(bundle, pou);
  report.merge(verify_projection(proj, bundle, pou, c.seed.value_or(1) + 13));
  return report;
}

CheckReport suite_imagebundle(const ScenarioConfig& c, const ManifoldModel& model,
                              const PartitionOfUnity& pou) {
  CheckReport report;
  Rng rng(c.seed.value_or(1) * 2654435761u + 303);

  const ProjectionField proj = make_projection_field(build_projector(c, model, rng));
  const double r = select_radius(model, proj, c.radius_candidate);
  report.append(make_check("radius_rule", "r = 0.9 min(s, 1/(4 sup||dP||)), below r_inj", r, r,
                           0.0));
  report.merge(drift_check(model, proj, r, pou.centers));

  const ImageBundleResult ib = image_bundle(model, proj, r, pou);
  report.merge(image_bundle_checks(ib, proj));
  report.merge(frame_checks(model, ib.frames.front(), proj));

  // Quadrature route against the eigendecomposition route.
  {
    const Matrix lam = random_spd(std::min(6, std::max(2, c.rank + 1)), 100.0, rng);
    const Matrix oracle = inv_sqrt_eig(lam);
    const double base = op_norm(oracle);
    Table conv;
    conv.header = {"nodes", "relative_error"};
    double prev = 0.0, worst_growth = -1.0;
    for (int nodes : {16, 32, 64, 128, 200}) {
      const double err = op_norm(inv_sqrt_quad(lam, nodes) - oracle) / base;
      conv.rows.push_back({double(nodes), err});
      if (nodes > 16 && nodes != 200 && err > 1e-12)
        worst_growth = std::max(worst_growth, err - prev);
      prev = err;
    }
    report.tables["quad_convergence"] = std::move(conv);
    report.append(make_check("inv_sqrt_agreement",
                             "quadrature and eigendecomposition routes agree",
                             prev, 0.0, 1e-6));
    report.append(make_check("inv_sqrt_convergence",
                             "quadrature error is nonincreasing as nodes double", worst_growth,
                             0.0, 0.0));
    const Matrix one = Matrix::Identity(1, 1);
    report.append(make_check("inv_sqrt_scalar",
                             "(1/pi) Int lambda^{-1/2} (lambda+1)^{-1} = 1",
                             std::abs(inv_sqrt_quad(one, c.quadrature_nodes)(0, 0).real() - 1.0),
                             0.0, 1e-8));
  }
  return report;
}

CheckReport suite_negative_control(const ScenarioConfig& c, const ManifoldModel& model,
                                   const PartitionOfUnity& pou) {
  Rng rng(c.seed.value_or(1) * 2654435761u + 404);
  ScenarioConfig cc = c;
  cc.projector_generator = "winding";
  const ProjectionField proj = make_projection_field(build_projector(cc, model, rng));
  const double r = select_radius(model, proj, c.radius_candidate) * c.radius_inflation;
  if (r >= model.injectivity_radius())
    throw std::invalid_argument("inflated radius exceeds the injectivity radius");
  // With the radius rule violated by design, the drift check must fail.
  return drift_check(model, proj, r, pou.centers);
}

CheckReport suite_equivalence(const ScenarioConfig& c, const ManifoldModel& model,
                              const PartitionOfUnity& pou) {
  CheckReport report;
  Rng rng(c.seed.value_or(1) * 2654435761u + 505);

  const ProjectionField proj = make_projection_field(build_projector(c, model, rng));
  report.merge(surjectivity_roundtrip(model, proj, pou, c.radius_candidate,
                                      c.seed.value_or(1) + 17));

  const BundleSpec src = make_bundle(model, pou, parse_bundle_generator(c.bundle_generator),
                                     c.fiber_dim, c.seed.value_or(1) + 19);
  const BundleSpec dst = make_bundle(model, pou, parse_bundle_generator(c.bundle_generator),
                                     c.fiber_dim, c.seed.value_or(1) + 23);
  const BundleMorphism alpha =
      global_morphism(src, dst, fourier_matrix(model, c.fiber_dim, c.fiber_dim, 2, rng));
  const BundleMorphism beta =
      global_morphism(dst, src, fourier_matrix(model, c.fiber_dim, c.fiber_dim, 2, rng));
  report.merge(faithfulness_roundtrip(alpha, beta, pou, c.seed.value_or(1) + 29));

  const BundleMorphism ident = identity_morphism(src);
  const BundleMorphism doubled = global_morphism(
      src, src, make_constant(model, 2.0 * Matrix::Identity(c.fiber_dim, c.fiber_dim)));
  report.merge(injectivity_check(ident, doubled, pou));
  return report;
}

const std::map<std::string, SuiteFn>& suite_registry() {
  static const std::map<std::string, SuiteFn> registry = {
      {"manifold", suite_manifold},
      {"partition", suite_partition},
      {"opspace", suite_opspace},
      {"stdmodule", suite_stdmodule},
      {"stabilize", suite_stabilize},
      {"imagebundle", suite_imagebundle},
      {"equivalence", suite_equivalence},
      {"negative_control", suite_negative_control},
  };
  return registry;
}

}  // namespace

const std::vector<std::string>& all_suites() {
  static const std::vector<std::string> order = {
      "manifold", "partition", "opspace", "stdmodule",
      "stabilize", "imagebundle", "equivalence", "negative_control"};
  return order;
}

ScenarioConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("configuration must be a JSON object");
  static const std::vector<std::string> known = {
      "manifold",  "partition",        "fiber_dim",       "rank",
      "blocks",    "generators",       "quadrature_nodes", "radius_candidate",
      "radius_inflation", "suites",    "tolerances"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown configuration key: " + key);
  ScenarioConfig c;

  const auto& man = j.at("manifold");
  c.kind = parse_kind(man.at("kind").get<std::string>());
  c.dimension = man.at("dimension").get<int>();
  c.extents = man.at("extents").get<std::vector<double>>();
  c.grid_sizes = man.at("grid_sizes").get<std::vector<int>>();

  c.epsilon = j.at("partition").at("epsilon").get<double>();

  c.fiber_dim = j.value("fiber_dim", 2);
  c.rank = j.value("rank", 1);
  if (j.contains("blocks")) c.blocks = j.at("blocks").get<int>();

  if (j.contains("generators")) {
    const auto& g = j.at("generators");
    c.bundle_generator = g.value("bundle", c.bundle_generator);
    c.projector_generator = g.value("projector", c.projector_generator);
    c.winding = g.value("winding", c.winding);
    c.rotation_amplitude = g.value("rotation_amplitude", c.rotation_amplitude);
    if (g.contains("seed")) c.seed = g.at("seed").get<std::uint64_t>();
  }

  c.quadrature_nodes = j.value("quadrature_nodes", 200);
  c.radius_candidate = j.value("radius_candidate", 2.0);
  c.radius_inflation = j.value("radius_inflation", 10.0);

  if (j.contains("suites")) c.suites = j.at("suites").get<std::vector<std::string>>();
  if (j.contains("tolerances"))
    c.tolerance_overrides = j.at("tolerances").get<std::map<std::string, double>>();

  if (c.fiber_dim < 1 || c.rank < 1 || c.rank > c.fiber_dim)
    throw std::invalid_argument("need 1 <= rank <= fiber_dim");
  if (c.quadrature_nodes < 16) throw std::invalid_argument("quadrature_nodes must be >= 16");
  if (needs_seed(c) && !c.seed)
    throw std::invalid_argument("randomized generators require an explicit seed");
  for (const std::string& s : c.suites)
    if (std::find(all_suites().begin(), all_suites().end(), s) == all_suites().end())
      throw std::invalid_argument("unknown suite: " + s);

  // Normalized echo for reports.
  nlohmann::json echo;
  echo["manifold"] = {{"kind", kind_name(c.kind)},
                      {"dimension", c.dimension},
                      {"extents", c.extents},
                      {"grid_sizes", c.grid_sizes}};
  echo["partition"] = {{"epsilon", c.epsilon}};
  echo["fiber_dim"] = c.fiber_dim;
  echo["rank"] = c.rank;
  if (c.blocks) echo["blocks"] = *c.blocks;
  echo["generators"] = {{"bundle", c.bundle_generator},
                        {"projector", c.projector_generator},
                        {"winding", c.winding},
                        {"rotation_amplitude", c.rotation_amplitude}};
  if (c.seed) echo["generators"]["seed"] = *c.seed;
  echo["quadrature_nodes"] = c.quadrature_nodes;
  echo["radius_candidate"] = c.radius_candidate;
  echo["radius_inflation"] = c.radius_inflation;
  // Echo the resolved selection (the default set excludes the designed
  // failure) so that re-parsing an echo reproduces the same run.
  if (c.suites.empty())
    echo["suites"] = std::vector<std::string>(all_suites().begin(), all_suites().end() - 1);
  else
    echo["suites"] = c.suites;
  if (!c.tolerance_overrides.empty()) echo["tolerances"] = c.tolerance_overrides;
  c.echo = std::move(echo);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunResult run_scenario(const ScenarioConfig& config, bool collect_timings) {
  const ManifoldModel model =
      ManifoldModel::build(config.kind, config.dimension, config.extents, config.grid_sizes);
  const std::vector<std::size_t> centers = ball_cover(model, config.epsilon);
  const PartitionOfUnity pou = build_partition(model, centers, config.epsilon);
  if (config.blocks && *config.blocks != static_cast<int>(pou.size()))
    throw std::invalid_argument("configured blocks do not match the partition size");

  std::vector<std::string> selected = config.suites;
  if (selected.empty())
    selected.assign(all_suites().begin(), all_suites().end() - 1);  // without negative_control

  CheckReport report;
  report.scenario = config.echo;
  report.tables["quad_convergence"] = Table{{"nodes", "relative_error"}, {}};
  report.tables["drift_profile"] = Table{{"geodesic_distance", "projection_drift"}, {}};

  for (const std::string& name : all_suites()) {
    if (std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckReport sub = suite_registry().at(name)(config, model, pou);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (Check& c : sub.checks) {
      c.name = name + "." + c.name;
      if (collect_timings) c.wall_ms = ms;
    }
    report.merge(sub);
  }

  for (Check& c : report.checks) {
    const auto it = config.tolerance_overrides.find(c.name);
    if (it != config.tolerance_overrides.end()) {
      c.tolerance = it->second;
      c.pass = c.measured <= c.bound + c.tolerance;
    }
  }

  // Every check appears exactly once per report.
  {
    std::vector<std::string> names;
    for (const Check& c : report.checks) names.push_back(c.name);
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end())
      throw std::logic_error("duplicate check name in report");
  }

  RunResult result;
  result.exit_code = report.all_pass() ? 0 : 1;
  result.report = std::move(report);
  return result;
}

}  // namespace bundlekit
