#include "rbc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace rbc {

ChargeSpec ChargeSpec::standard(int d) {
  ChargeSpec c;
  c.kind = Kind::NodeCharge;
  c.radius = 1;
  if (d == 3)
    c.nodes = {{{0, 0, 0}, 2.0}, {{1, 0, 0}, -1.0}, {{0, -1, 1}, -1.0}};
  else
    c.nodes = {{{0, 0, 0}, 2.0}, {{1, 0, 0}, -1.0}, {{0, -1, 0}, -1.0}};
  return c;
}

void ChargeSpec::validate(int d) const {
  if (radius < 1) throw ConfigError("charge_radius must be at least 1");
  if (kind == Kind::SingleEdgeDipole) {
    if (direction < 0 || direction >= d) throw ConfigError("charge_direction must lie in [0, d)");
    return;
  }
  if (nodes.empty()) throw ConfigError("charge_nodes is empty");
  double sum = 0.0, scale = 0.0;
  for (const auto& [n, v] : nodes) {
    if (d == 2 && n[2] != 0) throw ConfigError("charge node has a third coordinate in d = 2");
    if (maxNorm(n) > radius) throw ConfigError("charge node lies outside Q_charge_radius");
    if (!std::isfinite(v)) throw ConfigError("charge value is not finite");
    sum += v;
    scale += std::abs(v);
  }
  if (std::abs(sum) > 1e-12 * std::max(scale, 1.0)) throw ConfigError("charge is not neutral (values must sum to 0)");
}

NodeField ChargeSpec::nodeCharge(int d) const {
  NodeField f(LatticeBox(d, radius));
  if (kind == Kind::SingleEdgeDipole) {
    f.at({0, 0, 0}) = 1.0;
    f.at(unitVector(direction)) = -1.0;
    return f;
  }
  for (const auto& [n, v] : nodes) f.at(n) += v;
  return f;
}

EdgeField ChargeSpec::edgeField(int d) const {
  if (kind == Kind::SingleEdgeDipole) {
    EdgeField h(LatticeBox(d, radius + 1));
    h.at({0, 0, 0}, direction) = 1.0;
    return h;
  }
  return chargeToEdgeField(nodeCharge(d));
}

void ExperimentConfig::validate() const {
  if (d != 2 && d != 3) throw ConfigError("d must be 2 or 3");
  if (Lgrid.empty()) throw ConfigError("L_grid is empty");
  charge.validate(d);
  for (std::size_t i = 0; i < Lgrid.size(); ++i) {
    if (i > 0 && Lgrid[i] <= Lgrid[i - 1]) throw ConfigError("L_grid must be strictly increasing");
    if (Lgrid[i] < 2 * (charge.radius + 1))
      throw ConfigError("every L must be at least twice the charge support (" + std::to_string(2 * (charge.radius + 1)) +
                        ")");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 1/2)");
  try {
    covariance.validate();
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (coefficient.kind == CoefficientKind::AffineSmallContrast &&
      !(coefficient.lambdaMin > 0.0 && coefficient.lambdaMin < coefficient.lambdaMax))
    throw ConfigError("coefficient bounds must satisfy 0 < min < max");
  if (coefficient.kind == CoefficientKind::Constant && !(coefficient.constant > 0.0))
    throw ConfigError("coefficient_value must be positive");
  if (recipes.empty()) throw ConfigError("recipes is empty");
  if (seeds.empty()) throw ConfigError("no seeds");
  if (dipoleSign != 1.0 && dipoleSign != -1.0) throw ConfigError("dipole_sign must be 1 or -1");
  if (outputDir.empty()) throw ConfigError("output_dir is empty");
  if (estimatedMemoryMb() > memoryLimitMb) {
    std::ostringstream os;
    os << "estimated memory " << std::llround(estimatedMemoryMb()) << " MB exceeds memory_limit_mb = " << memoryLimitMb;
    throw ConfigError(os.str());
  }
  if (optDim != 2 && optDim != 3) throw ConfigError("opt_d must be 2 or 3");
  if (!(optBeta > 0.0)) throw ConfigError("opt_beta must be positive");
  if (optEll < 1) throw ConfigError("opt_ell must be at least 1");
  if (optLgrid.empty()) throw ConfigError("opt_L_grid is empty");
  for (std::size_t i = 0; i < optLgrid.size(); ++i) {
    if (optLgrid[i] <= optEll) throw ConfigError("opt_L_grid entries must exceed opt_ell");
    if (i > 0 && optLgrid[i] <= optLgrid[i - 1]) throw ConfigError("opt_L_grid must be strictly increasing");
  }
  if (optMonteCarloSamples < 0) throw ConfigError("opt_mc_samples must be nonnegative");
}

double ExperimentConfig::estimatedMemoryMb() const {
  if (Lgrid.empty()) return 0.0;
  const LatticeBox field(d, 4 * Lgrid.back());
  // constant coefficients skip the sampler
  double torus = coefficient.kind == CoefficientKind::Constant ? 0.0 : 1.0;
  if (torus > 0.0) {
    try {
      const auto t = torusExtentFor(covariance, field);
      for (int k = 0; k < d; ++k) torus *= static_cast<double>(t[k]);
    } catch (const std::exception&) {
      torus = 8.0 * static_cast<double>(field.nodeCount());
    }
  }
  const double nodes = static_cast<double>(field.nodeCount());
  return 8.0 * (40.0 * nodes + 2.0 * torus) / (1024.0 * 1024.0);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> splitList(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double toDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::int64_t toInt(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool toBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::int64_t> toIntList(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  for (const auto& t : splitList(v, ',')) out.push_back(toInt(key, t));
  return out;
}

// "x,y,z:value" entries separated by whitespace or ';'.
std::vector<std::pair<Coord, double>> toNodes(const std::string& key, const std::string& v) {
  std::string s = v;
  std::replace(s.begin(), s.end(), ';', ' ');
  std::vector<std::pair<Coord, double>> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw ConfigError(key + ": entries must look like x,y,z:value");
    const auto xs = toIntList(key, tok.substr(0, colon));
    if (xs.size() < 2 || xs.size() > 3) throw ConfigError(key + ": node needs 2 or 3 coordinates");
    Coord n{0, 0, 0};
    for (std::size_t k = 0; k < xs.size(); ++k) n[k] = xs[k];
    out.emplace_back(n, toDouble(key, tok.substr(colon + 1)));
  }
  return out;
}

std::string joinInts(const std::vector<std::int64_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

ExperimentConfig parseConfig(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::pair<std::string, int>> kv;
  std::istringstream is(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineNo) + ": empty key");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineNo) + ": duplicate key '" + key + "'");
    kv[key] = {val, lineNo};
  }

  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second.first;
  };

  if (auto v = take("d")) cfg.d = static_cast<int>(toInt("d", *v));
  if (auto v = take("L_grid")) cfg.Lgrid = toIntList("L_grid", *v);
  if (auto v = take("epsilon")) cfg.epsilon = toDouble("epsilon", *v);

  const std::string covKind = take("covariance") ? *take("covariance") : "gaussian";
  const double theta = take("covariance_theta") ? toDouble("covariance_theta", *take("covariance_theta")) : 8.0;
  const double beta = take("covariance_beta") ? toDouble("covariance_beta", *take("covariance_beta")) : 5.0;
  if (covKind == "gaussian")
    cfg.covariance = CovarianceSpec::gaussian(theta);
  else if (covKind == "algebraic")
    cfg.covariance = CovarianceSpec::algebraic(theta, beta);
  else if (covKind == "delta")
    cfg.covariance = CovarianceSpec::delta();
  else
    throw ConfigError("covariance: expected gaussian, algebraic or delta");

  const std::string coefKind = take("coefficient") ? *take("coefficient") : "logistic";
  try {
    if (coefKind == "logistic") {
      cfg.coefficient = CoefficientMap::logistic();
    } else if (coefKind == "affine") {
      const double eta = take("coefficient_eta") ? toDouble("coefficient_eta", *take("coefficient_eta")) : 0.1;
      const double lo = take("coefficient_min") ? toDouble("coefficient_min", *take("coefficient_min")) : 0.5;
      const double hi = take("coefficient_max") ? toDouble("coefficient_max", *take("coefficient_max")) : 1.5;
      cfg.coefficient = CoefficientMap::affine(eta, lo, hi);
    } else if (coefKind == "constant") {
      const double c = take("coefficient_value") ? toDouble("coefficient_value", *take("coefficient_value")) : 1.0;
      cfg.coefficient = CoefficientMap::constantValue(c);
    } else {
      throw ConfigError("coefficient: expected logistic, affine or constant");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  cfg.charge = ChargeSpec::standard(cfg.d);
  const std::string chargeKind = take("charge") ? *take("charge") : "nodes";
  if (chargeKind == "dipole") {
    cfg.charge.kind = ChargeSpec::Kind::SingleEdgeDipole;
    cfg.charge.nodes.clear();
  } else if (chargeKind != "nodes") {
    throw ConfigError("charge: expected nodes or dipole");
  }
  if (auto v = take("charge_radius")) cfg.charge.radius = static_cast<int>(toInt("charge_radius", *v));
  if (auto v = take("charge_direction")) cfg.charge.direction = static_cast<int>(toInt("charge_direction", *v));
  if (auto v = take("charge_nodes")) cfg.charge.nodes = toNodes("charge_nodes", *v);

  if (auto v = take("recipes")) {
    cfg.recipes.clear();
    for (const auto& t : splitList(*v, ',')) {
      try {
        cfg.recipes.push_back(parseVariant(t));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (take("seeds") && take("seed_count")) throw ConfigError("give either seeds or seed_count, not both");
  if (auto v = take("seeds")) {
    cfg.seeds.clear();
    for (auto s : toIntList("seeds", *v)) {
      if (s < 0) throw ConfigError("seeds must be nonnegative");
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (auto v = take("seed_count")) {
    const auto count = toInt("seed_count", *v);
    const auto base = take("seed_base") ? toInt("seed_base", *take("seed_base")) : 1;
    if (count < 1 || base < 0) throw ConfigError("seed_count must be positive and seed_base nonnegative");
    cfg.seeds.clear();
    for (std::int64_t s = 0; s < count; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(base + s));
  } else if (take("seed_base")) {
    throw ConfigError("seed_base needs seed_count");
  }

  if (auto v = take("solver_tolerance")) cfg.solver.relTolerance = toDouble("solver_tolerance", *v);
  if (auto v = take("solver_max_iterations"))
    cfg.solver.maxIterations = static_cast<int>(toInt("solver_max_iterations", *v));
  if (auto v = take("preconditioner")) {
    if (*v == "jacobi")
      cfg.solver.preconditioner = Preconditioner::Jacobi;
    else if (*v == "none")
      cfg.solver.preconditioner = Preconditioner::None;
    else
      throw ConfigError("preconditioner: expected jacobi or none");
  }
  if (auto v = take("weight")) {
    if (*v == "bump")
      cfg.weight = WeightKind::Bump;
    else if (*v == "triangular")
      cfg.weight = WeightKind::TriangularProduct;
    else
      throw ConfigError("weight: expected bump or triangular");
  }
  if (auto v = take("dipole_sign")) cfg.dipoleSign = toDouble("dipole_sign", *v);
  if (auto v = take("output_dir")) cfg.outputDir = *v;
  if (auto v = take("record_wall_time")) cfg.recordWallTime = toBool("record_wall_time", *v);
  if (auto v = take("memory_limit_mb")) cfg.memoryLimitMb = toDouble("memory_limit_mb", *v);
  if (auto v = take("eval_point"))
    if (*v != "floor_half") throw ConfigError("eval_point: only floor_half is supported");

  if (auto v = take("opt_d")) cfg.optDim = static_cast<int>(toInt("opt_d", *v));
  if (auto v = take("opt_beta")) cfg.optBeta = toDouble("opt_beta", *v);
  if (auto v = take("opt_ell")) cfg.optEll = static_cast<int>(toInt("opt_ell", *v));
  if (auto v = take("opt_L_grid")) cfg.optLgrid = toIntList("opt_L_grid", *v);
  if (auto v = take("opt_mc_samples")) cfg.optMonteCarloSamples = static_cast<int>(toInt("opt_mc_samples", *v));

  static const char* known[] = {"d", "L_grid", "epsilon", "covariance", "covariance_theta", "covariance_beta",
                                "coefficient", "coefficient_eta", "coefficient_min", "coefficient_max",
                                "coefficient_value", "charge", "charge_radius", "charge_direction", "charge_nodes",
                                "recipes", "seeds", "seed_count", "seed_base", "solver_tolerance",
                                "solver_max_iterations", "preconditioner", "weight", "dipole_sign", "output_dir",
                                "record_wall_time", "memory_limit_mb", "eval_point", "opt_d", "opt_beta", "opt_ell",
                                "opt_L_grid", "opt_mc_samples"};
  for (const auto& [key, val] : kv) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ConfigError("line " + std::to_string(val.second) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parseConfig(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "d = " << d << "\n";
  os << "L_grid = " << joinInts(Lgrid) << "\n";
  os << "epsilon = " << epsilon << "\n";
  switch (covariance.kind) {
    case CovarianceKind::Gaussian:
      os << "covariance = gaussian\ncovariance_theta = " << covariance.theta << "\n";
      break;
    case CovarianceKind::Algebraic:
      os << "covariance = algebraic\ncovariance_theta = " << covariance.theta << "\ncovariance_beta = "
         << covariance.beta << "\n";
      break;
    case CovarianceKind::Delta:
      os << "covariance = delta\n";
      break;
  }
  switch (coefficient.kind) {
    case CoefficientKind::Logistic:
      os << "coefficient = logistic\n";
      break;
    case CoefficientKind::AffineSmallContrast:
      os << "coefficient = affine\ncoefficient_eta = " << coefficient.eta << "\ncoefficient_min = "
         << coefficient.lambdaMin << "\ncoefficient_max = " << coefficient.lambdaMax << "\n";
      break;
    case CoefficientKind::Constant:
      os << "coefficient = constant\ncoefficient_value = " << coefficient.constant << "\n";
      break;
  }
  if (charge.kind == ChargeSpec::Kind::SingleEdgeDipole) {
    os << "charge = dipole\ncharge_radius = " << charge.radius << "\ncharge_direction = " << charge.direction << "\n";
  } else {
    os << "charge = nodes\ncharge_radius = " << charge.radius << "\ncharge_nodes =";
    for (const auto& [n, v] : charge.nodes) {
      os << " " << n[0] << "," << n[1];
      if (d == 3) os << "," << n[2];
      os << ":" << v;
    }
    os << "\n";
  }
  os << "recipes = ";
  for (std::size_t i = 0; i < recipes.size(); ++i) os << (i ? "," : "") << variantName(recipes[i]);
  os << "\nseeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << "\nsolver_tolerance = " << solver.relTolerance << "\n";
  os << "solver_max_iterations = " << solver.maxIterations << "\n";
  os << "preconditioner = " << (solver.preconditioner == Preconditioner::Jacobi ? "jacobi" : "none") << "\n";
  os << "weight = " << (weight == WeightKind::Bump ? "bump" : "triangular") << "\n";
  os << "dipole_sign = " << dipoleSign << "\n";
  os << "output_dir = " << outputDir << "\n";
  os << "record_wall_time = " << (recordWallTime ? "true" : "false") << "\n";
  os << "memory_limit_mb = " << memoryLimitMb << "\n";
  os << "eval_point = floor_half\n";
  os << "opt_d = " << optDim << "\nopt_beta = " << optBeta << "\nopt_ell = " << optEll << "\n";
  os << "opt_L_grid = " << joinInts(optLgrid) << "\nopt_mc_samples = " << optMonteCarloSamples << "\n";
  return os.str();
}

}  // namespace rbc
