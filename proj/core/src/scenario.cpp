#include "risac/scenario.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace risac {

namespace {

struct RawValue {
  std::string text;
  int line = 0;
};

using Section = std::map<std::string, RawValue>;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

// Parses "v1, v2, ... [unit]" into linear-scale doubles. Accepted units:
// dB, dBm, deg, rad, m, W (rad/m/W are pass-through).
std::vector<double> parse_numbers(const std::string& origin, const RawValue& rv,
                                  const std::string& key) {
  std::string text = trim(rv.text);
  std::string unit;
  // Peel a trailing unit word.
  const size_t last_space = text.find_last_of(" \t");
  if (last_space != std::string::npos) {
    const std::string tail = trim(text.substr(last_space + 1));
    if (!tail.empty() && !std::isdigit(static_cast<unsigned char>(tail[0])) &&
        tail[0] != '-' && tail[0] != '+' && tail[0] != '.') {
      unit = tail;
      text = trim(text.substr(0, last_space));
    }
  }
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(origin, rv.line, "empty element in list for '" + key + "'");
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0')
      fail(origin, rv.line, "cannot parse number '" + item + "' for '" + key + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(origin, rv.line, "empty value for '" + key + "'");
  for (double& v : out) {
    if (unit == "dB") v = db_to_linear(v);
    else if (unit == "dBm") v = dbm_to_watt(v);
    else if (unit == "deg") v = deg_to_rad(v);
    else if (unit == "rad" || unit == "m" || unit == "W" || unit.empty()) {
    } else {
      fail(origin, rv.line, "unknown unit '" + unit + "' for '" + key + "'");
    }
  }
  return out;
}

class SectionReader {
 public:
  SectionReader(const std::string& origin, const std::string& name, const Section* sec)
      : origin_(origin), name_(name), sec_(sec) {}

  bool has(const std::string& key) const { return sec_ && sec_->count(key) > 0; }

  std::vector<double> numbers(const std::string& key) {
    used_.insert(key);
    if (!has(key))
      throw ConfigError(origin_ + ": missing key '" + key + "' in section [" + name_ + "]");
    return parse_numbers(origin_, sec_->at(key), key);
  }
  double number(const std::string& key) {
    const auto v = numbers(key);
    if (v.size() != 1)
      fail(origin_, sec_->at(key).line, "'" + key + "' expects a single value");
    return v[0];
  }
  double number_or(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number(key);
  }
  std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    return numbers(key);
  }
  long integer(const std::string& key) {
    const double v = number(key);
    if (v != static_cast<double>(static_cast<long>(v)))
      fail(origin_, sec_->at(key).line, "'" + key + "' expects an integer");
    return static_cast<long>(v);
  }
  long integer_or(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    return integer(key);
  }
  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    const std::string v = trim(sec_->at(key).text);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin_, sec_->at(key).line, "'" + key + "' expects true/false");
  }
  std::string word(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    return trim(sec_->at(key).text);
  }

  void check_unknown() const {
    if (!sec_) return;
    for (const auto& [key, rv] : *sec_)
      if (used_.count(key) == 0)
        fail(origin_, rv.line, "unknown key '" + key + "' in section [" + name_ + "]");
  }

 private:
  std::string origin_;
  std::string name_;
  const Section* sec_;
  std::set<std::string> used_;
};

}  // namespace

void ScenarioConfig::validate(bool allow_no_eaves) const {
  array.validate();
  if (users.empty()) throw ConfigError("scenario: at least one user required");
  if (!allow_no_eaves && eavesdroppers.empty())
    throw ConfigError("scenario: at least one eavesdropper required (except P3-only runs)");
  for (const auto& u : users) u.validate();
  for (const auto& e : eavesdroppers) e.validate();
  sensing.validate();
  if (user_noise.size() != users.size())
    throw ConfigError("scenario: user noise list size mismatch");
  if (eaves_noise.size() != eavesdroppers.size())
    throw ConfigError("scenario: eavesdropper noise list size mismatch");
  algorithm.validate();
}

SolveScenario ScenarioConfig::build() const {
  SolveScenario sc;
  sc.array = array;
  sc.sensing = sensing;
  for (const auto& u : users) sc.links.users.push_back(channel_covariance(u, array));
  for (const auto& e : eavesdroppers)
    sc.links.eavesdroppers.push_back(channel_covariance(e, array));
  sc.links.user_noise = user_noise;
  sc.links.eaves_noise = eaves_noise;
  return sc;
}

ScenarioConfig table3_scenario() {
  ScenarioConfig c;
  c.array = {12, 12, 0.5};

  auto link = [](double dist_m, double azim_deg) {
    UserGeometry g;
    g.distance = dist_m;
    g.azimuth = deg_to_rad(azim_deg);
    g.rician_factor = 100.0;
    g.pathloss_exponent = 2.2;
    g.ref_gain = db_to_linear(-30.0);
    return g;
  };
  c.users = {link(60.0, -60.0), link(80.0, -5.0), link(100.0, 50.0)};
  c.eavesdroppers = {link(70.0, -15.0), link(90.0, 40.0)};
  c.user_noise.assign(3, dbm_to_watt(-70.0));
  c.eaves_noise.assign(2, dbm_to_watt(-70.0));

  c.sensing.target_azimuths = {deg_to_rad(-30.0), deg_to_rad(30.0)};
  c.sensing.amplitudes = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
  c.sensing.snapshots = 1;
  c.sensing.sensing_noise_power = 1.0;

  c.algorithm.p_max = dbm_to_watt(30.0);
  c.algorithm.qos_threshold = 3.0;
  c.algorithm.secrecy_threshold = 1.0;
  c.algorithm.crb_threshold = db_to_linear(-70.0);
  c.algorithm.penalty_weight = 10.0;
  c.algorithm.tau = 1e-3;
  c.algorithm.j_max = 30;
  c.algorithm.selector = selector_for(Scheme::scheme2);
  c.seed = 1;
  return c;
}

ScenarioConfig parse_scenario(std::istream& in, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_lines;
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, lineno, "malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) fail(origin, lineno, "empty section name");
      if (sections.count(current)) fail(origin, lineno, "duplicate section [" + current + "]");
      sections[current];
      section_lines[current] = lineno;
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, lineno, "expected 'key = value'");
    if (current.empty()) fail(origin, lineno, "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, lineno, "empty key");
    if (sections[current].count(key))
      fail(origin, lineno, "duplicate key '" + key + "' in [" + current + "]");
    sections[current][key] = RawValue{value, lineno};
  }

  const std::set<std::string> known = {"array",   "channel", "users",    "eavesdroppers",
                                       "sensing", "algorithm", "run"};
  for (const auto& [name, sec] : sections) {
    (void)sec;
    if (known.count(name) == 0)
      fail(origin, section_lines[name], "unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) -> const Section* {
    auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
  };

  ScenarioConfig c;

  SectionReader array(origin, "array", section("array"));
  c.array.n_tx = static_cast<int>(array.integer("n_tx"));
  c.array.n_rx = static_cast<int>(array.integer("n_rx"));
  c.array.spacing_ratio = array.number_or("spacing_ratio", 0.5);
  array.check_unknown();

  SectionReader channel(origin, "channel", section("channel"));
  const double ref_gain = channel.number("ref_gain");
  const double alpha = channel.number("pathloss_exponent");
  const double rician = channel.number_or("rician_factor", 0.0);
  const double noise_u = channel.number("noise_user");
  const double noise_e = channel.number_or("noise_eave", noise_u);
  channel.check_unknown();

  auto build_links = [&](SectionReader& sec, const char* what) {
    const std::vector<double> d = sec.numbers("distances");
    const std::vector<double> az = sec.numbers("azimuths");
    if (d.size() != az.size())
      throw ConfigError(origin + ": [" + what + "] distances/azimuths size mismatch");
    const std::vector<double> rho =
        sec.numbers_or("rician_factors", std::vector<double>(d.size(), rician));
    if (rho.size() != d.size())
      throw ConfigError(origin + ": [" + what + "] rician_factors size mismatch");
    std::vector<UserGeometry> out;
    for (size_t i = 0; i < d.size(); ++i) {
      UserGeometry g;
      g.distance = d[i];
      g.azimuth = az[i];
      g.rician_factor = rho[i];
      g.pathloss_exponent = alpha;
      g.ref_gain = ref_gain;
      out.push_back(g);
    }
    return out;
  };

  SectionReader users(origin, "users", section("users"));
  if (!section("users")) throw ConfigError(origin + ": missing section [users]");
  c.users = build_links(users, "users");
  users.check_unknown();
  c.user_noise.assign(c.users.size(), noise_u);

  if (section("eavesdroppers")) {
    SectionReader eaves(origin, "eavesdroppers", section("eavesdroppers"));
    c.eavesdroppers = build_links(eaves, "eavesdroppers");
    eaves.check_unknown();
  }
  c.eaves_noise.assign(c.eavesdroppers.size(), noise_e);

  SectionReader sensing(origin, "sensing", section("sensing"));
  c.sensing.target_azimuths = sensing.numbers("azimuths");
  const std::vector<double> amp_re = sensing.numbers_or(
      "amplitudes", std::vector<double>(c.sensing.target_azimuths.size(), 1.0));
  const std::vector<double> amp_im = sensing.numbers_or(
      "amplitudes_imag", std::vector<double>(c.sensing.target_azimuths.size(), 0.0));
  if (amp_re.size() != c.sensing.target_azimuths.size() || amp_im.size() != amp_re.size())
    throw ConfigError(origin + ": [sensing] amplitude list size mismatch");
  c.sensing.amplitudes.clear();
  for (size_t i = 0; i < amp_re.size(); ++i)
    c.sensing.amplitudes.emplace_back(amp_re[i], amp_im[i]);
  c.sensing.snapshots = static_cast<int>(sensing.integer_or("snapshots", 1));
  c.sensing.sensing_noise_power = sensing.number_or("noise", 1.0);
  sensing.check_unknown();

  SectionReader alg(origin, "algorithm", section("algorithm"));
  c.algorithm.p_max = alg.number("p_max");
  c.algorithm.qos_threshold = alg.number_or("qos_threshold", 3.0);
  c.algorithm.secrecy_threshold = alg.number_or("secrecy_threshold", 1.0);
  c.algorithm.crb_threshold = alg.number("crb_threshold");
  c.algorithm.penalty_weight = alg.number_or("penalty_weight", 10.0);
  c.algorithm.penalty_ramp = alg.boolean_or("penalty_ramp", false);
  c.algorithm.tau = alg.number_or("tau", 1e-3);
  c.algorithm.j_max = static_cast<int>(alg.integer_or("j_max", 30));
  c.algorithm.security_margin = alg.number_or("security_margin", 1e-3);
  c.algorithm.selector = selector_for(scheme_from_string(alg.word("scheme", "scheme2")));
  alg.check_unknown();

  SectionReader run(origin, "run", section("run"));
  c.seed = static_cast<std::uint64_t>(run.integer_or("seed", 1));
  run.check_unknown();

  c.validate(/*allow_no_eaves=*/true);
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  return parse_scenario(in, path);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

Scheme scheme_of(const SchemeSelector& sel) {
  for (Scheme s : {Scheme::scheme1, Scheme::scheme2, Scheme::scheme3, Scheme::ben1, Scheme::sdma}) {
    const SchemeSelector ref = selector_for(s);
    if (ref.alpha1 == sel.alpha1 && ref.alpha2 == sel.alpha2 &&
        ref.extra_signal_present == sel.extra_signal_present && ref.rsma == sel.rsma)
      return s;
  }
  throw InvalidInput("selector does not match a named scheme");
}

}  // namespace

void write_scenario(const ScenarioConfig& c, std::ostream& out) {
  // Machine units (linear, radians) so that a reload reproduces the exact
  // in-memory values; the human-facing units (dB, dBm, deg) are equally valid
  // on input.
  out << "# risac scenario (machine units: linear gains, radians, watts)\n";
  out << "[array]\n";
  out << "n_tx = " << c.array.n_tx << "\n";
  out << "n_rx = " << c.array.n_rx << "\n";
  out << "spacing_ratio = " << fmt(c.array.spacing_ratio) << "\n\n";

  const double ref_gain = c.users.front().ref_gain;
  const double alpha = c.users.front().pathloss_exponent;
  out << "[channel]\n";
  out << "ref_gain = " << fmt(ref_gain) << "\n";
  out << "pathloss_exponent = " << fmt(alpha) << "\n";
  out << "noise_user = " << fmt(c.user_noise.front()) << "\n";
  if (!c.eaves_noise.empty()) out << "noise_eave = " << fmt(c.eaves_noise.front()) << "\n";
  out << "\n";

  auto write_links = [&](const char* name, const std::vector<UserGeometry>& links) {
    out << "[" << name << "]\n";
    std::vector<double> d, az, rho;
    for (const auto& g : links) {
      d.push_back(g.distance);
      az.push_back(g.azimuth);
      rho.push_back(g.rician_factor);
    }
    out << "distances = " << fmt_list(d) << "\n";
    out << "azimuths = " << fmt_list(az) << " rad\n";
    out << "rician_factors = " << fmt_list(rho) << "\n\n";
  };
  write_links("users", c.users);
  if (!c.eavesdroppers.empty()) write_links("eavesdroppers", c.eavesdroppers);

  out << "[sensing]\n";
  out << "azimuths = " << fmt_list(c.sensing.target_azimuths) << " rad\n";
  std::vector<double> are, aim;
  for (const auto& a : c.sensing.amplitudes) {
    are.push_back(a.real());
    aim.push_back(a.imag());
  }
  out << "amplitudes = " << fmt_list(are) << "\n";
  out << "amplitudes_imag = " << fmt_list(aim) << "\n";
  out << "snapshots = " << c.sensing.snapshots << "\n";
  out << "noise = " << fmt(c.sensing.sensing_noise_power) << "\n\n";

  out << "[algorithm]\n";
  out << "p_max = " << fmt(c.algorithm.p_max) << "\n";
  out << "qos_threshold = " << fmt(c.algorithm.qos_threshold) << "\n";
  out << "secrecy_threshold = " << fmt(c.algorithm.secrecy_threshold) << "\n";
  out << "crb_threshold = " << fmt(c.algorithm.crb_threshold) << "\n";
  out << "penalty_weight = " << fmt(c.algorithm.penalty_weight) << "\n";
  out << "penalty_ramp = " << (c.algorithm.penalty_ramp ? "true" : "false") << "\n";
  out << "tau = " << fmt(c.algorithm.tau) << "\n";
  out << "j_max = " << c.algorithm.j_max << "\n";
  out << "security_margin = " << fmt(c.algorithm.security_margin) << "\n";
  out << "scheme = " << to_string(scheme_of(c.algorithm.selector)) << "\n\n";

  out << "[run]\n";
  out << "seed = " << c.seed << "\n";
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  write_scenario(config, out);
  if (!out) throw ConfigError(path + ": write failed");
}

}  // namespace risac
