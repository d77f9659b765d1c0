#include "lshade/runlog.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lshade {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

HitRecord RunLog::hit_record() const {
  HitRecord r;
  r.run_id = run_id;
  r.seed = seed;
  r.hit = tau_gen >= 0;
  r.tau_gen = tau_gen;
  r.tau_eval = tau_eval;
  r.censor_gen = censor_gen;
  r.censor_nfe = censor_nfe;
  return r;
}

std::string RunLog::serialize() const {
  std::ostringstream out;
  out << "# lshade-hazard-log v1\n";
  out << "# run_id=" << run_id << " seed=" << seed << " objective=" << objective << " dim=" << dim
      << " eps=" << format_double(eps) << " budget=" << budget
      << " f_star=" << format_double(f_star) << "\n";
  out << "# engine: n_init=" << engine.n_init << " n_min=" << engine.n_min
      << " memory_size=" << engine.memory_size << " p_best=" << format_double(engine.p_best)
      << " arc_rate=" << format_double(engine.arc_rate)
      << " sigma_f=" << format_double(engine.sigma_f)
      << " sigma_cr=" << format_double(engine.sigma_cr) << " max_nfe=" << engine.max_nfe << "\n";
  out << "# columns: " << kLogSchema << "\n";
  for (const auto& r : rows) {
    out << r.gen << ' ' << r.nfe << ' ' << r.pop << ' ' << r.arch << ' ' << format_double(r.best_f)
        << ' ' << r.l1 << ' ' << r.l2 << ' ' << r.l3 << ' ' << format_double(r.interval_measure)
        << ' ' << format_double(r.density_inf) << ' ' << format_double(r.cr_tail) << ' '
        << format_double(r.a_t) << ' ' << format_double(r.a_tilde) << ' ' << r.g1 << ' ' << r.g2
        << ' ' << r.g3 << ' ' << r.g4 << ' ' << r.g5 << ' ' << r.hit << ' ' << r.cond << ' '
        << format_double(r.c_pair) << ' ' << r.pbest_hit << '\n';
  }
  out << "# tau_gen=" << tau_gen << " tau_eval=" << tau_eval << " censor_gen=" << censor_gen
      << " censor_nfe=" << censor_nfe << "\n";
  return out.str();
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    const auto pos = tok.find('=');
    if (pos == std::string::npos) continue;
    kv[tok.substr(0, pos)] = tok.substr(pos + 1);
  }
  return kv;
}

}  // namespace

RunLog RunLog::parse(std::istream& in) {
  RunLog log;
  std::string line;
  bool got_header = false, got_trailer = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# lshade-hazard-log", 0) == 0) {
        got_header = true;
        continue;
      }
      if (line.rfind("# columns:", 0) == 0) continue;
      auto kv = parse_kv(line.substr(1));
      auto take = [&](const char* key, auto& dst) {
        auto it = kv.find(key);
        if (it == kv.end()) return false;
        std::istringstream v(it->second);
        v >> dst;
        return true;
      };
      take("run_id", log.run_id);
      take("seed", log.seed);
      take("objective", log.objective);
      take("dim", log.dim);
      take("eps", log.eps);
      take("budget", log.budget);
      take("f_star", log.f_star);
      take("n_init", log.engine.n_init);
      take("n_min", log.engine.n_min);
      take("memory_size", log.engine.memory_size);
      take("p_best", log.engine.p_best);
      take("arc_rate", log.engine.arc_rate);
      take("sigma_f", log.engine.sigma_f);
      take("sigma_cr", log.engine.sigma_cr);
      take("max_nfe", log.engine.max_nfe);
      if (take("tau_gen", log.tau_gen)) {
        take("tau_eval", log.tau_eval);
        take("censor_gen", log.censor_gen);
        take("censor_nfe", log.censor_nfe);
        got_trailer = true;
      }
      continue;
    }
    // strtod handles the nan/inf tokens that istream extraction rejects.
    const char* p = line.c_str();
    char* end = nullptr;
    auto next = [&]() {
      const double v = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("RunLog::parse: malformed row: " + line);
      p = end;
      return v;
    };
    LogRow r;
    r.gen = int(next());
    r.nfe = (long long)next();
    r.pop = int(next());
    r.arch = int(next());
    r.best_f = next();
    r.l1 = int(next());
    r.l2 = int(next());
    r.l3 = int(next());
    r.interval_measure = next();
    r.density_inf = next();
    r.cr_tail = next();
    r.a_t = next();
    r.a_tilde = next();
    r.g1 = int(next());
    r.g2 = int(next());
    r.g3 = int(next());
    r.g4 = int(next());
    r.g5 = int(next());
    r.hit = int(next());
    r.cond = int(next());
    r.c_pair = next();
    r.pbest_hit = int(next());
    log.rows.push_back(r);
  }
  if (!got_header) throw std::runtime_error("RunLog::parse: missing log header");
  if (!got_trailer) throw std::runtime_error("RunLog::parse: missing trailer (truncated log?)");
  log.engine.seed = log.seed;
  return log;
}

RunLog RunLog::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  return parse(in);
}

}  // namespace lshade
