#include "qesgd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "qesgd/format.hpp"
#include "qesgd/quant.hpp"

namespace qesgd {
namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

using Section = std::map<std::string, Entry, std::less<>>;

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

class Reader {
 public:
  Reader(std::map<std::string, Section, std::less<>>& sections,
         std::vector<ConfigDiagnostic>& diags)
      : sections_(sections), diags_(diags) {}

  // Looks up section.key, runs parse on it and removes it from the map so the
  // leftovers can be reported as unknown keys.
  template <typename F>
  void take(std::string_view section, std::string_view key, F&& parse) {
    auto sec = sections_.find(section);
    if (sec == sections_.end()) return;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) return;
    const Entry e = it->second;
    sec->second.erase(it);
    lines_[std::string(section) + "." + std::string(key)] = e.line;
    std::string err;
    if (!parse(trim(e.value), err)) {
      diags_.push_back({e.line, std::string(section) + "." + std::string(key) + ": " + err});
    }
  }

  std::size_t line_of(std::string_view section, std::string_view key) const {
    const auto it = lines_.find(std::string(section) + "." + std::string(key));
    return it == lines_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, Section, std::less<>>& sections_;
  std::vector<ConfigDiagnostic>& diags_;
  std::map<std::string, std::size_t> lines_;
};

template <typename Int>
auto int_in(Int& out, Int lo, Int hi, std::string_view hint = {}) {
  return [&out, lo, hi, hint](std::string_view v, std::string& err) {
    Int x{};
    if (!parse_int(v, x)) {
      err = "expected an integer, got '" + std::string(v) + "'";
      return false;
    }
    if (x < lo || x > hi) {
      err = "value " + std::string(v) + " out of range [" + std::to_string(lo) + ", " +
            std::to_string(hi) + "]" + std::string(hint);
      return false;
    }
    out = x;
    return true;
  };
}

auto real_at_least(double& out, double lo, bool strict) {
  return [&out, lo, strict](std::string_view v, std::string& err) {
    double x = 0.0;
    if (!parse_double(v, x) || !std::isfinite(x)) {
      err = "expected a finite number, got '" + std::string(v) + "'";
      return false;
    }
    if (strict ? !(x > lo) : !(x >= lo)) {
      err = "value " + std::string(v) + " must be " + (strict ? "> " : ">= ") + format_double(lo);
      return false;
    }
    out = x;
    return true;
  };
}

template <typename E>
auto one_of(E& out, std::vector<std::pair<std::string_view, E>> options) {
  return [&out, options = std::move(options)](std::string_view v, std::string& err) {
    for (const auto& [name, value] : options) {
      if (v == name) {
        out = value;
        return true;
      }
    }
    err = "unknown value '" + std::string(v) + "' (expected ";
    for (std::size_t i = 0; i < options.size(); ++i) {
      err += (i ? " | " : "") + std::string(options[i].first);
    }
    err += ")";
    return false;
  };
}

MethodKind parse_method(std::string_view v) {
  if (v == "sgd") return MethodKind::kSgd;
  if (v == "epoch-sgd") return MethodKind::kEpochSgd;
  if (v == "qesgd") return MethodKind::kQesgd;
  if (v == "qsgd") return MethodKind::kQsgd;
  throw std::invalid_argument("unknown method '" + std::string(v) +
                              "' (expected sgd | epoch-sgd | qesgd | qsgd)");
}

}  // namespace

std::string_view to_string(MethodKind m) {
  switch (m) {
    case MethodKind::kSgd: return "sgd";
    case MethodKind::kEpochSgd: return "epoch-sgd";
    case MethodKind::kQesgd: return "qesgd";
    case MethodKind::kQsgd: return "qsgd";
  }
  return "?";
}

ConfigError::ConfigError(std::vector<ConfigDiagnostic> diagnostics)
    : std::runtime_error([&] {
        std::string msg = "invalid config:";
        for (const auto& d : diagnostics) {
          msg += "\n  ";
          if (d.line) msg += "line " + std::to_string(d.line) + ": ";
          msg += d.message;
        }
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<ConfigDiagnostic> diags;
  std::map<std::string, Section, std::less<>> sections;
  for (const auto* name : {"problem", "method", "run", "output"}) sections[name];

  std::string current;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        diags.push_back({line_no, "malformed section header"});
        continue;
      }
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sections.contains(current)) {
        diags.push_back({line_no, "unknown section [" + current + "]"});
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      diags.push_back({line_no, "expected key = value"});
      continue;
    }
    if (current.empty()) {
      diags.push_back({line_no, "key outside of any section"});
      continue;
    }
    if (!sections.contains(current)) continue;  // already reported
    const std::string key(trim(line.substr(0, eq)));
    auto& sec = sections[current];
    if (sec.contains(key)) {
      diags.push_back({line_no, "duplicate key " + current + "." + key});
      continue;
    }
    sec[key] = Entry{std::string(trim(line.substr(eq + 1))), line_no};
  }

  ExperimentConfig c;
  Reader r(sections, diags);
  constexpr auto kMax64 = std::numeric_limits<std::int64_t>::max();
  constexpr auto kMaxSize = std::numeric_limits<std::size_t>::max();

  // [problem]
  r.take("problem", "kind", one_of(c.problem.kind, {{"ridge", ProblemKind::kRidge},
                                                     {"logistic-l2", ProblemKind::kLogisticL2}}));
  r.take("problem", "n", int_in<std::size_t>(c.problem.n, 1, kMaxSize));
  r.take("problem", "d", int_in<std::size_t>(c.problem.d, 1, kMaxSize));
  r.take("problem", "lambda", real_at_least(c.problem.lambda, 0.0, false));
  r.take("problem", "condition_target", real_at_least(c.problem.condition_target, 1.0, false));
  r.take("problem", "noise", real_at_least(c.problem.noise, 0.0, false));
  r.take("problem", "seed", int_in<std::uint64_t>(c.problem.seed, 0, std::numeric_limits<std::uint64_t>::max()));
  r.take("problem", "data", [&](std::string_view v, std::string&) {
    c.problem.data = std::string(v);
    return true;
  });

  // [method]
  r.take("method", "name", [&](std::string_view v, std::string& err) {
    std::vector<MethodKind> names;
    try {
      for (const auto item : split_list(v)) names.push_back(parse_method(item));
    } catch (const std::invalid_argument& e) {
      err = e.what();
      return false;
    }
    if (names.empty()) {
      err = "at least one method is required";
      return false;
    }
    c.method.names = std::move(names);
    return true;
  });
  r.take("method", "eta0", real_at_least(c.method.eta0, 0.0, true));
  r.take("method", "eta_rule", one_of(c.method.eta_rule, {{"one-over-t", EtaRule::kOneOverT},
                                                          {"constant", EtaRule::kConstant}}));
  r.take("method", "K_rule", one_of(c.method.epoch_rule, {{"corollary", EpochLengthRule::kCorollary},
                                                          {"fixed", EpochLengthRule::kFixed}}));
  r.take("method", "K", int_in<std::int64_t>(c.method.K, 1, kMax64));
  r.take("method", "bits_rule", one_of(c.method.bits_rule, {{"corollary", BitsRule::kCorollary},
                                                            {"fixed", BitsRule::kFixed}}));
  r.take("method", "bits_max", int_in<int>(c.method.bits_max, 2, kMaxBits));
  r.take("method", "bits", int_in<int>(c.method.bits, 2, kMaxBits, " (bits_max = 16)"));
  r.take("method", "delta_rule", one_of(c.method.delta_rule, {{"lemma2-exact", DeltaRule::kLemma2Exact},
                                                              {"practical", DeltaRule::kPractical},
                                                              {"fixed", DeltaRule::kFixed}}));
  r.take("method", "delta", real_at_least(c.method.delta, 0.0, true));
  r.take("method", "c", real_at_least(c.method.c, 0.0, true));
  r.take("method", "bucket_size", [&](std::string_view v, std::string& err) {
    if (v == "none") {
      c.method.bucket_size.reset();
      return true;
    }
    std::size_t b = 0;
    if (!parse_int(v, b) || b < 1) {
      err = "expected a positive integer or 'none', got '" + std::string(v) + "'";
      return false;
    }
    c.method.bucket_size = b;
    return true;
  });
  r.take("method", "qsgd_delta", one_of(c.method.qsgd_delta, {{"norm", QsgdDelta::kGradientNorm},
                                                              {"scaled", QsgdDelta::kScaledNorm}}));
  r.take("method", "averaging", one_of(c.method.averaging, {{"as-written", Averaging::kAsWritten},
                                                            {"skip-anchor", Averaging::kSkipAnchor}}));

  // [run]
  r.take("run", "T", int_in<std::int64_t>(c.run.epochs, 0, kMax64));
  r.take("run", "total_steps", [&](std::string_view v, std::string& err) {
    if (v == "none") {
      c.run.total_steps.reset();
      return true;
    }
    std::int64_t s = 0;
    if (!parse_int(v, s) || s < 0) {
      err = "expected a non-negative integer or 'none', got '" + std::string(v) + "'";
      return false;
    }
    c.run.total_steps = s;
    return true;
  });
  r.take("run", "seeds", [&](std::string_view v, std::string& err) {
    std::vector<std::uint64_t> seeds;
    for (const auto item : split_list(v)) {
      std::uint64_t s = 0;
      if (!parse_int(item, s)) {
        err = "bad seed '" + std::string(item) + "'";
        return false;
      }
      seeds.push_back(s);
    }
    if (seeds.empty()) {
      err = "at least one seed is required";
      return false;
    }
    c.run.seeds = std::move(seeds);
    return true;
  });
  r.take("run", "p", int_in<std::size_t>(c.run.workers, 1, 65534));
  r.take("run", "B", int_in<std::size_t>(c.run.batch_size, 1, kMaxSize));
  r.take("run", "report_every", int_in<std::int64_t>(c.run.report_every, 1, kMax64));

  // [output]
  r.take("output", "dir", [&](std::string_view v, std::string& err) {
    if (v.empty()) {
      err = "must not be empty";
      return false;
    }
    c.output.dir = std::string(v);
    return true;
  });
  r.take("output", "emission", one_of(c.output.emission, {{"per-epoch", Emission::kPerEpoch},
                                                          {"per-step", Emission::kPerStep}}));
  r.take("output", "trace", one_of(c.output.trace, {{"true", true}, {"false", false}}));
  r.take("output", "fit_window", [&](std::string_view v, std::string& err) {
    const auto sp = v.find_first_of(" \t,");
    std::int64_t lo = 0, hi = 0;
    if (sp == std::string_view::npos || !parse_int(trim(v.substr(0, sp)), lo) ||
        !parse_int(trim(v.substr(sp + 1)), hi) || lo < 1 || (hi != -1 && hi <= lo)) {
      err = "expected 't_lo t_hi' with 1 <= t_lo < t_hi (t_hi = -1 for the last epoch)";
      return false;
    }
    c.output.fit_lo = lo;
    c.output.fit_hi = hi;
    return true;
  });

  for (const auto& [sec, keys] : sections) {
    for (const auto& [key, e] : keys) {
      diags.push_back({e.line, "unknown key " + sec + "." + key});
    }
  }

  // Cross-field checks.
  const bool quantized_epoch = std::find(c.method.names.begin(), c.method.names.end(),
                                         MethodKind::kQesgd) != c.method.names.end();
  const bool mu_unavailable = c.problem.kind == ProblemKind::kLogisticL2 && c.problem.lambda <= 0.0;
  if (c.problem.kind == ProblemKind::kLogisticL2 && c.problem.lambda <= 0.0) {
    diags.push_back({r.line_of("problem", "lambda"),
                     "logistic-l2 needs lambda > 0 to be strongly convex"});
  }
  if (quantized_epoch && c.method.delta_rule == DeltaRule::kLemma2Exact && mu_unavailable) {
    diags.push_back({r.line_of("method", "delta_rule"),
                     "delta_rule = lemma2-exact needs the problem constant mu (delta_t = "
                     "|grad F(w_t)| / (mu 2^(b_t-1))), which is unavailable for logistic-l2 "
                     "with lambda = 0"});
  }
  if (c.method.epoch_rule == EpochLengthRule::kCorollary && mu_unavailable) {
    diags.push_back({r.line_of("method", "K_rule"),
                     "K_rule = corollary needs mu > 0 (K_t = 1/(3 mu eta_t))"});
  }
  if (c.method.bits > c.method.bits_max) {
    diags.push_back({r.line_of("method", "bits"), "bits = " + std::to_string(c.method.bits) +
                                                      " exceeds bits_max = " +
                                                      std::to_string(c.method.bits_max)});
  }
  if (c.problem.data.empty() && c.problem.n < c.problem.d) {
    diags.push_back({r.line_of("problem", "n"), "synthetic problems need n >= d"});
  }
  if (c.output.fit_hi != -1 && c.output.fit_hi > c.run.epochs && !c.run.total_steps) {
    diags.push_back({r.line_of("output", "fit_window"), "fit window ends after the last epoch T"});
  }

  if (!diags.empty()) {
    std::stable_sort(diags.begin(), diags.end(),
                     [](const auto& a, const auto& b) { return a.line < b.line; });
    throw ConfigError(std::move(diags));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  auto kv = [&out](std::string_view k, const std::string& v) {
    out += std::string(k) + " = " + v + "\n";
  };
  out += "[problem]\n";
  kv("kind", std::string(to_string(c.problem.kind)));
  kv("n", std::to_string(c.problem.n));
  kv("d", std::to_string(c.problem.d));
  kv("lambda", format_double(c.problem.lambda));
  kv("condition_target", format_double(c.problem.condition_target));
  kv("noise", format_double(c.problem.noise));
  kv("seed", std::to_string(c.problem.seed));
  if (!c.problem.data.empty()) kv("data", c.problem.data);

  out += "\n[method]\n";
  std::string names;
  for (std::size_t i = 0; i < c.method.names.size(); ++i) {
    names += (i ? ", " : "") + std::string(to_string(c.method.names[i]));
  }
  kv("name", names);
  kv("eta0", format_double(c.method.eta0));
  kv("eta_rule", std::string(to_string(c.method.eta_rule)));
  kv("K_rule", std::string(to_string(c.method.epoch_rule)));
  kv("K", std::to_string(c.method.K));
  kv("bits_rule", std::string(to_string(c.method.bits_rule)));
  kv("bits", std::to_string(c.method.bits));
  kv("bits_max", std::to_string(c.method.bits_max));
  kv("delta_rule", std::string(to_string(c.method.delta_rule)));
  kv("c", format_double(c.method.c));
  kv("delta", format_double(c.method.delta));
  kv("bucket_size", c.method.bucket_size ? std::to_string(*c.method.bucket_size) : "none");
  kv("qsgd_delta", c.method.qsgd_delta == QsgdDelta::kGradientNorm ? "norm" : "scaled");
  kv("averaging", c.method.averaging == Averaging::kAsWritten ? "as-written" : "skip-anchor");

  out += "\n[run]\n";
  kv("T", std::to_string(c.run.epochs));
  kv("total_steps", c.run.total_steps ? std::to_string(*c.run.total_steps) : "none");
  std::string seeds;
  for (std::size_t i = 0; i < c.run.seeds.size(); ++i) {
    seeds += (i ? ", " : "") + std::to_string(c.run.seeds[i]);
  }
  kv("seeds", seeds);
  kv("p", std::to_string(c.run.workers));
  kv("B", std::to_string(c.run.batch_size));
  kv("report_every", std::to_string(c.run.report_every));

  out += "\n[output]\n";
  kv("dir", c.output.dir);
  kv("emission", c.output.emission == Emission::kPerEpoch ? "per-epoch" : "per-step");
  kv("trace", c.output.trace ? "true" : "false");
  kv("fit_window", std::to_string(c.output.fit_lo) + " " + std::to_string(c.output.fit_hi));
  return out;
}

}  // namespace qesgd
