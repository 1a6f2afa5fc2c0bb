#include "disttrack/harness/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "disttrack/baseline/baselines.hpp"
#include "disttrack/count/count_tracker.hpp"
#include "disttrack/error.hpp"
#include "disttrack/freq/freq_tracker.hpp"
#include "disttrack/rank/rank_tracker.hpp"

namespace disttrack::harness {

namespace {

const std::map<std::string, TrackerKind> kTrackers{
    {"count", TrackerKind::kCount},
    {"det_count", TrackerKind::kDetCount},
    {"freq", TrackerKind::kFreq},
    {"rank", TrackerKind::kRank},
    {"sample", TrackerKind::kSample},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      value = static_cast<T>(std::stod(text, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == text.size() && used > 0) return value;
  } else {
    // allow 1e6-style integers
    if (text.find_first_of("eE.") != std::string::npos) {
      const double d = parse_number<double>(key, text);
      if (d >= 0 && d == std::floor(d)) return static_cast<T>(d);
    } else {
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec == std::errc{} && ptr == text.data() + text.size()) return value;
    }
  }
  throw ConfigError("config: bad value for '" + key + "': '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "1,2,5" or "1..20" (inclusive)
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split_list(text)) {
    if (auto dots = part.find(".."); dots != std::string::npos) {
      const auto lo = parse_number<std::uint64_t>("seeds", trim(part.substr(0, dots)));
      const auto hi = parse_number<std::uint64_t>("seeds", trim(part.substr(dots + 2)));
      if (hi < lo) throw ConfigError("config: empty seed range '" + part + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_number<std::uint64_t>("seeds", part));
    }
  }
  return seeds;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config: bad boolean for '" + key + "': '" + text + "'");
}

// Smallest odd m with m >= 2 ln(1/delta).
std::uint32_t copies_for(double delta) {
  auto m = static_cast<std::uint32_t>(std::ceil(2 * std::log(1 / delta)));
  return m % 2 == 1 ? m : m + 1;
}

using Setter = std::function<void(ExperimentSpec&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"tracker", [](ExperimentSpec& s, const std::string& v) { s.tracker = parse_tracker(v); }},
      {"eps", [](ExperimentSpec& s, const std::string& v) { s.eps = parse_number<double>("eps", v); }},
      {"delta", [](ExperimentSpec& s, const std::string& v) { s.delta = parse_number<double>("delta", v); }},
      {"copies", [](ExperimentSpec& s, const std::string& v) {
         s.copies = v == "auto" ? 0 : parse_number<std::uint32_t>("copies", v);
       }},
      {"c_p", [](ExperimentSpec& s, const std::string& v) { s.c_p = parse_number<double>("c_p", v); }},
      {"sample_size", [](ExperimentSpec& s, const std::string& v) {
         s.sample_size = parse_number<std::uint64_t>("sample_size", v);
       }},
      {"summary", [](ExperimentSpec& s, const std::string& v) {
         if (v == "mergeable") {
           s.summary = rank::SummaryKind::kMergeable;
         } else if (v == "exact") {
           s.summary = rank::SummaryKind::kExact;
         } else {
           throw ConfigError("config: summary must be mergeable or exact");
         }
       }},
      {"probes", [](ExperimentSpec& s, const std::string& v) {
         s.probes.clear();
         if (v == "auto") return;
         for (const std::string& p : split_list(v)) {
           s.probes.push_back(parse_number<std::uint64_t>("probes", p));
         }
       }},
      {"seeds", [](ExperimentSpec& s, const std::string& v) { s.seeds = parse_seeds(v); }},
      {"top_items", [](ExperimentSpec& s, const std::string& v) {
         s.top_items = parse_number<std::size_t>("top_items", v);
       }},
      {"k", [](ExperimentSpec& s, const std::string& v) { s.workload.k = parse_number<SiteId>("k", v); }},
      {"N", [](ExperimentSpec& s, const std::string& v) { s.workload.n = parse_number<std::uint64_t>("N", v); }},
      {"workload.kind", [](ExperimentSpec& s, const std::string& v) {
         s.workload.kind = workload::parse_kind(v);
       }},
      {"workload.N", [](ExperimentSpec& s, const std::string& v) {
         s.workload.n = parse_number<std::uint64_t>("workload.N", v);
       }},
      {"workload.k", [](ExperimentSpec& s, const std::string& v) {
         s.workload.k = parse_number<SiteId>("workload.k", v);
       }},
      {"workload.alpha", [](ExperimentSpec& s, const std::string& v) {
         s.workload.alpha = parse_number<double>("workload.alpha", v);
       }},
      {"workload.universe", [](ExperimentSpec& s, const std::string& v) {
         s.workload.universe = parse_number<std::uint64_t>("workload.universe", v);
       }},
      {"workload.rounds", [](ExperimentSpec& s, const std::string& v) {
         s.workload.rounds = parse_number<std::uint32_t>("workload.rounds", v);
       }},
      {"workload.subrounds", [](ExperimentSpec& s, const std::string& v) {
         s.workload.subrounds = parse_number<std::uint32_t>("workload.subrounds", v);
       }},
      {"workload.force_s", [](ExperimentSpec& s, const std::string& v) {
         s.workload.force_s = parse_number<std::uint32_t>("workload.force_s", v);
       }},
      {"workload.force_single_site", [](ExperimentSpec& s, const std::string& v) {
         s.workload.force_single_site = parse_bool("workload.force_single_site", v);
       }},
      {"workload.force_site", [](ExperimentSpec& s, const std::string& v) {
         s.workload.force_site = parse_number<SiteId>("workload.force_site", v);
       }},
  };
  return table;
}

}  // namespace

std::string tracker_name(TrackerKind kind) {
  for (const auto& [name, k] : kTrackers) {
    if (k == kind) return name;
  }
  return "?";
}

TrackerKind parse_tracker(const std::string& name) {
  auto it = kTrackers.find(name);
  if (it == kTrackers.end()) {
    throw ConfigError("unknown tracker '" + name +
                      "' (count, det_count, freq, rank, sample)");
  }
  return it->second;
}

ExperimentSpec parse_config(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    }
    it->second(spec, value);
  }
  return spec;
}

ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

std::vector<std::string> validate(const ExperimentSpec& spec) {
  std::vector<std::string> warnings;
  workload::validate(spec.workload);
  const SiteId k = spec.workload.k;
  // The deterministic baseline is well defined at eps = 1 (doubling).
  const double eps_max = spec.tracker == TrackerKind::kDetCount ? 1.0 : 1.0 - 1e-12;
  if (!(spec.eps > 0.0 && spec.eps <= eps_max)) {
    throw ConfigError(spec.tracker == TrackerKind::kDetCount ? "eps must lie in (0, 1]"
                                                             : "eps must lie in (0, 1)");
  }
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  if (spec.copies != 0 && spec.copies % 2 == 0) {
    throw ConfigError("copies must be odd (median boosting)");
  }
  if (spec.copies != 1 && spec.tracker != TrackerKind::kCount) {
    throw ConfigError("copies applies to the count tracker only");
  }
  if (!(spec.c_p > 0.0)) throw ConfigError("c_p must be positive");
  if (spec.seeds.empty()) throw ConfigError("at least one seed is required");
  if (!std::is_sorted(spec.probes.begin(), spec.probes.end())) {
    throw ConfigError("probes must be sorted");
  }
  if (spec.tracker == TrackerKind::kRank &&
      spec.workload.kind == workload::Kind::kZipf) {
    throw ConfigError("rank tracking needs distinct keys; zipf repeats items");
  }
  if (spec.sample_size == 1) throw ConfigError("sample_size must be >= 2");
  if (static_cast<double>(k) * spec.eps * spec.eps > 1.0 + 1e-9) {
    warnings.push_back("k > 1/eps^2: outside the regime the bounds assume");
  }
  return warnings;
}

std::vector<TimeInstant> default_probes(std::uint64_t n, double eps) {
  std::vector<TimeInstant> probes;
  if (n == 0) return probes;
  double next = 1;
  for (std::uint64_t count = 1; count <= n;) {
    probes.push_back(count - 1);
    next = std::max(next * (1 + eps), static_cast<double>(count + 1));
    count = static_cast<std::uint64_t>(std::ceil(next));
  }
  if (probes.back() != n - 1) probes.push_back(n - 1);
  return probes;
}

workload::WorkloadSpec workload_for(const ExperimentSpec& spec,
                                    std::uint64_t seed) {
  workload::WorkloadSpec w = spec.workload;
  w.seed = derive_seed(seed, {static_cast<std::uint64_t>(Stream::kWorkload)});
  return w;
}

std::unique_ptr<Protocol> make_protocol(const ExperimentSpec& spec,
                                        std::uint64_t seed) {
  const SiteId k = spec.workload.k;
  switch (spec.tracker) {
    case TrackerKind::kCount: {
      const count::CountConfig config{k, spec.eps, spec.c_p};
      const std::uint32_t m = spec.copies == 0 ? copies_for(spec.delta) : spec.copies;
      if (m == 1) return std::make_unique<count::CountTracker>(config, seed);
      return std::make_unique<count::BoostedCountTracker>(config, m, seed);
    }
    case TrackerKind::kDetCount:
      return std::make_unique<baseline::DetCountTracker>(k, spec.eps);
    case TrackerKind::kFreq:
      return std::make_unique<freq::FreqTracker>(
          freq::FreqConfig{k, spec.eps, spec.c_p}, seed);
    case TrackerKind::kRank:
      return std::make_unique<rank::RankTracker>(
          rank::RankConfig{k, spec.eps, spec.summary, false}, seed);
    case TrackerKind::kSample:
      return std::make_unique<baseline::PrioritySampleTracker>(
          k,
          spec.sample_size != 0 ? spec.sample_size
                                : baseline::sample_size_for(spec.eps),
          seed);
  }
  throw ConfigError("unknown tracker");
}

namespace {

enum class QueryMode { kCount, kFrequency, kRank };

QueryMode query_mode(const ExperimentSpec& spec) {
  switch (spec.tracker) {
    case TrackerKind::kFreq:
      return QueryMode::kFrequency;
    case TrackerKind::kRank:
      return QueryMode::kRank;
    case TrackerKind::kSample:
      if (spec.workload.kind == workload::Kind::kZipf) return QueryMode::kFrequency;
      if (spec.workload.kind == workload::Kind::kRandomKeys) return QueryMode::kRank;
      return QueryMode::kCount;
    default:
      return QueryMode::kCount;
  }
}

ProbePlanner make_planner(const ExperimentSpec& spec, const workload::Workload& w) {
  const QueryMode mode = query_mode(spec);
  const std::size_t top = spec.top_items;
  return [mode, top, &w](TimeInstant t, const Protocol& p) {
    const workload::GroundTruth& truth = w.truth();
    std::vector<QueryOutcome> out;
    auto ask = [&](Query q, double exact) {
      out.push_back({q, exact, p.estimate(q)});
    };
    switch (mode) {
      case QueryMode::kCount:
        ask({QueryKind::kCount, 0}, static_cast<double>(truth.count()));
        break;
      case QueryMode::kFrequency:
        for (const auto& [item, f] : truth.top(top)) {
          ask({QueryKind::kFrequency, item}, static_cast<double>(f));
        }
        break;
      case QueryMode::kRank:
        for (int d = 1; d <= 9; ++d) {
          const Key x = truth.key_at_rank((t + 1) * d / 10);
          ask({QueryKind::kRank, x}, static_cast<double>(truth.rank(x)));
        }
        break;
    }
    return out;
  };
}

}  // namespace

RunOutput run_one(const ExperimentSpec& spec, std::uint64_t seed, bool keep_log) {
  validate(spec);
  const QueryMode mode = query_mode(spec);
  workload::TruthOptions truth;
  truth.frequencies = mode == QueryMode::kFrequency;
  truth.ranks = mode == QueryMode::kRank;
  truth.top_items = std::max<std::size_t>(16, spec.top_items);
  if (spec.workload.kind == workload::Kind::kZipf) {
    truth.dense_universe = spec.workload.universe;
  }
  workload::Workload w(workload_for(spec, seed), truth);
  std::unique_ptr<Protocol> protocol = make_protocol(spec, seed);
  std::vector<TimeInstant> probes =
      spec.probes.empty() ? default_probes(w.size(), spec.eps) : spec.probes;
  std::erase_if(probes, [&](TimeInstant t) { return t >= w.size(); });

  RunOptions options;
  options.keep_log = keep_log;
  SimulationResult result =
      run_simulation(*protocol, w, probes, make_planner(spec, w), options);

  RunOutput out;
  RunSummary& s = out.summary;
  s.seed = seed;
  s.arrivals = result.arrivals;
  for (const SiteTraffic& t : result.stats.per_site()) {
    s.comm.messages_up += t.messages_up;
    s.comm.messages_down += t.messages_down;
    s.comm.words_up += t.words_up;
    s.comm.words_down += t.words_down;
  }
  s.peak_site_words = protocol->peak_site_words();
  s.probes = result.records.size();
  for (const ExperimentRecord& rec : result.records) {
    s.max_abs_err = std::max(s.max_abs_err, rec.abs_err);
    s.max_rel_err = std::max(s.max_rel_err, rec.rel_err);
    if (rec.abs_err > spec.eps * static_cast<double>(rec.t + 1)) {
      ++s.probe_failures;
    }
  }
  if (!result.records.empty()) {
    s.final_truth = result.records.back().truth;
    s.final_estimate = result.records.back().estimate;
  }
  out.records = std::move(result.records);
  out.log = std::move(result.log);
  return out;
}

void write_csv_header(std::ostream& os) {
  os << "seed,probe_t,truth,estimate,abs_err,rel_err,msgs_up,msgs_down,"
        "words_up,words_down,peak_site_words\n";
}

void write_run_csv(std::ostream& os, const RunOutput& run) {
  const RunSummary& s = run.summary;
  if (s.arrivals == 0) return;
  auto precise = [&os](double x) -> std::ostream& {
    return os << std::setprecision(17) << x;
  };
  for (const ExperimentRecord& rec : run.records) {
    os << s.seed << ',' << rec.t << ',';
    precise(rec.truth) << ',';
    precise(rec.estimate) << ',';
    precise(rec.abs_err) << ',';
    precise(rec.rel_err) << ',' << rec.comm.messages_up << ','
                         << rec.comm.messages_down << ',' << rec.comm.words_up
                         << ',' << rec.comm.words_down << ','
                         << rec.peak_site_words << '\n';
  }
  os << s.seed << ",summary,";
  precise(s.final_truth) << ',';
  precise(s.final_estimate) << ',';
  precise(s.max_abs_err) << ',';
  precise(s.max_rel_err) << ',' << s.comm.messages_up << ','
                         << s.comm.messages_down << ',' << s.comm.words_up
                         << ',' << s.comm.words_down << ','
                         << s.peak_site_words << '\n';
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "k") return SweepAxis::kK;
  if (name == "eps") return SweepAxis::kEps;
  if (name == "N") return SweepAxis::kN;
  throw ConfigError("sweep axis must be k, eps or N");
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kK:
      return "k";
    case SweepAxis::kEps:
      return "eps";
    case SweepAxis::kN:
      return "N";
  }
  return "?";
}

ExperimentSpec with_axis_value(ExperimentSpec spec, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::kK:
      spec.workload.k = static_cast<SiteId>(value);
      break;
    case SweepAxis::kEps:
      spec.eps = value;
      break;
    case SweepAxis::kN:
      spec.workload.n = static_cast<std::uint64_t>(value);
      break;
  }
  return spec;
}

SweepResult sweep(const ExperimentSpec& base, SweepAxis axis,
                  const std::vector<double>& values) {
  if (values.size() < 4) throw ConfigError("a slope fit needs at least 4 points");
  if (base.seeds.size() < kMinSweepSeeds) {
    throw ConfigError("a sweep needs at least " + std::to_string(kMinSweepSeeds) +
                      " seeds per point");
  }
  SweepResult result;
  result.axis = axis;
  std::vector<ExperimentSpec> specs;
  for (double value : values) {
    specs.push_back(with_axis_value(base, axis, value));
    validate(specs.back());
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentSpec spec = specs[i];
    // cost only: a probe past the end is dropped, so nothing is queried
    spec.probes = {std::numeric_limits<TimeInstant>::max()};
    SweepPoint point;
    point.value = values[i];
    for (std::uint64_t seed : spec.seeds) {
      const RunOutput run = run_one(spec, seed);
      point.messages.add(static_cast<double>(run.summary.total_messages()));
      point.words.add(static_cast<double>(run.summary.total_words()));
    }
    switch (axis) {
      case SweepAxis::kK:
        xs.push_back(values[i]);
        break;
      case SweepAxis::kEps:
        xs.push_back(1.0 / values[i]);
        break;
      case SweepAxis::kN:
        xs.push_back(std::log(values[i]));
        break;
    }
    ys.push_back(point.messages.mean());
    result.points.push_back(std::move(point));
  }
  result.fit = stats::fit_log_log(xs, ys);
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "axis,value,seeds,mean_messages,sd_messages,mean_words,sd_words\n";
  for (const SweepPoint& p : result.points) {
    os << axis_name(result.axis) << ',' << std::setprecision(10) << p.value << ','
       << p.messages.count() << ',' << p.messages.mean() << ','
       << p.messages.stddev() << ',' << p.words.mean() << ','
       << p.words.stddev() << '\n';
  }
  os << "# fit: slope " << result.fit.slope << " ci [" << result.fit.slope_ci.lo
     << ", " << result.fit.slope_ci.hi << "] intercept " << result.fit.intercept
     << '\n';
}

}  // namespace disttrack::harness
