#pragma once

// Experiment orchestration: configuration files, single simulation runs,
// block-length and launch-power sweeps, and CSV output.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pcslab/ccdm.hpp"
#include "pcslab/errors.hpp"
#include "pcslab/fiber.hpp"
#include "pcslab/interleaver.hpp"
#include "pcslab/metrics.hpp"
#include "pcslab/pas.hpp"
#include "pcslab/random.hpp"
#include "pcslab/receiver.hpp"
#include "pcslab/shaping.hpp"
#include "pcslab/waveform.hpp"

namespace pcslab {

enum class AmplitudeSource { ccdm, iid };

/// How the interleaver sits in the transmit chain.
///   none:  PAS symbols are launched as matched.
///   plain: the launched stream is the interleaved PAS stream.
///   chain: interleave, inner encode, de-interleave; the launched stream equals the PAS stream.
enum class InterleaverMode { none, plain, chain };

struct ExperimentConfig {
  FiberLinkConfig link;
  GridParams grid;
  std::size_t num_symbols = 1u << 16;
  std::optional<std::size_t> measured_channel;  // defaults to the centre channel
  bool ase_noise = true;

  std::size_t qam_order = 64;
  std::optional<std::vector<double>> target_distribution;
  double target_entropy = 1.75;
  AmplitudeSource source = AmplitudeSource::ccdm;

  std::vector<std::size_t> n_list{10, 100, 1000, 5000};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  InterleaverSpec interleaver;
  InterleaverMode interleaver_mode = InterleaverMode::none;

  std::size_t gmi_samples = 200'000;
  std::uint64_t gmi_seed = 1;

  std::vector<double> power_list_dbm;
  std::size_t power_sweep_n = 1000;

  std::string output;

  std::size_t channel() const { return measured_channel.value_or(grid.channels.center_index()); }

  AmplitudeDistribution target() const {
    const QamConstellation qam(qam_order);
    if (target_distribution) return {qam.amplitude_alphabet(), *target_distribution};
    return mb_distribution(qam.amplitude_alphabet(), target_entropy);
  }

  void validate() const {
    link.validate();
    if (n_list.empty()) throw ConfigError("n_list must not be empty");
    if (!std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
      throw ConfigError("n_list must be strictly ascending");
    if (n_list.front() == 0) throw ConfigError("block lengths must be positive");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (num_symbols == 0) throw ConfigError("num_symbols must be positive");
    if (grid.channels.count == 0) throw ConfigError("at least one channel is required");
    if (channel() >= grid.channels.count) throw ConfigError("measured_channel outside the channel plan");
    if (gmi_samples < kMinGmiSamples) throw ConfigError("gmi_samples must be at least 10000");
    if (power_sweep_n == 0) throw ConfigError("power_sweep_n must be positive");
    if (interleaver_mode != InterleaverMode::none && num_symbols % interleaver.span != 0)
      throw ConfigError("num_symbols must be a multiple of the interleaver span");
    try {
      QamConstellation qam(qam_order);
      (void)target();
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Config file parsing

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) parts.push_back(trim(item));
  return parts;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<T>(key, part));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + text + "'");
}

}  // namespace detail

/// "identity", "block:ROWS:COLS" or "permutation:SEED:SPAN".
inline InterleaverSpec parse_interleaver(const std::string& text) {
  const auto parts = detail::split(text, ':');
  try {
    if (parts.size() == 1 && parts[0] == "identity") return InterleaverSpec::identity();
    if (parts.size() == 3 && parts[0] == "block")
      return InterleaverSpec::block(detail::parse_number<std::size_t>("interleaver", parts[1]),
                                    detail::parse_number<std::size_t>("interleaver", parts[2]));
    if (parts.size() == 3 && parts[0] == "permutation")
      return InterleaverSpec::permutation(detail::parse_number<std::uint64_t>("interleaver", parts[1]),
                                          detail::parse_number<std::size_t>("interleaver", parts[2]));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("interleaver: ") + e.what());
  }
  throw ConfigError("interleaver: unrecognized spec '" + text + "'");
}

inline ExperimentConfig parse_config(std::istream& is, const std::string& origin = "config") {
  using namespace detail;
  ExperimentConfig cfg;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto& L = cfg.link;
    auto& G = cfg.grid;

    if (key == "span_length_km") L.span_length_km = parse_number<double>(key, val);
    else if (key == "num_spans") L.num_spans = parse_number<std::size_t>(key, val);
    else if (key == "attenuation_db_per_km") L.attenuation_db_per_km = parse_number<double>(key, val);
    else if (key == "dispersion_ps_per_nm_km") L.dispersion_ps_per_nm_km = parse_number<double>(key, val);
    else if (key == "wavelength_nm") L.wavelength_nm = parse_number<double>(key, val);
    else if (key == "gamma_per_w_km") L.gamma_per_w_km = parse_number<double>(key, val);
    else if (key == "step_size_km") L.step_size_km = parse_number<double>(key, val);
    else if (key == "step_rule") {
      if (val == "uniform") L.step_rule = StepRule::uniform;
      else if (val == "nonlinear_phase") L.step_rule = StepRule::nonlinear_phase;
      else throw ConfigError("key 'step_rule': expected uniform or nonlinear_phase");
    }
    else if (key == "noise_figure_db") L.noise_figure_db = parse_number<double>(key, val);
    else if (key == "launch_power_dbm") L.launch_power_dbm = parse_number<double>(key, val);
    else if (key == "linear_mode") L.linear_mode = parse_bool(key, val);
    else if (key == "amplified") L.amplified = parse_bool(key, val);
    else if (key == "ase_noise") cfg.ase_noise = parse_bool(key, val);
    else if (key == "symbol_rate_gbd") G.symbol_rate_gbd = parse_number<double>(key, val);
    else if (key == "roll_off") G.roll_off = parse_number<double>(key, val);
    else if (key == "num_channels") G.channels.count = parse_number<std::size_t>(key, val);
    else if (key == "channel_spacing_ghz") G.channels.spacing_ghz = parse_number<double>(key, val);
    else if (key == "samples_per_symbol") G.samples_per_symbol = parse_number<std::size_t>(key, val);
    else if (key == "num_symbols") cfg.num_symbols = parse_number<std::size_t>(key, val);
    else if (key == "measured_channel") cfg.measured_channel = parse_number<std::size_t>(key, val);
    else if (key == "qam_order") cfg.qam_order = parse_number<std::size_t>(key, val);
    else if (key == "target_distribution") cfg.target_distribution = parse_list<double>(key, val);
    else if (key == "target_entropy") cfg.target_entropy = parse_number<double>(key, val);
    else if (key == "source") {
      if (val == "ccdm") cfg.source = AmplitudeSource::ccdm;
      else if (val == "iid") cfg.source = AmplitudeSource::iid;
      else throw ConfigError("key 'source': expected ccdm or iid");
    } else if (key == "n_list") cfg.n_list = parse_list<std::size_t>(key, val);
    else if (key == "seeds") cfg.seeds = parse_list<std::uint64_t>(key, val);
    else if (key == "interleaver") cfg.interleaver = parse_interleaver(val);
    else if (key == "interleaver_mode") {
      if (val == "none") cfg.interleaver_mode = InterleaverMode::none;
      else if (val == "plain") cfg.interleaver_mode = InterleaverMode::plain;
      else if (val == "chain") cfg.interleaver_mode = InterleaverMode::chain;
      else throw ConfigError("key 'interleaver_mode': expected none, plain or chain");
    } else if (key == "gmi_samples") cfg.gmi_samples = parse_number<std::size_t>(key, val);
    else if (key == "gmi_seed") cfg.gmi_seed = parse_number<std::uint64_t>(key, val);
    else if (key == "power_list_dbm") cfg.power_list_dbm = parse_list<double>(key, val);
    else if (key == "power_sweep_n") cfg.power_sweep_n = parse_number<std::size_t>(key, val);
    else if (key == "output") cfg.output = val;
    else throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse_config(is, path);
}

// ---------------------------------------------------------------------------
// Single run

/// Streams derived from the run seed; the purpose tag keeps them independent.
namespace seed_tag {
inline constexpr std::uint64_t data = 0x64617461;
inline constexpr std::uint64_t signs = 0x7369676e;
inline constexpr std::uint64_t ase = 0x617365;
}  // namespace seed_tag

struct RunPoint {
  std::size_t n = 0;  // ignored for the i.i.d. source
  std::uint64_t seed = 1;
  double launch_power_dbm = 2.0;
};

struct RunOutput {
  std::vector<ShapedFrame> frames;           // one per channel
  std::vector<std::vector<cplx>> launched;   // symbol streams entering the modulator
  WaveformGrid received;                     // waveform after the last amplifier
  std::vector<cplx> rx_symbols;              // measured channel after DSP
  SnrEstimate snr;
};

/// Amplitude frame of one channel: ceil(2N / n) CCDM blocks truncated to 2N
/// amplitudes, or 2N i.i.d. draws.
inline ShapedFrame build_channel_frame(const ExperimentConfig& cfg, const AmplitudeDistribution& target,
                                       std::size_t n, std::uint64_t seed, std::size_t channel) {
  const std::size_t amps = 2 * cfg.num_symbols;
  if (cfg.source == AmplitudeSource::iid) {
    auto engine = seeded_engine({seed, channel, seed_tag::data});
    return generate_iid_sequence(target, amps, engine);
  }
  const auto codec = build_ccdm(quantize_composition(target, n));
  BitSource data(seeded_engine({seed, channel, seed_tag::data, n}));
  auto frame = generate_compound_sequence(codec, (amps + n - 1) / n, data);
  frame.amplitudes.resize(amps);
  frame.num_blocks = (amps + n - 1) / n;
  while (!frame.boundaries.empty() && frame.boundaries.back() >= amps) frame.boundaries.pop_back();
  return frame;
}

inline RunOutput simulate_run(const ExperimentConfig& cfg, const RunPoint& point) {
  const QamConstellation qam(cfg.qam_order);
  const auto target = cfg.target();
  const std::size_t channels = cfg.grid.channels.count;

  RunOutput out;
  for (std::size_t c = 0; c < channels; ++c) {
    auto frame = build_channel_frame(cfg, target, point.n, point.seed, c);
    // Signs do not depend on n, so runs at different block lengths share them.
    BitSource signs(seeded_engine({point.seed, c, seed_tag::signs}));
    frame = pas_assemble(std::move(frame), signs.draw(2 * cfg.num_symbols), qam);
    switch (cfg.interleaver_mode) {
      case InterleaverMode::none:
        out.launched.push_back(frame.symbols);
        break;
      case InterleaverMode::plain:
        out.launched.push_back(interleave(frame.symbols, cfg.interleaver));
        break;
      case InterleaverMode::chain:
        out.launched.push_back(structure_preserving_chain(frame, cfg.interleaver));
        break;
    }
    out.frames.push_back(std::move(frame));
  }

  FiberLinkConfig link = cfg.link;
  link.launch_power_dbm = point.launch_power_dbm;
  auto wave = rrc_modulate(out.launched, cfg.grid, dbm_to_watt(point.launch_power_dbm));
  std::optional<GaussianSource> ase;
  if (cfg.ase_noise) ase.emplace(seeded_engine({point.seed, seed_tag::ase}));
  out.received = ssfm_propagate(std::move(wave), link, ase ? &*ase : nullptr);

  const auto ch = cfg.channel();
  out.rx_symbols = rx_dsp(out.received, link, ch);
  out.snr = estimate_snr(out.launched[ch], out.rx_symbols);
  return out;
}

/// Runs `count` independent jobs on up to `jobs` threads; results land in
/// their own slot, so order never depends on completion.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Re-raises a run failure with the offending point attached, keeping config errors distinguishable.
[[noreturn]] inline void rethrow_with_point(const std::string& where) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(where + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  std::size_t n = 0;
  double rate_loss = 0.0;
  double snr_eff_db_mean = 0.0;
  double snr_eff_db_std = 0.0;
  double gmi = 0.0;
  double air_n = 0.0;
  std::size_t num_seeds = 0;
  std::vector<double> snr_per_seed;  // not part of the CSV

  /// A single seed gives no spread estimate; the std column then reads 0.
  bool std_available() const { return num_seeds >= 2; }
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct SnrStats {
  double mean = 0.0;
  double std = 0.0;
};

inline SnrStats snr_stats(const std::vector<double>& v) {
  SnrStats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() >= 2) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

/// Effective SNR per (n, seed) over a link, then GMI at the mean SNR and AIR_n.
/// The i.i.d. source has no block length: one row with n = 0 and zero rate loss.
inline SweepResult run_sweep_n(const ExperimentConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  const QamConstellation qam(cfg.qam_order);
  const auto target = cfg.target();
  const std::vector<std::size_t> ns =
      cfg.source == AmplitudeSource::iid ? std::vector<std::size_t>{0} : cfg.n_list;

  std::vector<double> snr(ns.size() * cfg.seeds.size());
  parallel_for(snr.size(), jobs, [&](std::size_t i) {
    const std::size_t n = ns[i / cfg.seeds.size()];
    const std::uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
    try {
      snr[i] = simulate_run(cfg, {n, seed, cfg.link.launch_power_dbm}).snr.snr_db;
    } catch (...) {
      rethrow_with_point("n=" + std::to_string(n) + ", seed=" + std::to_string(seed));
    }
  });

  SweepResult result;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    SweepRow row;
    row.n = ns[k];
    row.snr_per_seed.assign(snr.begin() + static_cast<std::ptrdiff_t>(k * cfg.seeds.size()),
                            snr.begin() + static_cast<std::ptrdiff_t>((k + 1) * cfg.seeds.size()));
    row.num_seeds = row.snr_per_seed.size();
    const auto stats = snr_stats(row.snr_per_seed);
    row.snr_eff_db_mean = stats.mean;
    row.snr_eff_db_std = stats.std;
    if (cfg.source == AmplitudeSource::ccdm)
      row.rate_loss = rate_loss(build_ccdm(quantize_composition(target, row.n)), target);
    row.gmi = gmi_monte_carlo(qam, target, row.snr_eff_db_mean, cfg.gmi_samples, cfg.gmi_seed);
    row.air_n = air_n(row.gmi, row.rate_loss);
    result.rows.push_back(std::move(row));
  }
  return result;
}

struct PowerRow {
  double launch_power_dbm = 0.0;
  double snr_eff_db_mean = 0.0;
  double snr_eff_db_std = 0.0;
  std::size_t num_seeds = 0;
};

/// Effective SNR versus launch power at block length power_sweep_n.
inline std::vector<PowerRow> run_sweep_power(const ExperimentConfig& cfg, const std::vector<double>& powers_dbm,
                                             std::size_t jobs = 1) {
  if (powers_dbm.empty()) throw ContractError("power list must not be empty");
  for (double p : powers_dbm)
    if (!std::isfinite(p)) throw ContractError("launch powers must be finite");
  cfg.validate();

  std::vector<double> snr(powers_dbm.size() * cfg.seeds.size());
  parallel_for(snr.size(), jobs, [&](std::size_t i) {
    const double p = powers_dbm[i / cfg.seeds.size()];
    const std::uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
    try {
      snr[i] = simulate_run(cfg, {cfg.power_sweep_n, seed, p}).snr.snr_db;
    } catch (...) {
      rethrow_with_point("power=" + std::to_string(p) + " dBm, seed=" + std::to_string(seed));
    }
  });

  std::vector<PowerRow> rows;
  for (std::size_t k = 0; k < powers_dbm.size(); ++k) {
    const std::vector<double> v(snr.begin() + static_cast<std::ptrdiff_t>(k * cfg.seeds.size()),
                                snr.begin() + static_cast<std::ptrdiff_t>((k + 1) * cfg.seeds.size()));
    const auto stats = snr_stats(v);
    rows.push_back({powers_dbm[k], stats.mean, stats.std, v.size()});
  }
  return rows;
}

/// Launch power with the highest mean SNR.
inline double optimum_power_dbm(const std::vector<PowerRow>& rows) {
  if (rows.empty()) throw ContractError("empty power sweep");
  return std::max_element(rows.begin(), rows.end(), [](const PowerRow& a, const PowerRow& b) {
           return a.snr_eff_db_mean < b.snr_eff_db_mean;
         })->launch_power_dbm;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kSweepCsvHeader =
    "n,rate_loss_bits_per_amp,snr_eff_db_mean,snr_eff_db_std,gmi_bits_per_2d,air_n_bits_per_2d,num_seeds";
inline constexpr const char* kPowerCsvHeader = "launch_power_dbm,snr_eff_db_mean,snr_eff_db_std,num_seeds";

namespace detail {

/// Shortest decimal that parses back to the same double; always '.'-separated.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << text;
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

inline std::string sweep_csv(const SweepResult& result) {
  using detail::format_double;
  std::string out = std::string(kSweepCsvHeader) + "\n";
  auto rows = result.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.n < b.n; });
  for (const auto& r : rows)
    out += std::to_string(r.n) + "," + format_double(r.rate_loss) + "," + format_double(r.snr_eff_db_mean) + "," +
           format_double(r.snr_eff_db_std) + "," + format_double(r.gmi) + "," + format_double(r.air_n) + "," +
           std::to_string(r.num_seeds) + "\n";
  return out;
}

inline void emit_csv(const SweepResult& result, const std::string& path) {
  detail::write_text_file(path, sweep_csv(result));
}

inline SweepResult parse_sweep_csv(std::istream& is) {
  using namespace detail;
  std::string line;
  if (!std::getline(is, line) || trim(line) != kSweepCsvHeader) throw ContractError("unexpected sweep CSV header");
  SweepResult result;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw ContractError("sweep CSV row needs 7 fields: " + line);
    SweepRow r;
    r.n = parse_number<std::size_t>("n", f[0]);
    r.rate_loss = parse_number<double>("rate_loss", f[1]);
    r.snr_eff_db_mean = parse_number<double>("snr_eff_db_mean", f[2]);
    r.snr_eff_db_std = parse_number<double>("snr_eff_db_std", f[3]);
    r.gmi = parse_number<double>("gmi", f[4]);
    r.air_n = parse_number<double>("air_n", f[5]);
    r.num_seeds = parse_number<std::size_t>("num_seeds", f[6]);
    result.rows.push_back(r);
  }
  return result;
}

inline SweepResult read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return parse_sweep_csv(is);
}

inline std::string power_csv(const std::vector<PowerRow>& rows) {
  using detail::format_double;
  std::string out = std::string(kPowerCsvHeader) + "\n";
  for (const auto& r : rows)
    out += format_double(r.launch_power_dbm) + "," + format_double(r.snr_eff_db_mean) + "," +
           format_double(r.snr_eff_db_std) + "," + std::to_string(r.num_seeds) + "\n";
  return out;
}

inline void emit_power_csv(const std::vector<PowerRow>& rows, const std::string& path) {
  detail::write_text_file(path, power_csv(rows));
}

}  // namespace pcslab
