#include <CLI11.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include "pcslab/ccdm.hpp"
#include "pcslab/experiment.hpp"
#include "pcslab/temporal.hpp"

using namespace pcslab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config;
  std::string output;
  std::string input;
  std::string seeds;
  bool linear = false;
  std::size_t jobs = 1;
};

ExperimentConfig load(const CommonOptions& o) {
  auto cfg = load_config(o.config);
  if (o.linear) cfg.link.linear_mode = true;
  if (!o.seeds.empty()) cfg.seeds = detail::parse_list<std::uint64_t>("--seeds", o.seeds);
  if (!o.output.empty()) cfg.output = o.output;
  cfg.validate();
  return cfg;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  detail::write_text_file(path, text);
}

std::string read_all(std::istream& is) {
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

BitVector hex_to_bits(const std::string& text, std::size_t k) {
  BitVector bits;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw ContractError(std::string("not a hex digit: '") + c + "'");
    for (int b = 3; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
  }
  if (bits.size() != (k + 3) / 4 * 4)
    throw ContractError("expected " + std::to_string((k + 3) / 4) + " hex digits for k = " + std::to_string(k));
  for (std::size_t i = k; i < bits.size(); ++i)
    if (bits[i]) throw ContractError("padding bits beyond k must be zero");
  bits.resize(k);
  return bits;
}

std::string bits_to_hex(BitVector bits) {
  while (bits.size() % 4) bits.push_back(0);
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bits.size(); i += 4)
    out += digits[(bits[i] << 3) | (bits[i + 1] << 2) | (bits[i + 2] << 1) | bits[i + 3]];
  return out;
}

LevelIndex level_of(const AmplitudeAlphabet& alphabet, double value) {
  for (std::size_t i = 0; i < alphabet.size(); ++i)
    if (std::abs(alphabet[i] - value) < 1e-9) return static_cast<LevelIndex>(i);
  throw ContractError("amplitude " + detail::format_double(value) + " is not in the alphabet");
}

int run_dm(const CommonOptions& o, const std::string& action, std::size_t n) {
  const auto cfg = load(o);
  const QamConstellation qam(cfg.qam_order);
  const auto target = cfg.target();
  if (n == 0) n = cfg.n_list.front();
  const auto codec = build_ccdm(quantize_composition(target, n));
  const auto& alphabet = codec.alphabet();

  std::ostringstream out;
  if (action == "info") {
    out << "n," << codec.n() << "\nk," << codec.k() << "\ncomposition,";
    for (std::size_t i = 0; i < codec.composition().size(); ++i)
      out << (i ? ";" : "") << codec.composition()[i];
    out << "\nrate_bits_per_amp," << detail::format_double(codec.rate())
        << "\nrate_loss_bits_per_amp," << detail::format_double(rate_loss(codec, target))
        << "\nrealized_rate_loss_bits_per_amp," << detail::format_double(realized_rate_loss(codec))
        << "\ntarget_entropy_bits," << detail::format_double(entropy(target)) << "\n";
  } else if (action == "match") {
    const auto amps = codec.match(hex_to_bits(read_all(std::cin), codec.k()));
    for (std::size_t i = 0; i < amps.size(); ++i) out << (i ? "," : "") << alphabet[amps[i]];
    out << "\n";
  } else if (action == "dematch") {
    std::string text = read_all(std::cin);
    for (auto& c : text)
      if (c == ',') c = ' ';
    std::istringstream is(text);
    AmplitudeSequence seq;
    double v;
    while (is >> v) seq.push_back(level_of(alphabet, v));
    if (!is.eof()) throw ContractError("dematch input must be numeric amplitudes");
    out << bits_to_hex(codec.dematch(seq)) << "\n";
  } else {
    throw ConfigError("dm action must be info, match or dematch");
  }
  write_or_print(o.output, out.str());
  return 0;
}

int run_sweep_n_cmd(const CommonOptions& o) {
  const auto cfg = load(o);
  const auto result = run_sweep_n(cfg, o.jobs);
  write_or_print(cfg.output, sweep_csv(result));
  return 0;
}

int run_sweep_power_cmd(const CommonOptions& o) {
  const auto cfg = load(o);
  if (cfg.power_list_dbm.empty()) throw ConfigError("sweep-power needs power_list_dbm in the config");
  const auto rows = run_sweep_power(cfg, cfg.power_list_dbm, o.jobs);
  write_or_print(cfg.output, power_csv(rows));
  std::cerr << "optimum launch power: " << detail::format_double(optimum_power_dbm(rows)) << " dBm\n";
  return 0;
}

int run_analyze(const CommonOptions& o, std::size_t window) {
  const auto cfg = load(o);
  if (o.input.empty()) throw ConfigError("analyze needs --input FRAME.csv");
  std::ifstream is(o.input);
  if (!is) throw std::runtime_error("cannot open " + o.input);
  const auto rows = read_frame_csv(is);
  const QamConstellation qam(cfg.qam_order);
  const auto target = cfg.target();
  AmplitudeSequence seq;
  long long last_block = -1;
  for (const auto& r : rows) {
    seq.push_back(level_of(qam.amplitude_alphabet(), r.amplitude));
    last_block = std::max(last_block, r.block_id);
  }
  if (seq.empty()) throw ContractError("frame CSV has no rows");
  if (window == 0) window = cfg.n_list.front();

  std::ostringstream out;
  out << "metric,value\n";
  out << "length," << seq.size() << "\n";
  out << "blocks," << last_block + 1 << "\n";
  out << "adjacent_pair_rate," << detail::format_double(adjacent_pair_rate(seq)) << "\n";
  const auto runs = run_length_stats(seq, target.size());
  for (std::size_t level = 0; level < runs.size(); ++level) {
    std::size_t count = 0, total = 0, longest = 0;
    for (const auto& [len, c] : runs[level]) {
      count += c;
      total += len * c;
      longest = std::max(longest, len);
    }
    const double mean = count ? static_cast<double>(total) / static_cast<double>(count) : 0.0;
    out << "mean_run_length_level_" << level << "," << detail::format_double(mean) << "\n";
    out << "max_run_length_level_" << level << "," << longest << "\n";
  }
  const auto dev = windowed_composition_deviation(seq, target.probs(), std::min(window, seq.size()), 1);
  out << "window," << std::min(window, seq.size()) << "\n";
  out << "window_deviation_max," << detail::format_double(dev.max) << "\n";
  out << "window_deviation_mean," << detail::format_double(dev.mean) << "\n";
  write_or_print(o.output, out.str());
  return 0;
}

int run_simulate(const CommonOptions& o) {
  const auto cfg = load(o);
  if (cfg.output.empty()) throw ConfigError("simulate needs --output PREFIX (or output in the config)");
  const RunPoint point{cfg.n_list.front(), cfg.seeds.front(), cfg.link.launch_power_dbm};
  const auto run = simulate_run(cfg, point);
  const QamConstellation qam(cfg.qam_order);
  const auto ch = cfg.channel();

  std::ofstream frame(cfg.output + ".frame.csv");
  if (!frame) throw std::runtime_error("cannot open " + cfg.output + ".frame.csv for writing");
  write_frame_csv(frame, run.frames[ch], qam);
  write_waveform_dump(cfg.output + ".rx.sfl", run.received);

  std::ostringstream rx;
  rx << "index,rx_re,rx_im,tx_re,tx_im\n";
  for (std::size_t i = 0; i < run.rx_symbols.size(); ++i)
    rx << i << ',' << detail::format_double(run.rx_symbols[i].real()) << ','
       << detail::format_double(run.rx_symbols[i].imag()) << ',' << detail::format_double(run.launched[ch][i].real())
       << ',' << detail::format_double(run.launched[ch][i].imag()) << '\n';
  detail::write_text_file(cfg.output + ".symbols.csv", rx.str());

  std::cout << "n," << point.n << "\nseed," << point.seed << "\nlaunch_power_dbm,"
            << detail::format_double(point.launch_power_dbm) << "\nsnr_eff_db," << detail::format_double(run.snr.snr_db)
            << "\nreliable," << (run.snr.reliable ? "true" : "false") << "\nmoment_ratio,"
            << detail::format_double(moment_ratio(run.launched[ch])) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic shaping and fiber nonlinearity lab"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Experiment config file")->required();
    sub->add_option("--output", opts.output, "Output path (stdout when omitted)");
    sub->add_flag("--linear", opts.linear, "Force linear propagation (gamma = 0)");
    sub->add_option("--seeds", opts.seeds, "Comma-separated seed list overriding the config");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  std::string dm_action;
  std::size_t dm_n = 0;
  auto* dm = app.add_subcommand("dm", "Distribution matcher: info, match or dematch (hex bits on stdin)");
  add_common(dm);
  dm->add_option("action", dm_action, "info | match | dematch")->required();
  dm->add_option("--n", dm_n, "Block length (first n_list entry by default)");

  auto* sweep_n = app.add_subcommand("sweep-n", "Effective SNR, GMI and AIR_n versus block length");
  add_common(sweep_n);
  auto* sweep_power = app.add_subcommand("sweep-power", "Effective SNR versus launch power");
  add_common(sweep_power);

  std::size_t window = 0;
  auto* analyze = app.add_subcommand("analyze", "Temporal statistics of a frame CSV");
  add_common(analyze);
  analyze->add_option("--input", opts.input, "Frame CSV")->required();
  analyze->add_option("--window", window, "Window for the composition deviation (first n_list entry by default)");

  auto* simulate = app.add_subcommand("simulate", "Single run with frame, symbol and waveform dumps");
  add_common(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*dm) return run_dm(opts, dm_action, dm_n);
    if (*sweep_n) return run_sweep_n_cmd(opts);
    if (*sweep_power) return run_sweep_power_cmd(opts);
    if (*analyze) return run_analyze(opts, window);
    if (*simulate) return run_simulate(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
