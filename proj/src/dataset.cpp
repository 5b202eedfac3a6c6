#include "gyrocal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gyrocal/allan.hpp"
#include "gyrocal/errors.hpp"
#include "gyrocal/random.hpp"

namespace gyrocal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kWindowMagic[4] = {'G', 'Y', 'R', 'W'};
constexpr std::uint32_t kWindowFormatVersion = 1;
constexpr double kMaxJitter = 0.01;

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::uint64_t source_stream(const std::string& id) { return crc32(id); }

}  // namespace

Window::Window(std::size_t length, std::vector<double> values)
    : length_(length), values_(std::move(values)) {
  if (values_.size() != 3 * length_) {
    throw DimensionError("window of length " + std::to_string(length_) + " needs " +
                         std::to_string(3 * length_) + " values, got " +
                         std::to_string(values_.size()));
  }
}

Window window_from_record(const SignalRecord& record) {
  Window w(record.size());
  for (std::size_t t = 0; t < record.size(); ++t)
    for (int a = 0; a < 3; ++a) w(a, t) = record.samples[t][a];
  return w;
}

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Validation: return "validation";
    case Partition::Test: return "test";
  }
  return "?";
}

Partition parse_partition(std::string_view s) {
  if (s == "train") return Partition::Train;
  if (s == "validation") return Partition::Validation;
  if (s == "test") return Partition::Test;
  throw FormatError("unknown partition '" + std::string(s) + "'");
}

std::size_t LabeledDataset::window_length() const {
  return samples.empty() ? 0 : samples.front().window.length();
}

std::vector<std::size_t> LabeledDataset::indices(Partition p) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == p) out.push_back(i);
  return out;
}

std::vector<std::string> LabeledDataset::origins(Partition p) const {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == p) ids.insert(samples[i].origin);
  return {ids.begin(), ids.end()};
}

// --- signal files -----------------------------------------------------------

SignalRecord ingest_csv(std::istream& in, std::string source_id) {
  std::string line;
  std::size_t lineno = 0;
  const auto fail = [&](const std::string& msg) {
    throw FormatError("signal CSV row " + std::to_string(lineno) + ": " + msg);
  };

  bool have_header = false;
  int col_t = -1, col[3] = {-1, -1, -1};
  std::size_t n_cols = 0;
  std::vector<double> times;
  std::vector<Vec3> samples;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split_commas(view);
    if (!have_header) {
      n_cols = fields.size();
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = trim(fields[i]);
        if (name == "time_s") col_t = static_cast<int>(i);
        if (name == "gyro_x") col[0] = static_cast<int>(i);
        if (name == "gyro_y") col[1] = static_cast<int>(i);
        if (name == "gyro_z") col[2] = static_cast<int>(i);
      }
      if (col_t < 0 || col[0] < 0 || col[1] < 0 || col[2] < 0) {
        fail("header must contain time_s, gyro_x, gyro_y, gyro_z");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != n_cols) fail("expected " + std::to_string(n_cols) + " fields");
    const std::string ctx = "signal CSV row " + std::to_string(lineno);
    const double t = parse_double(fields[col_t], ctx);
    if (!times.empty() && !(t > times.back())) fail("time is not strictly increasing");
    times.push_back(t);
    samples.emplace_back(parse_double(fields[col[0]], ctx), parse_double(fields[col[1]], ctx),
                         parse_double(fields[col[2]], ctx));
  }
  if (!have_header) throw FormatError("signal CSV is empty");
  if (samples.size() < 2) throw FormatError("signal CSV needs at least two rows");

  std::vector<double> dt(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) dt[i] = times[i + 1] - times[i];
  std::vector<double> sorted = dt;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (std::size_t i = 0; i < dt.size(); ++i) {
    if (std::abs(dt[i] - median) > kMaxJitter * median) {
      throw FormatError("signal CSV row " + std::to_string(i + 2) +
                        ": time step deviates more than 1% from the median");
    }
  }

  SignalRecord rec;
  double fs_est = 1.0 / median;
  if (std::abs(fs_est - std::round(fs_est)) < 1e-6 * fs_est) fs_est = std::round(fs_est);
  rec.fs = fs_est;
  rec.samples = std::move(samples);
  rec.duration = static_cast<double>(rec.samples.size()) / rec.fs;
  rec.source_id = std::move(source_id);
  return rec;
}

void write_signal_csv(std::ostream& out, const SignalRecord& record) {
  out << "time_s,gyro_x,gyro_y,gyro_z\n";
  std::string row;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const Vec3& s = record.samples[i];
    row = format_double(static_cast<double>(i) / record.fs);
    for (int a = 0; a < 3; ++a) {
      row += ',';
      row += format_double(s[a]);
    }
    row += '\n';
    out << row;
  }
}

fs::path meta_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".meta");
  return p;
}

std::string format_vec3(const Vec3& v) {
  return format_double(v[0]) + "," + format_double(v[1]) + "," + format_double(v[2]);
}

Vec3 parse_vec3(std::string_view s, std::string_view context) {
  const auto f = split_commas(s);
  if (f.size() != 3) throw FormatError(std::string(context) + ": expected three comma-separated values");
  return {parse_double(f[0], context), parse_double(f[1], context), parse_double(f[2], context)};
}

void save_signal(const fs::path& csv_path, const SignalRecord& record, const KeyValues& extra,
                 std::string_view comment) {
  {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + csv_path.string());
    out << comment;
    write_signal_csv(out, record);
    if (!out) throw IoError("write failed for " + csv_path.string());
  }
  KeyValues kv = extra;
  kv["source_id"] = record.source_id;
  kv["fs"] = format_double(record.fs);
  kv["duration"] = format_double(record.duration);
  kv["n_samples"] = std::to_string(record.size());
  kv["seed"] = std::to_string(record.seed);
  if (record.true_bias) kv["true_bias"] = format_vec3(*record.true_bias);
  write_text_file(meta_path(csv_path), format_key_values(kv));
}

SignalRecord load_signal(const fs::path& csv_path, KeyValues* meta_out) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot open signal file " + csv_path.string());
  SignalRecord rec = ingest_csv(in, csv_path.stem().string());
  const fs::path mp = meta_path(csv_path);
  if (fs::exists(mp)) {
    const KeyValues kv = parse_key_values(read_text_file(mp));
    if (auto it = kv.find("source_id"); it != kv.end()) rec.source_id = it->second;
    if (auto it = kv.find("seed"); it != kv.end()) rec.seed = std::stoull(it->second);
    if (auto it = kv.find("true_bias"); it != kv.end()) rec.true_bias = parse_vec3(it->second, mp.string());
    if (meta_out) *meta_out = kv;
  } else if (meta_out) {
    meta_out->clear();
  }
  return rec;
}

// --- pipeline stages --------------------------------------------------------

std::vector<Window> truncate(const SignalRecord& record, int k) {
  if (k < 1) throw PartitionError("division factor K must be >= 1");
  const std::size_t n = record.size();
  const auto uk = static_cast<std::size_t>(k);
  if (n == 0 || n % uk != 0) {
    throw PartitionError("K = " + std::to_string(k) + " does not divide the " +
                         std::to_string(n) + " samples of '" + record.source_id + "'");
  }
  const std::size_t len = n / uk;
  std::vector<Window> windows;
  windows.reserve(uk);
  for (std::size_t w = 0; w < uk; ++w) {
    Window win(len);
    for (std::size_t t = 0; t < len; ++t)
      for (int a = 0; a < 3; ++a) win(a, t) = record.samples[w * len + t][a];
    windows.push_back(std::move(win));
  }
  return windows;
}

Vec3 make_label(const SignalRecord& record) {
  if (record.size() == 0) throw InsufficientDataError("cannot label an empty record");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& s : record.samples) sum += s;
  return sum / static_cast<double>(record.size());
}

std::vector<LabeledSample> augment(const LabeledSample& sample, int n_copies, double bias_sigma,
                                   double noise_sigma, std::uint64_t seed,
                                   const DisturbanceSpec& disturbance, double fs) {
  if (n_copies < 0) throw InvalidParameterError("n_copies must be >= 0");
  if (!(bias_sigma >= 0.0) || !(noise_sigma >= 0.0)) {
    throw InvalidParameterError("augmentation sigmas must be >= 0");
  }
  const bool disturb = disturbance.kind != DisturbanceSpec::Kind::None;
  if (disturb) disturbance.validate(fs);

  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(n_copies));
  const std::size_t len = sample.window.length();
  for (int c = 0; c < n_copies; ++c) {
    LabeledSample copy = sample;
    copy.augmentation_id = c;
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int a = 0; a < 3; ++a) {
      const double drawn = bias_sigma > 0.0 ? bias_sigma * unit(rng) : 0.0;
      // Record the realized label shift so label - original == delta exactly,
      // and shift the samples by that same value.
      copy.label[a] = sample.label[a] + drawn;
      const double delta = copy.label[a] - sample.label[a];
      copy.injected_bias[a] = sample.injected_bias[a] + delta;
      std::span<double> row = copy.window.axis(a);
      for (std::size_t t = 0; t < len; ++t) {
        row[t] += delta;
        if (noise_sigma > 0.0) row[t] += noise_sigma * unit(rng);
      }
      if (disturb) {
        const auto stream = derive_seed(seed, {static_cast<std::uint64_t>(c), 100u + static_cast<std::uint64_t>(a)});
        const std::vector<double> d = gen_disturbance(disturbance, len, fs, stream);
        for (std::size_t t = 0; t < len; ++t) row[t] += d[t];
      }
    }
    out.push_back(std::move(copy));
  }
  return out;
}

namespace {

std::vector<std::string> shuffled_origins(const LabeledDataset& ds, Partition from, std::uint64_t seed) {
  std::vector<std::string> ids = ds.origins(from);
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

}  // namespace

LabeledDataset split(LabeledDataset dataset, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidParameterError("split ratio must be in (0, 1)");
  std::set<std::string> all;
  for (const auto& s : dataset.samples) all.insert(s.origin);
  if (all.size() < 2) throw SplitError("splitting needs at least two distinct source records");

  std::vector<std::string> ids(all.begin(), all.end());
  Rng rng(derive_seed(seed, {0x5ba1u}));
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::clamp(std::round(ratio * n), 1.0, n - 1.0));
  const std::set<std::string> train(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

  dataset.split.resize(dataset.samples.size());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    dataset.split[i] = train.count(dataset.samples[i].origin) ? Partition::Train : Partition::Test;
  }
  return dataset;
}

LabeledDataset carve_validation(LabeledDataset dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 0.5)) {
    throw InvalidParameterError("validation fraction must be in (0, 0.5]");
  }
  if (dataset.split.size() != dataset.samples.size()) throw StateError("dataset has not been split");
  const std::vector<std::string> ids = shuffled_origins(dataset, Partition::Train, derive_seed(seed, {0x7a1du}));
  if (ids.size() < 2) throw SplitError("validation carve needs at least two training sources");
  const auto n = static_cast<double>(ids.size());
  const auto n_val = static_cast<std::size_t>(std::clamp(std::round(fraction * n), 1.0, n - 1.0));
  const std::set<std::string> val(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.split[i] == Partition::Train && val.count(dataset.samples[i].origin)) {
      dataset.split[i] = Partition::Validation;
    }
  }
  return dataset;
}

double fitted_noise_sigma(const SignalRecord& record) {
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    const NoiseFit fit = fit_noise_coefficients(allan_deviation(record, static_cast<Axis>(a)));
    if (fit.n) {
      acc += fit.n->value * std::sqrt(record.fs);
    } else {
      // No white-noise region; fall back to the sample spread.
      const std::vector<double> s = axis_signal(record, static_cast<Axis>(a));
      const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
      double ss = 0.0;
      for (double v : s) ss += (v - mean) * (v - mean);
      acc += std::sqrt(ss / static_cast<double>(s.size()));
    }
  }
  return acc / 3.0;
}

BuiltDataset build_dataset(std::span<const SignalRecord> records, const DatasetOptions& options) {
  if (records.empty()) throw InsufficientDataError("no source records");
  if (options.n_copies < 0) throw InvalidParameterError("n_copies must be >= 0");
  const double fs = records.front().fs;

  BuiltDataset built;
  LabeledDataset& ds = built.dataset;
  ds.k = options.k;
  ds.fs = fs;

  std::set<std::string> seen;
  for (const SignalRecord& rec : records) {
    if (rec.fs != fs) throw FormatError("source '" + rec.source_id + "' has a different sample rate");
    if (!seen.insert(rec.source_id).second) throw FormatError("duplicate source id '" + rec.source_id + "'");

    const std::vector<Window> windows = truncate(rec, options.k);
    ds.window_seconds = static_cast<double>(windows.front().length()) / fs;

    SourceSummary summary;
    summary.id = rec.source_id;
    summary.label = make_label(rec);
    summary.true_bias = rec.true_bias;
    summary.noise_sigma = options.noise_sigma ? *options.noise_sigma : fitted_noise_sigma(rec);

    const std::uint64_t src_seed = derive_seed(options.seed, {source_stream(rec.source_id)});
    for (int c = 0; c < options.n_copies; ++c) {
      std::vector<int> picks;
      if (options.all_windows) {
        picks.resize(windows.size());
        std::iota(picks.begin(), picks.end(), 0);
      } else {
        picks.push_back(c % options.k);
      }
      for (int w : picks) {
        LabeledSample base{windows[static_cast<std::size_t>(w)], summary.label, rec.source_id, -1, w, Vec3::Zero()};
        const auto copy_seed = derive_seed(src_seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(w)});
        auto copies = augment(base, 1, options.bias_sigma, summary.noise_sigma, copy_seed,
                              options.disturbance, fs);
        copies.front().augmentation_id = c;
        ds.samples.push_back(std::move(copies.front()));
      }
    }
    built.sources.push_back(std::move(summary));
  }

  if (built.sources.size() >= 2) {
    ds = split(std::move(ds), options.split_ratio, options.split_seed.value_or(options.seed));
    const std::vector<std::string> train = ds.origins(Partition::Train);
    for (SourceSummary& s : built.sources) {
      s.partition = std::binary_search(train.begin(), train.end(), s.id) ? Partition::Train : Partition::Test;
    }
  } else {
    ds.split.assign(ds.samples.size(), Partition::Train);
  }
  return built;
}

// --- dataset files ----------------------------------------------------------

namespace {

json disturbance_json(const DisturbanceSpec& d) {
  json j = {{"kind", std::string(to_string(d.kind))},
            {"amplitude", d.amplitude},
            {"frequency_hz", d.frequency_hz},
            {"frequency_max_hz", d.frequency_max_hz},
            {"spike_rate", d.spike_rate},
            {"spike_magnitude", d.spike_magnitude}};
  j["phase"] = d.phase ? json(*d.phase) : json(nullptr);
  return j;
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

void save_dataset(const fs::path& dir, const BuiltDataset& built, const DatasetOptions& options,
                  const std::string& config_hash) {
  const LabeledDataset& ds = built.dataset;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const std::uint64_t n = ds.samples.size();
  const std::uint64_t channels = 3;
  const std::uint64_t len = ds.window_length();
  {
    std::ofstream out(dir / "windows.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "windows.bin").string());
    out.write(kWindowMagic, 4);
    out.write(reinterpret_cast<const char*>(&kWindowFormatVersion), sizeof kWindowFormatVersion);
    for (std::uint64_t v : {n, channels, len}) out.write(reinterpret_cast<const char*>(&v), sizeof v);
    for (const auto& s : ds.samples) {
      if (s.window.length() != len) throw DimensionError("dataset windows differ in length");
      out.write(reinterpret_cast<const char*>(s.window.values().data()),
                static_cast<std::streamsize>(s.window.values().size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed for windows.bin");
  }
  {
    std::string csv = provenance_comment(config_hash, options.seed);
    csv += "index,origin,augmentation_id,window_index,split,label_x,label_y,label_z,delta_x,delta_y,delta_z\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      const LabeledSample& s = ds.samples[i];
      csv += std::to_string(i) + "," + s.origin + "," + std::to_string(s.augmentation_id) + "," +
             std::to_string(s.window_index) + "," + std::string(to_string(ds.split[i])) + "," +
             format_vec3(s.label) + "," + format_vec3(s.injected_bias) + "\n";
    }
    write_text_file(dir / "samples.csv", csv);
  }

  json sources = json::array();
  std::size_t n_train_src = 0, n_test_src = 0;
  for (const SourceSummary& s : built.sources) {
    json j = {{"id", s.id}, {"partition", std::string(to_string(s.partition))},
              {"label", vec_json(s.label)}, {"noise_sigma", s.noise_sigma}};
    j["true_bias"] = s.true_bias ? vec_json(*s.true_bias) : json(nullptr);
    sources.push_back(j);
    (s.partition == Partition::Test ? n_test_src : n_train_src)++;
  }
  json manifest = {
      {"format", "gyrocal-dataset"},
      {"version", 1},
      {"config_hash", config_hash},
      {"seed", options.seed},
      {"k", ds.k},
      {"fs", ds.fs},
      {"window_seconds", ds.window_seconds},
      {"window_length", len},
      {"augmentation",
       {{"n_copies", options.n_copies},
        {"bias_sigma", options.bias_sigma},
        {"noise_sigma", options.noise_sigma ? json(*options.noise_sigma) : json("fitted")},
        {"all_windows", options.all_windows},
        {"disturbance", disturbance_json(options.disturbance)}}},
      {"split_ratio", options.split_ratio},
      {"split_seed", options.split_seed.value_or(options.seed)},
      {"counts",
       {{"sources", built.sources.size()},
        {"train_sources", n_train_src},
        {"test_sources", n_test_src},
        {"base_samples", built.sources.size() * static_cast<std::size_t>(options.n_copies)},
        {"samples", n},
        {"train_samples", ds.indices(Partition::Train).size()},
        {"test_samples", ds.indices(Partition::Test).size()}}},
      {"sources", sources},
      {"checksums",
       {{"windows.bin", file_crc32(dir / "windows.bin")},
        {"samples.csv", file_crc32(dir / "samples.csv")}}}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

BuiltDataset load_dataset(const fs::path& dir, std::string* config_hash) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  try {
    for (const char* name : {"windows.bin", "samples.csv"}) {
      const std::string want = manifest.at("checksums").at(name).get<std::string>();
      if (file_crc32(dir / name) != want) throw FormatError(std::string(name) + " checksum mismatch in " + dir.string());
    }
    BuiltDataset built;
    LabeledDataset& ds = built.dataset;
    ds.k = manifest.at("k").get<int>();
    ds.fs = manifest.at("fs").get<double>();
    ds.window_seconds = manifest.at("window_seconds").get<double>();
    if (config_hash) *config_hash = manifest.at("config_hash").get<std::string>();
    for (const json& j : manifest.at("sources")) {
      SourceSummary s;
      s.id = j.at("id").get<std::string>();
      s.partition = parse_partition(j.at("partition").get<std::string>());
      s.label = json_vec(j.at("label"));
      s.noise_sigma = j.at("noise_sigma").get<double>();
      if (!j.at("true_bias").is_null()) s.true_bias = json_vec(j.at("true_bias"));
      built.sources.push_back(s);
    }

    std::ifstream in(dir / "windows.bin", std::ios::binary);
    if (!in) throw IoError("cannot open " + (dir / "windows.bin").string());
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0, channels = 0, len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&channels), sizeof channels);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::memcmp(magic, kWindowMagic, 4) != 0) throw FormatError("windows.bin: bad magic");
    if (version != kWindowFormatVersion) throw FormatError("windows.bin: unsupported version " + std::to_string(version));
    if (channels != 3) throw FormatError("windows.bin: expected 3 channels");

    std::istringstream csv(read_text_file(dir / "samples.csv"));
    std::string line;
    std::getline(csv, line);  // provenance
    std::getline(csv, line);  // header
    ds.samples.reserve(n);
    ds.split.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!std::getline(csv, line)) throw FormatError("samples.csv has fewer rows than windows.bin");
      const auto f = split_commas(line);
      if (f.size() != 11) throw FormatError("samples.csv row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
      LabeledSample s;
      s.origin = std::string(f[1]);
      s.augmentation_id = std::stoi(std::string(f[2]));
      s.window_index = std::stoi(std::string(f[3]));
      ds.split.push_back(parse_partition(f[4]));
      const std::string ctx = "samples.csv row " + std::to_string(i);
      s.label = {parse_double(f[5], ctx), parse_double(f[6], ctx), parse_double(f[7], ctx)};
      s.injected_bias = {parse_double(f[8], ctx), parse_double(f[9], ctx), parse_double(f[10], ctx)};
      std::vector<double> values(3 * len);
      in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
      if (!in) throw FormatError("windows.bin truncated at sample " + std::to_string(i));
      s.window = Window(len, std::move(values));
      ds.samples.push_back(std::move(s));
    }
    return built;
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace gyrocal
