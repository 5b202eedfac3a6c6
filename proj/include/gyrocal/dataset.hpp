#pragma once

// Ingestion, truncation into K windows, long-window labels, augmentation and
// source-level train/test partitioning.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gyrocal/io_util.hpp"
#include "gyrocal/noise_sim.hpp"

namespace gyrocal {

// 3 x L block of rates, row-major in (axis, time).
class Window {
 public:
  Window() = default;
  explicit Window(std::size_t length) : length_(length), values_(3 * length, 0.0) {}
  Window(std::size_t length, std::vector<double> values);

  std::size_t length() const noexcept { return length_; }
  double operator()(int axis, std::size_t t) const { return values_[axis * length_ + t]; }
  double& operator()(int axis, std::size_t t) { return values_[axis * length_ + t]; }
  std::span<const double> axis(int a) const { return {values_.data() + a * length_, length_}; }
  std::span<double> axis(int a) { return {values_.data() + a * length_, length_}; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  std::size_t length_ = 0;
  std::vector<double> values_;
};

Window window_from_record(const SignalRecord& record);

struct LabeledSample {
  Window window;
  Vec3 label = Vec3::Zero();  // [rad/s]
  std::string origin;         // source record id
  int augmentation_id = -1;   // -1 for an unaugmented sample
  int window_index = 0;       // position of the window inside its source
  Vec3 injected_bias = Vec3::Zero();  // label shift applied by augmentation
};

enum class Partition : std::uint8_t { Train, Validation, Test };
std::string_view to_string(Partition p);
Partition parse_partition(std::string_view s);

struct LabeledDataset {
  std::vector<LabeledSample> samples;
  std::vector<Partition> split;  // one tag per sample
  int k = 1;
  double fs = 0.0;
  double window_seconds = 0.0;

  std::size_t window_length() const;
  std::vector<std::size_t> indices(Partition p) const;
  std::vector<std::string> origins(Partition p) const;  // sorted, unique
};

// --- signal files -----------------------------------------------------------

// Header `time_s,gyro_x,gyro_y,gyro_z`; fs from the median time step, which
// every step must match to within 1%.
SignalRecord ingest_csv(std::istream& in, std::string source_id = {});
void write_signal_csv(std::ostream& out, const SignalRecord& record);

// CSV plus `.meta` sidecar (same basename). `extra` is merged into the sidecar;
// `comment` (usually provenance_comment()) is written above the CSV header.
void save_signal(const std::filesystem::path& csv_path, const SignalRecord& record,
                 const KeyValues& extra = {}, std::string_view comment = {});
// Reads the CSV and, when present, the sidecar (source_id, seed, true_bias).
SignalRecord load_signal(const std::filesystem::path& csv_path, KeyValues* meta_out = nullptr);
std::filesystem::path meta_path(const std::filesystem::path& csv_path);

std::string format_vec3(const Vec3& v);
Vec3 parse_vec3(std::string_view s, std::string_view context);

// --- pipeline stages --------------------------------------------------------

std::vector<Window> truncate(const SignalRecord& record, int k);
Vec3 make_label(const SignalRecord& record);

// Copies get an independent N(0, bias_sigma^2) offset per axis (also added to
// the label) and N(0, noise_sigma^2) white noise per sample. A disturbance,
// when given, is drawn fresh for each copy and leaves the label unchanged.
std::vector<LabeledSample> augment(const LabeledSample& sample, int n_copies, double bias_sigma,
                                   double noise_sigma, std::uint64_t seed,
                                   const DisturbanceSpec& disturbance = {}, double fs = 0.0);

// Source-level Train/Test tagging; n_train = round(ratio * n_sources).
LabeledDataset split(LabeledDataset dataset, double ratio, std::uint64_t seed);

// Retags a fraction of the Train sources as Validation, also per source.
LabeledDataset carve_validation(LabeledDataset dataset, double fraction, std::uint64_t seed);

struct DatasetOptions {
  int k = 60;
  int n_copies = 100;
  double bias_sigma = 0.01;             // [rad/s]
  std::optional<double> noise_sigma;    // [rad/s]; empty = per-source Allan fit
  DisturbanceSpec disturbance;          // injected into augmented copies
  bool all_windows = false;             // every window per copy instead of one
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> split_seed;  // empty = seed
};

struct SourceSummary {
  std::string id;
  Vec3 label = Vec3::Zero();
  std::optional<Vec3> true_bias;
  double noise_sigma = 0.0;
  Partition partition = Partition::Train;
};

struct BuiltDataset {
  LabeledDataset dataset;
  std::vector<SourceSummary> sources;
};

// Per-sample noise sigma implied by the fitted ARW coefficient, averaged over axes.
double fitted_noise_sigma(const SignalRecord& record);

BuiltDataset build_dataset(std::span<const SignalRecord> records, const DatasetOptions& options);

// --- dataset files ----------------------------------------------------------

// windows.bin (header + f64 arrays), samples.csv and manifest.json under `dir`.
void save_dataset(const std::filesystem::path& dir, const BuiltDataset& built,
                  const DatasetOptions& options, const std::string& config_hash);
BuiltDataset load_dataset(const std::filesystem::path& dir, std::string* config_hash = nullptr);

}  // namespace gyrocal
