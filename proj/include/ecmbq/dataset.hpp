#pragma once

#include "ecmbq/ecm_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace ecmbq {

struct NoiseSpec {
    double log_sigma2 = 0.0;  // ln of the homoskedastic per-channel noise variance
};

// Generator record; every field is null for measured data.
struct DatasetMeta {
    std::optional<int> true_model;
    std::optional<Vector> theta;  // EcmParams::to_vector() layout
    std::optional<double> log_sigma2;
    std::optional<std::uint64_t> seed;

    std::optional<EcmParams> true_params() const;
};

struct Dataset {
    Vector freqs_hz;
    Vector y_re;
    Vector y_im;
    FrequencyStandardization grid;
    DatasetMeta meta;

    Eigen::Index m() const { return freqs_hz.size(); }
};

// Throws InvalidGrid for fewer than two points or non-positive / non-increasing frequencies.
FrequencyStandardization standardize(const Vector& freqs_hz);

// m frequencies equispaced in ln(omega), spanning `span_decades` around `center_omega` rad/s.
Vector log_spaced_freqs(Eigen::Index m, double span_decades, double center_omega = 1.0);

Dataset generate(const EcmParams& truth, Eigen::Index m, double span_decades, const NoiseSpec& noise,
                 std::uint64_t seed, double center_omega = 1.0);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
void export_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace ecmbq
