#include "ecmbq/dataset.hpp"

#include "ecmbq/errors.hpp"
#include "ecmbq/io.hpp"

#include <cstdio>
#include <sstream>

namespace ecmbq {

std::optional<EcmParams> DatasetMeta::true_params() const {
    if (!true_model || !theta) return std::nullopt;
    if (theta->size() != 1 + 2 * *true_model) return std::nullopt;
    return EcmParams::from_vector(*theta, *true_model);
}

FrequencyStandardization standardize(const Vector& freqs_hz) {
    const Eigen::Index m = freqs_hz.size();
    if (m < 2) throw InvalidGrid("need at least two frequencies, got " + std::to_string(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(freqs_hz[i] > 0.0) || !std::isfinite(freqs_hz[i])) {
            throw InvalidGrid("frequency at index " + std::to_string(i) + " is not positive");
        }
        if (i > 0 && !(freqs_hz[i] > freqs_hz[i - 1])) {
            throw InvalidGrid("frequencies must be strictly increasing (index " + std::to_string(i) + ")");
        }
    }
    const Vector ln_omega = (2.0 * kPi * freqs_hz.array()).log().matrix();
    FrequencyStandardization s;
    s.mu_omega = ln_omega.mean();
    s.sigma_omega = std::sqrt((ln_omega.array() - s.mu_omega).square().mean());
    s.omega_std = ((ln_omega.array() - s.mu_omega) / s.sigma_omega).matrix();
    return s;
}

Vector log_spaced_freqs(Eigen::Index m, double span_decades, double center_omega) {
    if (m < 2) throw InvalidGrid("need at least two frequencies");
    const double half = 0.5 * span_decades * std::log(10.0);
    const double c = std::log(center_omega);
    Vector ln_omega = Vector::LinSpaced(m, c - half, c + half);
    return (ln_omega.array().exp() / (2.0 * kPi)).matrix();
}

Dataset generate(const EcmParams& truth, Eigen::Index m, double span_decades, const NoiseSpec& noise,
                 std::uint64_t seed, double center_omega) {
    Dataset d;
    d.freqs_hz = log_spaced_freqs(m, span_decades, center_omega);
    d.grid = standardize(d.freqs_hz);
    const Impedance z = impedance(truth, d.grid);
    d.y_re = z.re;
    d.y_im = z.im;
    const double sigma = std::exp(0.5 * noise.log_sigma2);
    if (sigma > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> nd(0.0, sigma);
        for (Eigen::Index j = 0; j < m; ++j) {
            d.y_re[j] += nd(rng);
            d.y_im[j] += nd(rng);
        }
    }
    d.meta.true_model = truth.n_pairs();
    d.meta.theta = truth.to_vector();
    d.meta.log_sigma2 = noise.log_sigma2;
    d.meta.seed = seed;
    return d;
}

namespace {

json meta_to_json(const DatasetMeta& meta) {
    json j;
    j["true_model"] = meta.true_model ? json(*meta.true_model) : json(nullptr);
    j["theta"] = meta.theta ? to_json(*meta.theta) : json(nullptr);
    j["log_sigma2"] = meta.log_sigma2 ? json(*meta.log_sigma2) : json(nullptr);
    j["seed"] = meta.seed ? json(*meta.seed) : json(nullptr);
    return j;
}

DatasetMeta meta_from_json(const json& j) {
    DatasetMeta meta;
    if (!j.is_object()) throw SchemaError("field 'meta' must be an object");
    if (j.contains("true_model") && !j["true_model"].is_null()) {
        if (!j["true_model"].is_number_integer()) throw SchemaError("field 'meta.true_model' must be an integer");
        meta.true_model = j["true_model"].get<int>();
    }
    if (j.contains("theta") && !j["theta"].is_null()) meta.theta = vector_from_json(j["theta"], "meta.theta");
    if (j.contains("log_sigma2") && !j["log_sigma2"].is_null()) {
        if (!j["log_sigma2"].is_number()) throw SchemaError("field 'meta.log_sigma2' must be a number");
        meta.log_sigma2 = j["log_sigma2"].get<double>();
    }
    if (j.contains("seed") && !j["seed"].is_null()) {
        if (!j["seed"].is_number_integer()) throw SchemaError("field 'meta.seed' must be an integer");
        meta.seed = j["seed"].get<std::uint64_t>();
    }
    return meta;
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    json j;
    j["freqs_hz"] = to_json(data.freqs_hz);
    j["y_re"] = to_json(data.y_re);
    j["y_im"] = to_json(data.y_im);
    j["meta"] = meta_to_json(data.meta);
    write_text_atomic(path, j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + " is not valid JSON: " + e.what());
    }
    Dataset d;
    d.freqs_hz = vector_from_json(require_field(j, "freqs_hz"), "freqs_hz");
    d.y_re = vector_from_json(require_field(j, "y_re"), "y_re");
    d.y_im = vector_from_json(require_field(j, "y_im"), "y_im");
    if (d.y_re.size() != d.freqs_hz.size() || d.y_im.size() != d.freqs_hz.size()) {
        throw SchemaError("fields 'y_re' and 'y_im' must have the same length as 'freqs_hz'");
    }
    if (j.contains("meta") && !j["meta"].is_null()) d.meta = meta_from_json(j["meta"]);
    d.grid = standardize(d.freqs_hz);
    return d;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "freq_hz,y_re,y_im\n";
    char buf[128];
    for (Eigen::Index j = 0; j < data.m(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", data.freqs_hz[j], data.y_re[j], data.y_im[j]);
        out << buf;
    }
    write_text_atomic(path, out.str());
}

}  // namespace ecmbq
