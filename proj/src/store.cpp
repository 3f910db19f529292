#include "rblab/store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rblab/config_io.hpp"
#include "rblab/errors.hpp"

namespace rblab {

namespace fs = std::filesystem;
using nlohmann::json;

void RepresentationSnapshot::validate() const {
    if (static_cast<std::size_t>(matrix.rows()) != stimulus_ids.size())
        throw ContractViolation("snapshot: " + std::to_string(matrix.rows()) + " rows but " +
                                std::to_string(stimulus_ids.size()) + " stimulus ids");
    for (std::size_t i = 1; i < stimulus_ids.size(); ++i)
        if (stimulus_ids[i] <= stimulus_ids[i - 1]) throw ContractViolation("snapshot: stimulus ids must increase");
}

bool RepresentationSnapshot::operator==(const RepresentationSnapshot& o) const {
    if (run_id != o.run_id || step != o.step || layer != o.layer || split != o.split ||
        stimulus_ids != o.stimulus_ids || matrix.rows() != o.matrix.rows() || matrix.cols() != o.matrix.cols())
        return false;
    return std::memcmp(matrix.data(), o.matrix.data(), sizeof(float) * static_cast<std::size_t>(matrix.size())) == 0;
}

namespace {

void put_f32le(std::string& out, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

float get_f32le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return std::bit_cast<float>(bits);
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_tensor_file(const fs::path& path, const std::string& kind, std::size_t rows, std::size_t cols,
                       std::span<const float> data, const json& meta) {
    if (data.size() != rows * cols) throw ContractViolation("write_tensor_file: payload size != rows x cols");
    json header = {{"magic", kFileMagic}, {"kind", kind},  {"dtype", "f32le"},
                   {"rows", rows},        {"cols", cols},  {"meta", meta}};
    std::string text = header.dump();
    text.push_back('\n');
    text.reserve(text.size() + 4 * data.size());
    for (float v : data) put_f32le(text, v);
    write_text_atomic(path, text);
}

TensorFile read_tensor_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string header_line;
    if (!std::getline(in, header_line)) throw CorruptFileError(path.string() + ": missing header line");
    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception& e) {
        throw CorruptFileError(path.string() + ": header is not JSON: " + e.what());
    }
    TensorFile file;
    try {
        if (header.at("magic").get<std::string>() != kFileMagic) throw CorruptFileError(path.string() + ": bad magic");
        if (header.at("dtype").get<std::string>() != "f32le")
            throw CorruptFileError(path.string() + ": unsupported dtype");
        file.kind = header.at("kind").get<std::string>();
        file.rows = header.at("rows").get<std::size_t>();
        file.cols = header.at("cols").get<std::size_t>();
        file.meta = header.value("meta", json::object());
    } catch (const json::exception& e) {
        throw CorruptFileError(path.string() + ": malformed header: " + e.what());
    }
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t expected = 4 * file.rows * file.cols;
    if (payload.size() != expected)
        throw CorruptFileError(path.string() + ": payload has " + std::to_string(payload.size()) + " bytes, header implies " +
                               std::to_string(expected));
    file.data.resize(file.rows * file.cols);
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    for (std::size_t i = 0; i < file.data.size(); ++i) file.data[i] = get_f32le(bytes + 4 * i);
    return file;
}

void write_snapshot(const RepresentationSnapshot& s, const fs::path& path) {
    s.validate();
    json meta = {{"run_id", s.run_id}, {"step", s.step}, {"layer", s.layer}, {"split", s.split},
                 {"stimulus_ids", s.stimulus_ids}};
    write_tensor_file(path, "snapshot", static_cast<std::size_t>(s.matrix.rows()), static_cast<std::size_t>(s.matrix.cols()),
                      {s.matrix.data(), static_cast<std::size_t>(s.matrix.size())}, meta);
}

RepresentationSnapshot read_snapshot(const fs::path& path) {
    auto file = read_tensor_file(path);
    if (file.kind != "snapshot") throw CorruptFileError(path.string() + ": not a snapshot file");
    RepresentationSnapshot s;
    try {
        s.run_id = file.meta.at("run_id").get<std::string>();
        s.step = file.meta.at("step").get<std::uint64_t>();
        s.layer = file.meta.at("layer").get<std::string>();
        s.split = file.meta.at("split").get<std::string>();
        s.stimulus_ids = file.meta.at("stimulus_ids").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
        throw CorruptFileError(path.string() + ": malformed snapshot metadata: " + e.what());
    }
    s.matrix = Eigen::Map<const MatrixF>(file.data.data(), static_cast<Eigen::Index>(file.rows),
                                         static_cast<Eigen::Index>(file.cols));
    try {
        s.validate();
    } catch (const ContractViolation& e) {
        throw CorruptFileError(path.string() + ": " + e.what());
    }
    return s;
}

void write_snapshot_csv(const RepresentationSnapshot& s, const fs::path& path) {
    std::ostringstream out;
    out.precision(9);
    out << "stimulus_id";
    for (Eigen::Index u = 0; u < s.matrix.cols(); ++u) out << ",u" << u;
    out << '\n';
    for (Eigen::Index i = 0; i < s.matrix.rows(); ++i) {
        out << s.stimulus_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index u = 0; u < s.matrix.cols(); ++u) out << ',' << s.matrix(i, u);
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_model(const MlpF& model, const fs::path& path) {
    std::vector<float> payload;
    payload.reserve(model.parameter_count());
    json shapes = json::array();
    for (const auto& l : model.layers()) {
        payload.insert(payload.end(), l.weight.data(), l.weight.data() + l.weight.size());
        payload.insert(payload.end(), l.bias.data(), l.bias.data() + l.bias.size());
        shapes.push_back({l.weight.rows(), l.weight.cols()});
    }
    json meta = {{"config", to_json(model.config())}, {"layers", shapes}};
    write_tensor_file(path, "model", 1, payload.size(), payload, meta);
}

MlpF read_model(const fs::path& path) {
    auto file = read_tensor_file(path);
    if (file.kind != "model") throw CorruptFileError(path.string() + ": not a model file");
    MlpConfig config;
    try {
        config = mlp_config_from_json(file.meta.at("config"));
    } catch (const std::exception& e) {
        throw CorruptFileError(path.string() + ": bad model config: " + e.what());
    }
    MlpF model(config);
    if (file.data.size() != model.parameter_count())
        throw CorruptFileError(path.string() + ": parameter count does not match the stored config");
    std::size_t offset = 0;
    for (auto& view : model.parameter_views()) {
        std::copy_n(file.data.begin() + static_cast<std::ptrdiff_t>(offset), view.size(), view.begin());
        offset += view.size();
    }
    return model;
}

void write_optimizer(const Optimizer<float>& opt, const fs::path& path) {
    std::vector<float> payload;
    json sizes = json::array();
    for (const auto& m : opt.first_moments()) {
        payload.insert(payload.end(), m.begin(), m.end());
        sizes.push_back(m.size());
    }
    for (const auto& v : opt.second_moments()) payload.insert(payload.end(), v.begin(), v.end());
    json meta = {{"spec", to_json(opt.spec())}, {"step", opt.step_count()}, {"tensor_sizes", sizes}};
    write_tensor_file(path, "optimizer", 1, payload.size(), payload, meta);
}

Optimizer<float> read_optimizer(const fs::path& path) {
    auto file = read_tensor_file(path);
    if (file.kind != "optimizer") throw CorruptFileError(path.string() + ": not an optimizer file");
    Optimizer<float> opt(optimizer_spec_from_json(file.meta.at("spec")));
    opt.set_step_count(file.meta.at("step").get<std::uint64_t>());
    const auto sizes = file.meta.at("tensor_sizes").get<std::vector<std::size_t>>();
    std::size_t total = 0;
    for (auto s : sizes) total += s;
    if (file.data.size() != 2 * total) throw CorruptFileError(path.string() + ": accumulator payload size mismatch");
    std::size_t offset = 0;
    for (auto* bank : {&opt.first_moments(), &opt.second_moments()}) {
        for (auto s : sizes) {
            bank->emplace_back(file.data.begin() + static_cast<std::ptrdiff_t>(offset),
                               file.data.begin() + static_cast<std::ptrdiff_t>(offset + s));
            offset += s;
        }
    }
    return opt;
}

namespace {

fs::path with_suffix(const fs::path& stem, const char* suffix) {
    fs::path p = stem;
    p += suffix;
    return p;
}

void write_matrix(const Matrix& m, const fs::path& path, const char* role) {
    MatrixF f = m.cast<float>();
    write_tensor_file(path, "matrix", static_cast<std::size_t>(f.rows()), static_cast<std::size_t>(f.cols()),
                      {f.data(), static_cast<std::size_t>(f.size())}, {{"role", role}});
}

Matrix read_matrix(const fs::path& path) {
    auto file = read_tensor_file(path);
    if (file.kind != "matrix") throw CorruptFileError(path.string() + ": not a matrix file");
    MatrixF f = Eigen::Map<const MatrixF>(file.data.data(), static_cast<Eigen::Index>(file.rows),
                                          static_cast<Eigen::Index>(file.cols));
    return f.cast<double>();
}

}  // namespace

void write_dataset_binary(const DatasetSplit& split, const fs::path& stem) {
    write_matrix(split.inputs, with_suffix(stem, ".inputs.rbl"), "inputs");
    write_matrix(split.labels, with_suffix(stem, ".labels.rbl"), "labels");
}

DatasetSplit read_dataset_binary(const fs::path& stem) {
    DatasetSplit split;
    split.inputs = read_matrix(with_suffix(stem, ".inputs.rbl"));
    split.labels = read_matrix(with_suffix(stem, ".labels.rbl"));
    if (split.inputs.rows() != split.labels.rows()) throw CorruptFileError(stem.string() + ": row counts differ");
    return split;
}

}  // namespace rblab
