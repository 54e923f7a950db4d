#pragma once

#include "mvsc/em_forward.hpp"
#include "mvsc/spherical_waves.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mvsc {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Every binary file is: a magic line ("MVSC-FLD v1" etc.), one line of JSON header,
// then raw little-endian complex float64 values (real, imag interleaved).

struct FieldFile {
    CubeGrid grid;
    std::string kind;  // free label: "index", "contrast", "E", "U", ...
    int components = 1;
    Eigen::ArrayXXcd values;  // grid.size() x components, row-major z-fastest node order
    json extra;
};

void write_field(const fs::path& path, const CubeGrid& grid, const ScalarField& f, const std::string& kind,
                 const json& extra = json::object());
void write_field(const fs::path& path, const CubeGrid& grid, const VectorField& f, const std::string& kind,
                 const json& extra = json::object());
FieldFile read_field(const fs::path& path);

void write_data(const fs::path& path, const NearFieldData& d);
void write_data(const fs::path& path, const FarFieldData& d);
// "near" or "far", from the header
std::string data_kind(const fs::path& path);
NearFieldData read_near_data(const fs::path& path);
FarFieldData read_far_data(const fs::path& path);

void write_coeffs(const fs::path& path, const FarCoeffs& a);
FarCoeffs read_coeffs(const fs::path& path);

std::string sha256_file(const fs::path& path);
std::string sha256_string(const std::string& s);

// Writes text atomically enough for batch use (truncate + write).
void write_text(const fs::path& path, const std::string& text);

// Artifact list with content hashes, stored as manifest.json in the output directory.
class Manifest {
public:
    explicit Manifest(fs::path dir);
    void add(const fs::path& file, const std::string& role);
    void set(const std::string& key, const json& value) { meta_[key] = value; }
    fs::path write() const;
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    json meta_ = json::object();
    json files_ = json::array();
};

// Files whose hash differs from the manifest, or which are missing.
std::vector<std::string> verify_manifest(const fs::path& manifest);

}  // namespace mvsc
