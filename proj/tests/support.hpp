#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "blend/model.hpp"

namespace blend::testing {

inline std::filesystem::path data_file(const std::string& name) { return std::filesystem::path(BLEND_DATA_DIR) / name; }

inline Instance golden(int which) { return load_instance(data_file("instance" + std::to_string(which) + ".json")); }

inline Genome random_genome(const Instance& inst, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Genome g(inst.parcel_count(), inst.stockpile_count);
    for (double& v : g.flat()) v = unit(rng);
    return g;
}

}  // namespace blend::testing
