#pragma once

#include <string>
#include <vector>

#include "optimizer.hpp"
#include "sequences.hpp"

namespace fixtures {

using namespace relaxcrb;

// Brain white/grey matter protocols with their reported figures.
struct Reference {
    std::string name;
    SequenceProtocol protocol;
    double t_seq;
    double gamma_t1;
    double gamma_t2; // 0 when only T1 is estimated
};

inline std::vector<Reference> reference_protocols() {
    return {
        {"DESPOT", seq::Despot{{8.6}, 6.8, {13.9, 57.8}, 3.4}, 13.6, 23.29, 24.64},
        {"SEIR", seq::Seir{2994.0, 1270.0, 2942.0, 17.0}, 7206.0, 22.56, 8.78},
        {"LL", seq::LookLocker{30.0, colon_range(206, 206, 3090), 8900.0}, 8900.0, 21.32, 0.0},
        {"FIR1", seq::Fir1{colon_range(0, 378, 2268), 5647.0}, 47467.0, 19.64, 0.0},
        {"FIR2", seq::Fir2{colon_range(0, 303, 2424), 6722.0}, 60498.0, 19.57, 0.0},
        {"CIR", seq::Cir{colon_range(0, 450, 1800), 10000.0}, 54500.0, 17.07, 0.0},
        {"SR", seq::Sr{colon_range(0, 620, 6820)}, 40920.0, 7.52, 0.0},
    };
}

inline const Reference &reference(const std::string &name) {
    static const std::vector<Reference> all = reference_protocols();
    for (const Reference &r : all)
        if (r.name == name) return r;
    throw std::out_of_range(name);
}

// 5 x 5 grid over the brain range with M0 = 3000.
inline std::vector<TissueParams> grid_5x5() {
    std::vector<TissueParams> out;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) out.push_back({3000.0, 1000.0 + 250.0 * i, 60.0 + 12.5 * j});
    return out;
}

} // namespace fixtures
