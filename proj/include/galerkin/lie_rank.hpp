#pragma once

#include <optional>
#include <string>
#include <vector>

#include "galerkin/dynamics.hpp"
#include "galerkin/exact.hpp"
#include "galerkin/saturation.hpp"

namespace galerkin {

SpectralField drift_field(const GalerkinSystem& sys, const SpectralField& u);
// Jacobian column of the drift in direction e_i
SpectralField first_bracket(const GalerkinSystem& sys, const SpectralField& u, const ModeIndex& i);
// [X^j, V^i]; state independent
SpectralField second_bracket(const GalerkinSystem& sys, const ModeIndex& i, const ModeIndex& j);

struct BracketGeneration {
    int index = 0;
    std::vector<ModePair> pairs;    // brackets appended in this generation
    std::vector<ModePair> skipped;  // selected pairs whose modes were not yet spanned
    std::size_t rank = 0;           // constants only
    std::size_t informative_rank = 0;  // constants plus the affine fields V^i(u)
    ModeSet spanned;
    double gamma_delta_error = 0.0;  // max entrywise |gamma - delta| over this generation
};

struct LieRankOptions {
    int max_generations = -1;  // -1: length of the saturation chain
    bool square_repair = true;
    std::optional<ExactGeometry> exact;  // exact span maintenance when set
};

struct LieRankReport {
    int N = 1;
    std::string point_hash;
    std::size_t kappa = 0;
    std::size_t rank = 0;
    std::size_t informative_rank = 0;
    bool exact = false;
    bool square_mode = false;
    std::vector<BracketGeneration> generations;
    double gamma_delta_error = 0.0;
    bool pass = false;
};

// generation schedule of bracket pairs used for K^1 -> K^N
std::vector<std::vector<ModePair>> bracket_schedule(int N, bool square_mode);

LieRankReport full_rank_check(const GalerkinSystem& sys, const SpectralField& u, const LieRankOptions& opt = {});

nlohmann::json to_json(const LieRankReport& r);

}  // namespace galerkin
