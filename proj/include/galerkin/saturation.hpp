#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "galerkin/exact.hpp"
#include "galerkin/spectral.hpp"

namespace galerkin {

using ModePair = std::pair<ModeIndex, ModeIndex>;
std::string pair_str(const ModePair& p);

// Entries are exact multiples of the common factor pi^2/(4ab).
struct DeltaVector {
    ModeIndex m, n;
    std::map<ModeIndex, Rational> entries;

    SpectralField to_field(const RectGeometry& g) const;
    Rational entry(const ModeIndex& k) const;
};

DeltaVector delta_vector(const ModeIndex& m, const ModeIndex& n, const ExactGeometry& g);

// square_mode at j >= 2 applies the square substitution below
std::vector<ModePair> selection_S(int j, bool square_mode = false);
struct SquareSubstitution {
    std::vector<ModePair> pairs;        // the selection used at a = b
    std::vector<ModePair> replaced;     // selected pairs whose projection vanishes at a = b
    std::vector<ModePair> substitutes;  // pairs added in their place
};
SquareSubstitution square_substitution_for(int j);
std::vector<ModePair> square_repair_pairs();
ModeSet square_repair_targets();

struct DeterminantWitness {
    std::string label;
    std::vector<ModePair> rows;
    ModeSet cols;
    Rational det;  // in units of (pi^2/(4ab))^size
    std::string det_pi_units;  // det divided by pi^(2 size) when ab is rational, else empty
};

struct PairCheck {
    ModePair pair;
    int wedge = 0;
    int vee = 0;
    bool reaches_new_modes = false;
};

struct SaturationStepCertificate {
    int level = 1;
    bool square_mode = false;
    std::vector<ModePair> pairs;
    ModeSet columns;
    RationalMatrix matrix;
    std::size_t rank = 0;
    std::size_t required = 0;
    std::vector<ModePair> replaced_pairs, substitute_pairs;  // square geometry above level one
    // repair block (square geometry at level one)
    std::vector<ModePair> repair_pairs;
    ModeSet repair_columns;
    RationalMatrix repair_matrix;
    std::size_t repair_rank = 0;
    // {e_k : k in K^j} together with every delta, in the coordinates they touch
    std::size_t combined_rank = 0;
    std::size_t combined_required = 0;
    std::vector<PairCheck> checks;
    std::vector<DeterminantWitness> witnesses;
    std::string failure;
    bool verdict = false;
};

SaturationStepCertificate verify_step(int j, const ExactGeometry& g, bool square_mode);

struct FceWitness {
    ModePair pair;
    double lambda = 1.0;
    double residual_plus = 0.0;   // |(Q(u+v)+Q(u-v))/2 - Q(u) - lambda delta|
    double residual_minus = 0.0;  // same with w = lambda e_n - e_m against -lambda delta
};

struct SaturationChain {
    ExactGeometry geom;
    ModeSet target;
    int final_level = 1;
    std::vector<SaturationStepCertificate> steps;
    std::vector<FceWitness> witnesses;
    bool pass = true;
};

struct ChainFailure : std::runtime_error {
    SaturationStepCertificate certificate;
    ChainFailure(const std::string& what, SaturationStepCertificate c)
        : std::runtime_error(what), certificate(std::move(c)) {}
};

int chain_level_for(const ModeSet& target);
// square_repair: repair block at the first step, substitution at later steps, square geometry only
SaturationChain build_chain(const ModeSet& target, const ExactGeometry& g, bool square_repair = true);

nlohmann::json to_json(const SaturationStepCertificate& c);
nlohmann::json to_json(const SaturationChain& c);
std::string summary(const SaturationStepCertificate& c);

}  // namespace galerkin
