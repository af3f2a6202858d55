#pragma once

#include <optional>

namespace cwhyst {

// Classification of a trajectory against the exit rectangle
// R_T = [-T,T] x [-2T,2T]: EPlus = exit through the band {T} x [T-eps,T+eps],
// EMinus = explosion or exit through the bottom edge y = -2T,
// Undecided = anything else (top edge, or off-band arrival at t = T).
enum class OutcomeTag { EPlus, EMinus, Undecided };

struct Outcome {
    OutcomeTag tag = OutcomeTag::Undecided;
    std::optional<double> exit_time;
    std::optional<double> exit_value;
    double terminal = 0.0;  // state used for the decision (value at t=T for Undecided)

    bool is_plus() const { return tag == OutcomeTag::EPlus; }
    bool is_minus() const { return tag == OutcomeTag::EMinus; }
    bool is_undecided() const { return tag == OutcomeTag::Undecided; }
};

inline const char* to_string(OutcomeTag t) {
    switch (t) {
        case OutcomeTag::EPlus: return "EPlus";
        case OutcomeTag::EMinus: return "EMinus";
        default: return "Undecided";
    }
}

}  // namespace cwhyst
