#pragma once

#include <optional>
#include <string>
#include <vector>

#include "privloc/errors.hpp"

namespace privloc {

// Items x raters nominal labels; empty optional = missing rating (allowed for
// Krippendorff's alpha, rejected by Fleiss's kappa).
struct RatingMatrix {
    std::vector<std::vector<std::optional<std::string>>> cells;

    std::size_t items() const { return cells.size(); }
    std::size_t raters() const { return cells.empty() ? 0 : cells[0].size(); }
    bool complete() const;

    static RatingMatrix from_rows(const std::vector<std::vector<std::string>>& rows);
    // header `item,rater,label`; cells default to missing
    static RatingMatrix from_csv(std::istream& in);
    static RatingMatrix from_csv_file(const std::string& path);
};

// Chance-corrected agreement over a complete matrix. A matrix where every
// rating falls in one category returns 1.0 by convention (P_bar and P_e both
// degenerate to 1).
double fleiss_kappa(const RatingMatrix& m);

// Nominal-metric alpha via the coincidence matrix; units with fewer than two
// ratings are excluded. Throws NoVariation when expected disagreement is 0.
double krippendorff_alpha(const RatingMatrix& m);

struct AgreementCases {
    double best_case = 0.0;      // items with at least one yes
    double majority_case = 0.0;  // items where yes votes exceed half the raters present
};

AgreementCases agreement_cases(const RatingMatrix& m);

}  // namespace privloc
