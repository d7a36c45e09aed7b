#include "privloc/agreement.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace privloc {

bool RatingMatrix::complete() const {
    for (const auto& row : cells)
        for (const auto& c : row)
            if (!c) return false;
    return true;
}

RatingMatrix RatingMatrix::from_rows(const std::vector<std::vector<std::string>>& rows) {
    RatingMatrix m;
    for (const auto& r : rows) {
        std::vector<std::optional<std::string>> row;
        for (const auto& label : r) row.emplace_back(label);
        m.cells.push_back(std::move(row));
    }
    return m;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

RatingMatrix RatingMatrix::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(1, "empty ratings file");
    auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "item" || header[1] != "rater" || header[2] != "label")
        throw FormatError(1, "ratings header must be item,rater,label");
    std::map<std::string, std::size_t> item_ids;
    std::map<std::string, std::size_t> rater_ids;
    std::vector<std::tuple<std::size_t, std::size_t, std::string>> triples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 3) throw FormatError(line_no, "expected item,rater,label");
        auto item = item_ids.emplace(f[0], item_ids.size()).first->second;
        auto rater = rater_ids.emplace(f[1], rater_ids.size()).first->second;
        triples.emplace_back(item, rater, f[2]);
    }
    RatingMatrix m;
    m.cells.assign(item_ids.size(),
                   std::vector<std::optional<std::string>>(rater_ids.size(), std::nullopt));
    for (auto& [i, r, label] : triples) m.cells[i][r] = label;
    return m;
}

RatingMatrix RatingMatrix::from_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open ratings " + path);
    return from_csv(is);
}

double fleiss_kappa(const RatingMatrix& m) {
    if (m.items() < 1 || m.raters() < 2) throw Error("Fleiss kappa needs >= 1 item and >= 2 raters");
    if (!m.complete()) throw IncompleteMatrix();
    const double n = static_cast<double>(m.raters());
    const double N = static_cast<double>(m.items());

    std::map<std::string, std::size_t> cat_ids;
    for (const auto& row : m.cells)
        for (const auto& c : row) cat_ids.emplace(*c, cat_ids.size());
    const std::size_t k = cat_ids.size();

    std::vector<double> p_cat(k, 0.0);
    double p_bar = 0.0;
    for (const auto& row : m.cells) {
        std::vector<double> counts(k, 0.0);
        for (const auto& c : row) counts[cat_ids[*c]] += 1.0;
        double sum_sq = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sum_sq += counts[j] * counts[j];
            p_cat[j] += counts[j];
        }
        p_bar += (sum_sq - n) / (n * (n - 1.0));
    }
    p_bar /= N;
    double p_e = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double pj = p_cat[j] / (N * n);
        p_e += pj * pj;
    }
    if (1.0 - p_e < 1e-15) return 1.0;  // all ratings in one category
    return (p_bar - p_e) / (1.0 - p_e);
}

double krippendorff_alpha(const RatingMatrix& m) {
    std::map<std::string, std::size_t> cat_ids;
    for (const auto& row : m.cells)
        for (const auto& c : row)
            if (c) cat_ids.emplace(*c, cat_ids.size());
    const std::size_t k = cat_ids.size();
    if (k == 0) throw Error("alpha: no ratings at all");

    // coincidence matrix over pairable units
    std::vector<double> coincidence(k * k, 0.0);
    double pairable = 0.0;
    for (const auto& row : m.cells) {
        std::vector<std::size_t> present;
        for (const auto& c : row)
            if (c) present.push_back(cat_ids[*c]);
        const double mu = static_cast<double>(present.size());
        if (present.size() < 2) continue;
        pairable += mu;
        for (std::size_t a = 0; a < present.size(); ++a)
            for (std::size_t b = 0; b < present.size(); ++b) {
                if (a == b) continue;
                coincidence[present[a] * k + present[b]] += 1.0 / (mu - 1.0);
            }
    }
    if (pairable < 2.0) throw Error("alpha: fewer than two pairable ratings");

    std::vector<double> n_cat(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) n_cat[c] += coincidence[c * k + d];
    const double n = pairable;

    double d_o = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d)
            if (c != d) d_o += coincidence[c * k + d];
    d_o /= n;

    double d_e = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d)
            if (c != d) d_e += n_cat[c] * n_cat[d];
    d_e /= n * (n - 1.0);

    if (d_e < 1e-15) throw NoVariation();
    return 1.0 - d_o / d_e;
}

namespace {

// yes/no (case-insensitive) or 1/0
int as_binary(const std::string& label) {
    std::string low;
    for (char c : label) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (low == "yes" || low == "1") return 1;
    if (low == "no" || low == "0") return 0;
    throw NonBinaryCategories(label);
}

}  // namespace

AgreementCases agreement_cases(const RatingMatrix& m) {
    if (m.items() == 0) throw Error("agreement cases: no items");
    AgreementCases out;
    double with_any = 0.0, with_majority = 0.0, counted = 0.0;
    for (const auto& row : m.cells) {
        int yes = 0, present = 0;
        for (const auto& c : row) {
            if (!c) continue;
            ++present;
            yes += as_binary(*c);
        }
        if (present == 0) continue;
        counted += 1.0;
        if (yes >= 1) with_any += 1.0;
        if (2 * yes > present) with_majority += 1.0;
    }
    if (counted == 0.0) throw Error("agreement cases: no rated items");
    out.best_case = with_any / counted;
    out.majority_case = with_majority / counted;
    return out;
}

}  // namespace privloc
