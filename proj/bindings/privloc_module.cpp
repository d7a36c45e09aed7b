#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "privloc/agreement.hpp"
#include "privloc/dataset.hpp"
#include "privloc/gradcheck_suite.hpp"
#include "privloc/localizer.hpp"
#include "privloc/paths.hpp"
#include "privloc/prcs.hpp"

namespace py = pybind11;
using namespace privloc;

namespace {

// (start, [non-terminals], end, start_line, end_line)
using PathTuple = std::tuple<std::string, std::vector<std::string>, std::string, int, int>;

std::vector<PathTuple> mine_paths(const std::string& source, int max_nonterminals) {
    MethodAst m = parse_java_method(source);
    std::vector<PathTuple> out;
    for (const auto& p : extract_ast_paths(m, max_nonterminals))
        out.emplace_back(p.start_terminal, p.nonterminals, p.end_terminal, p.start_span.start_line,
                         p.end_span.start_line);
    return out;
}

std::vector<std::string> leaf_tokens(const std::string& source) {
    MethodAst m = parse_java_method(source);
    std::vector<std::string> out;
    for (const auto* t : collect_terminals(m.root)) out.push_back(t->text);
    return out;
}

std::vector<int> tokenize_layout(const std::string& start, const std::vector<std::string>& nonterminals,
                                 const std::string& end, const std::map<std::string, long>& counts,
                                 bool tokenize_nonterminals) {
    Vocab vocab = Vocab::build(counts, 1);
    AstPath p;
    p.start_terminal = start;
    p.nonterminals = nonterminals;
    p.end_terminal = end;
    TokenizedPath t = tokenize_path(p, vocab, tokenize_nonterminals);
    return std::vector<int>(t.slots.begin(), t.slots.end());
}

RatingMatrix matrix_from_rows(const std::vector<std::vector<std::optional<std::string>>>& rows) {
    RatingMatrix m;
    m.cells = rows;
    return m;
}

std::tuple<std::optional<int>, std::optional<std::string>> map_terminals_to_line(
    const std::string& method_source, const std::string& start_terminal,
    const std::string& end_terminal) {
    MethodAst hop = parse_java_method(method_source);
    AstPath p;
    p.start_terminal = start_terminal;
    p.nonterminals = {"Name"};
    p.end_terminal = end_terminal;
    MapOutcome mo = map_path_to_line(p, hop);
    std::optional<int> line;
    std::optional<std::string> skip;
    if (mo.mapped) line = mo.mapped->line;
    if (mo.skip) skip = to_string(*mo.skip);
    return {line, skip};
}

}  // namespace

PYBIND11_MODULE(_privloc, m) {
    m.doc() = "AST path mining, attention-based privacy behavior classification and localization";
    m.attr("__version__") = "0.1.0";

    m.def("mine_paths", &mine_paths, py::arg("source"), py::arg("max_nonterminals") = 8,
          "AST paths of one Java method as (start, nonterminals, end, start_line, end_line) tuples");
    m.def("leaf_tokens", &leaf_tokens, py::arg("source"),
          "identifier/literal leaves of one Java method, in source order");
    m.def("tokenize_layout", &tokenize_layout, py::arg("start"), py::arg("nonterminals"),
          py::arg("end"), py::arg("vocab_counts"), py::arg("tokenize_nonterminals") = true,
          "11-slot token id layout of one path under a throwaway vocabulary");
    m.def(
        "split_sizes",
        [](std::size_t n, std::uint64_t seed) {
            SplitIndices s = split_indices(n, seed);
            return std::make_tuple(s.train.size(), s.val.size(), s.test.size());
        },
        py::arg("n"), py::arg("seed") = 0, "80:10:10 split sizes");
    m.def(
        "fleiss_kappa",
        [](const std::vector<std::vector<std::optional<std::string>>>& rows) {
            return fleiss_kappa(matrix_from_rows(rows));
        },
        py::arg("rows"));
    m.def(
        "krippendorff_alpha",
        [](const std::vector<std::vector<std::optional<std::string>>>& rows) {
            return krippendorff_alpha(matrix_from_rows(rows));
        },
        py::arg("rows"));
    m.def(
        "agreement_cases",
        [](const std::vector<std::vector<std::optional<std::string>>>& rows) {
            auto c = agreement_cases(matrix_from_rows(rows));
            return std::make_tuple(c.best_case, c.majority_case);
        },
        py::arg("rows"), "(best_case, majority_case) fractions of yes-bearing items");
    m.def("top_k_paths", &top_k_paths, py::arg("weights"), py::arg("k") = 20);
    m.def("map_terminals_to_line", &map_terminals_to_line, py::arg("method_source"),
          py::arg("start_terminal"), py::arg("end_terminal"),
          "(line, skip_reason): exactly one of the two is set");
    m.def(
        "gradcheck_ops",
        [](int seeds) {
            double worst = 0.0;
            for (const auto& r : op_gradient_checks(seeds)) worst = std::max(worst, r.max_rel_error);
            return worst;
        },
        py::arg("seeds") = 2, "max relative gradient error over all ops");
}
