#include <cmath>
#include <limits>

#include "eko/ident.hpp"
#include "eko/parallel.hpp"

namespace eko::ident {

namespace {

std::vector<int> span_of(Range r) {
    std::vector<int> v;
    for (int x = r.lo; x <= r.hi; ++x) v.push_back(x);
    return v;
}

std::string describe(const OrderCell& c) {
    return "(na=" + std::to_string(c.na) + ", nc=" + std::to_string(c.nc) + ", nb=" +
           std::to_string(c.nb) + ", nk=" + std::to_string(c.nk) + ", n=" + std::to_string(c.n) + ")";
}

// True when `a` should be preferred over `b`.
bool better(Criterion crit, const OrderCell& ca, const CellScore& a, const OrderCell& cb,
            const CellScore& b) {
    if (a.criterion != b.criterion)
        return crit == Criterion::bic ? a.criterion < b.criterion : a.criterion > b.criterion;
    if (a.parameter_count != b.parameter_count) return a.parameter_count < b.parameter_count;
    return ca.na < cb.na;
}

}  // namespace

double common_variance(std::span<const double> innovations, std::size_t burn) {
    if (burn >= innovations.size()) throw ValidationError("common_variance: burn-in covers the whole series");
    double s = 0.0;
    for (std::size_t t = burn; t < innovations.size(); ++t) s += innovations[t] * innovations[t];
    return s / static_cast<double>(innovations.size() - burn);
}

std::vector<OrderCell> OrderGrid::cells() const {
    for (const Range* r : {&na, &nc, &nb, &nk, &n})
        if (r->lo > r->hi || r->lo < 0) throw ValidationError("order grid ranges must satisfy 0 <= lower <= upper");
    std::vector<OrderCell> out;
    for (int a : span_of(na))
        for (int c : span_of(nc))
            for (int b : span_of(nb))
                for (int k : span_of(nk))
                    for (int s : span_of(n)) out.push_back({a, c, b, k, s});
    return out;
}

double bic(std::size_t n, double sigma2, int parameter_count) {
    const double ln_sigma = sigma2 > 0.0 ? std::log(sigma2) : -std::numeric_limits<double>::infinity();
    return static_cast<double>(n) * ln_sigma + parameter_count * std::log(static_cast<double>(n));
}

OrderSelection select_order(const OrderGrid& grid,
                            const std::function<CellScore(const OrderCell&)>& score,
                            std::size_t workers) {
    const auto cells = grid.cells();
    if (cells.empty()) throw ValidationError("select_order: empty grid");
    std::vector<CellOutcome> table(cells.size());
    parallel_for(cells.size(), workers, [&](std::size_t i) {
        table[i].cell = cells[i];
        try {
            const auto s = score(cells[i]);
            if (std::isnan(s.criterion)) throw NumericalError("criterion is NaN");
            table[i].score = s;
        } catch (const std::exception& e) {
            table[i].failure = e.what();
        }
    });

    OrderSelection sel;
    bool found = false;
    for (const auto& row : table) {
        if (!row.score) continue;
        if (!found || better(grid.criterion, row.cell, *row.score, sel.chosen, sel.score)) {
            sel.chosen = row.cell;
            sel.score = *row.score;
            found = true;
        }
    }
    if (!found) {
        std::string msg = "select_order: every grid cell failed";
        for (const auto& row : table) msg += "; " + describe(row.cell) + ": " + row.failure;
        throw NumericalError(msg);
    }
    sel.table = std::move(table);
    return sel;
}

OrderSelection select_arma_order(std::span<const double> y, const OrderGrid& grid,
                                 std::size_t workers) {
    // Every cell is scored on the same samples: innovations after a burn-in
    // long enough for the largest model in the grid.
    const auto burn = static_cast<std::size_t>(grid.na.hi + grid.nc.hi);
    return select_order(
        grid,
        [&](const OrderCell& c) {
            const auto fit = fit_arma(y, static_cast<std::size_t>(c.na), static_cast<std::size_t>(c.nc));
            const int k = c.na + c.nc;
            return CellScore{bic(y.size() - burn, common_variance(fit.innovations, burn), k), k};
        },
        workers);
}

}  // namespace eko::ident
