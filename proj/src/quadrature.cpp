#include "cqed/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace cqed {

QuadratureRule composite_gauss_legendre(double lo, double hi, std::size_t panels) {
    using Gauss = boost::math::quadrature::gauss<double, kPanelOrder>;
    const auto& abscissa = Gauss::abscissa();  // non-negative half, ascending
    const auto& weight = Gauss::weights();
    static_assert(kPanelOrder % 2 == 0, "even order keeps panel centres off the node set");

    QuadratureRule rule;
    rule.nodes.reserve(panels * kPanelOrder);
    rule.weights.reserve(panels * kPanelOrder);
    const double h = (hi - lo) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double centre = lo + (static_cast<double>(p) + 0.5) * h;
        const double half = 0.5 * h;
        for (std::size_t k = abscissa.size(); k-- > 0;) {
            rule.nodes.push_back(centre - half * abscissa[k]);
            rule.weights.push_back(half * weight[k]);
        }
        for (std::size_t k = 0; k < abscissa.size(); ++k) {
            rule.nodes.push_back(centre + half * abscissa[k]);
            rule.weights.push_back(half * weight[k]);
        }
    }
    return rule;
}

std::complex<double> phi1(std::complex<double> w) noexcept {
    if (std::abs(w) < 0.5) {
        // sum_{k>=0} w^k/(k+1)!
        std::complex<double> term = 1.0;
        std::complex<double> sum = 1.0;
        for (int k = 1; k < 24; ++k) {
            term *= w / static_cast<double>(k + 1);
            sum += term;
        }
        return sum;
    }
    return (std::exp(w) - 1.0) / w;
}

}  // namespace cqed
