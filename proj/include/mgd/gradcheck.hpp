#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mgd/tensor.hpp"

namespace mgd {

struct GradCheckEntry {
    std::string param;
    double max_rel_err = 0.0;
    int64_t checked = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 1e-6;

    double worst() const {
        double w = 0;
        for (const auto& e : entries) w = std::max(w, e.max_rel_err);
        return w;
    }
    bool pass() const {
        for (const auto& e : entries)
            if (!(e.max_rel_err < tolerance)) return false;
        return true;
    }
};

// Central finite differences against the reverse-mode gradients. The checker
// only ever calls the fragment's forward pass, so it is independent of the
// adjoint code it validates. Double precision required.
//
// `fragment` must rebuild its graph from the stored parameters on every call
// and be deterministic across calls (fix inputs and rng before calling).
inline GradCheckReport grad_check(ParamStore<double>& params,
                                  const std::function<Tensor<double>()>& fragment, double tolerance = 1e-6,
                                  double h = 1e-5, int64_t max_elems_per_param = 0) {
    GradCheckReport report;
    report.tolerance = tolerance;

    params.zero_grad();
    Tensor<double> loss = fragment();
    if (loss.numel() != 1) throw ShapeError("grad_check: fragment must output a scalar");
    backward(loss);

    for (auto& p : params.params()) {
        GradCheckEntry entry;
        entry.param = p.name;
        auto values = p.tensor.data();
        auto grads = p.tensor.grad();
        int64_t n = p.tensor.numel();
        int64_t step = 1;
        if (max_elems_per_param > 0 && n > max_elems_per_param) step = n / max_elems_per_param;
        for (int64_t i = 0; i < n; i += step) {
            double orig = values[size_t(i)];
            values[size_t(i)] = orig + h;
            double fp = fragment().item();
            values[size_t(i)] = orig - h;
            double fm = fragment().item();
            values[size_t(i)] = orig;
            double numeric = (fp - fm) / (2 * h);
            double analytic = grads[size_t(i)];
            double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
            entry.max_rel_err = std::max(entry.max_rel_err, std::abs(numeric - analytic) / scale);
            ++entry.checked;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace mgd
