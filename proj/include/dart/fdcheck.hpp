#ifndef DART_FDCHECK_HPP
#define DART_FDCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "dart/tensor.hpp"

namespace dart {

struct FdReport {
    bool pass = false;
    double max_rel_err = 0.0;
    std::string worst_location;
};

// Central finite-difference gradient check against reverse-mode gradients.
// The loss closure must rebuild the graph from the current input values on
// every call and return a scalar. Instantiate with T=double for the 64-bit
// oracle the gradient tests rely on.
template <typename T>
FdReport finite_diff_check(const std::function<TensorT<T>()>& loss_fn,
                           std::vector<TensorT<T>> inputs, double h = 1e-3,
                           double tol = 1e-3) {
    TensorT<T> loss = loss_fn();
    for (auto& in : inputs) in.zero_grad();
    loss.backward();
    std::vector<std::vector<T>> analytic;
    analytic.reserve(inputs.size());
    for (auto& in : inputs) analytic.push_back(in.grad());

    FdReport rep;
    rep.pass = true;
    for (size_t t = 0; t < inputs.size(); ++t) {
        auto& vals = inputs[t].values();
        for (size_t j = 0; j < vals.size(); ++j) {
            const T orig = vals[j];
            vals[j] = orig + T(h);
            const double fp = double(loss_fn().item());
            vals[j] = orig - T(h);
            const double fm = double(loss_fn().item());
            vals[j] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = double(analytic[t][j]);
            const double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
            const double rel = std::abs(an - fd) / denom;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_location = "input " + std::to_string(t) + " element " +
                                     std::to_string(j);
            }
        }
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

}  // namespace dart

#endif
