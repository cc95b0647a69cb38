#pragma once

// Per-coordinate standardization shared by every model that trains on
// whitened inputs. Constant coordinates get a floored sd of 1 so they pass
// through centered instead of dividing by zero.

#include "lfi/common.hpp"

namespace lfi::nn {

struct StandardScaler {
    Vec mean;
    Vec sd;  // floored, never zero

    static StandardScaler fit(const Mat& data, double sd_floor = 1e-8);
    static StandardScaler identity(int dim);
    Mat apply(const Mat& data) const;
    Vec apply_row(const Vec& row) const;

    // Jacobian correction when a density is fitted on standardized values:
    // log p(raw) = log p_std(standardized) - sum(log sd).
    double log_jacobian() const { return -sd.array().log().sum(); }
};

}  // namespace lfi::nn
