/*
 * Copyright 2026 the dumbench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 */

#pragma once

#include <Eigen/Dense>

namespace dumbench {

/// Orthonormal type-II DCT basis for size n (row k = frequency k). The
/// orthonormal scaling makes Parseval hold exactly, so frequency-domain
/// perturbation energy is comparable to pixel-domain energy.
const Eigen::MatrixXd& dct_matrix(int n);

/// Unitary DFT basis for size n.
const Eigen::MatrixXcd& dft_matrix(int n);

/// 2-D orthonormal DCT-II of a real matrix. Non-power-of-two sizes are fine;
/// zero-size input is rejected.
Eigen::MatrixXd dct2d(const Eigen::MatrixXd& x);

/// Inverse (type-III) transform; idct2d(dct2d(x)) == x up to roundoff.
Eigen::MatrixXd idct2d(const Eigen::MatrixXd& x);

/// Phase angles of the 2-D DFT, in (-pi, pi].
Eigen::MatrixXd fft_phase(const Eigen::MatrixXd& x);

}  // namespace dumbench
