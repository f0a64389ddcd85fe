// faultmap/faultmap.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Umbrella header: low-dimensional embedding of multivariate sensor data
// (t-SNE, exact and Nystrom kernel PCA), vibration band features, cluster
// validation, and drift scoring against a normal-operation baseline.

#pragma once

#include "faultmap/core.hpp"
#include "faultmap/detect.hpp"
#include "faultmap/io.hpp"
#include "faultmap/kpca.hpp"
#include "faultmap/metrics.hpp"
#include "faultmap/numerics.hpp"
#include "faultmap/plot.hpp"
#include "faultmap/spectral.hpp"
#include "faultmap/tsne.hpp"
