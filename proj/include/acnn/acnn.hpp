#pragma once

#include "acnn/core/complex_volume.hpp"
#include "acnn/core/error.hpp"
#include "acnn/core/fft.hpp"
#include "acnn/core/kspace.hpp"
#include "acnn/core/random.hpp"
#include "acnn/core/tensor.hpp"

#include "acnn/sampling/cartesian_mask.hpp"
#include "acnn/sampling/kaiser_bessel.hpp"
#include "acnn/sampling/nufft.hpp"
#include "acnn/sampling/radial.hpp"

#include "acnn/autodiff/adam.hpp"
#include "acnn/autodiff/grad_check.hpp"
#include "acnn/autodiff/ops.hpp"
#include "acnn/autodiff/tape.hpp"

#include "acnn/network/attention.hpp"
#include "acnn/network/checkpoint.hpp"
#include "acnn/network/model.hpp"
#include "acnn/network/pipeline.hpp"
#include "acnn/network/train.hpp"

#include "acnn/metrics/image_metrics.hpp"
#include "acnn/metrics/report.hpp"
#include "acnn/metrics/wilcoxon.hpp"

#include "acnn/data/binary_io.hpp"
#include "acnn/data/dataset.hpp"
#include "acnn/data/neighborhood.hpp"
#include "acnn/data/phantom.hpp"
#include "acnn/data/split.hpp"
#include "acnn/data/volume_io.hpp"
