#pragma once

// Everything at once.

#include "hipseg/fusion/fusion.hpp"
#include "hipseg/fusion/pipeline.hpp"
#include "hipseg/io/dataset.hpp"
#include "hipseg/io/png_plot.hpp"
#include "hipseg/losses/head_loss.hpp"
#include "hipseg/metrics/metrics.hpp"
#include "hipseg/metrics/report.hpp"
#include "hipseg/network/checkpoint.hpp"
#include "hipseg/network/inference.hpp"
#include "hipseg/phantoms/phantoms.hpp"
#include "hipseg/phantoms/split.hpp"
#include "hipseg/postprocess/components.hpp"
#include "hipseg/sampling/sampler.hpp"
#include "hipseg/training/trainer.hpp"
#include "hipseg/volumes/nifti.hpp"
#include "hipseg/volumes/orientation.hpp"
#include "hipseg/volumes/raw_io.hpp"
#include "hipseg/volumes/slicing.hpp"
