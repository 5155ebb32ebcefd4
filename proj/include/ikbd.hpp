#pragma once

#include "ikbd/core/dataset_io.hpp"
#include "ikbd/core/dictionary.hpp"
#include "ikbd/core/phrase.hpp"
#include "ikbd/core/split.hpp"
#include "ikbd/core/types.hpp"
#include "ikbd/compute/grad_check.hpp"
#include "ikbd/compute/gru.hpp"
#include "ikbd/compute/ops.hpp"
#include "ikbd/compute/tensor.hpp"
#include "ikbd/dnd/checkpoint.hpp"
#include "ikbd/dnd/config.hpp"
#include "ikbd/dnd/decoder.hpp"
#include "ikbd/dnd/gaussian.hpp"
#include "ikbd/dnd/model.hpp"
#include "ikbd/eval/evaluate.hpp"
#include "ikbd/eval/metrics.hpp"
#include "ikbd/sim/benchmark.hpp"
#include "ikbd/sim/layout.hpp"
#include "ikbd/sim/simulator.hpp"
#include "ikbd/train/ablation.hpp"
#include "ikbd/train/adam.hpp"
#include "ikbd/train/trainer.hpp"
