#pragma once

#include "emhnet/date.hpp"
#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "emhnet/ingest.hpp"
#include "emhnet/neural/checkpoint.hpp"
#include "emhnet/neural/loss.hpp"
#include "emhnet/neural/mlp.hpp"
#include "emhnet/neural/recurrent.hpp"
#include "emhnet/optim/adam.hpp"
#include "emhnet/optim/schedule.hpp"
#include "emhnet/optim/train.hpp"
#include "emhnet/parallel.hpp"
#include "emhnet/pipeline/commands.hpp"
#include "emhnet/pipeline/experiment.hpp"
#include "emhnet/random.hpp"
#include "emhnet/relevance/bootstrap.hpp"
#include "emhnet/relevance/grid.hpp"
#include "emhnet/relevance/test_network.hpp"
#include "emhnet/series.hpp"
#include "emhnet/synth.hpp"
