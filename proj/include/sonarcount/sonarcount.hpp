#pragma once

#include "sonarcount/adam.hpp"
#include "sonarcount/augment.hpp"
#include "sonarcount/bank.hpp"
#include "sonarcount/census_net.hpp"
#include "sonarcount/config.hpp"
#include "sonarcount/dataset.hpp"
#include "sonarcount/evaluation.hpp"
#include "sonarcount/experiment.hpp"
#include "sonarcount/png_io.hpp"
#include "sonarcount/raster.hpp"
#include "sonarcount/scene.hpp"
#include "sonarcount/seed_stream.hpp"
#include "sonarcount/synthetic.hpp"
#include "sonarcount/tensor.hpp"
#include "sonarcount/trainer.hpp"
