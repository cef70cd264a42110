#pragma once

#include "psnis/config.hpp"
#include "psnis/denoiser.hpp"
#include "psnis/errors.hpp"
#include "psnis/image_grid.hpp"
#include "psnis/image_io.hpp"
#include "psnis/image_pipeline.hpp"
#include "psnis/model_io.hpp"
#include "psnis/patch_model.hpp"
#include "psnis/poisson.hpp"
#include "psnis/prior_learning.hpp"
#include "psnis/rng.hpp"
#include "psnis/snis.hpp"
