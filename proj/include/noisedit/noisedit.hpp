#pragma once

#include "noisedit/error.hpp"
#include "noisedit/latent.hpp"
#include "noisedit/container.hpp"
#include "noisedit/rng.hpp"
#include "noisedit/schedule.hpp"
#include "noisedit/denoiser.hpp"
#include "noisedit/sampler.hpp"
#include "noisedit/maskops.hpp"
#include "noisedit/snis.hpp"
#include "noisedit/ngm.hpp"
#include "noisedit/eiam.hpp"
#include "noisedit/config.hpp"
#include "noisedit/pipeline.hpp"
