#pragma once

#include "sibgen/diffusion/denoiser.hpp"
#include "sibgen/diffusion/empirical.hpp"
#include "sibgen/diffusion/gaussian.hpp"
#include "sibgen/diffusion/loss.hpp"
#include "sibgen/diffusion/mixture.hpp"
#include "sibgen/diffusion/sampler.hpp"
#include "sibgen/diffusion/schedule.hpp"
