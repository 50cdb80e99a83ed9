#pragma once

#include "scomp/alignment.hpp"
#include "scomp/attention.hpp"
#include "scomp/camera.hpp"
#include "scomp/core.hpp"
#include "scomp/denoiser.hpp"
#include "scomp/depth_codec.hpp"
#include "scomp/diffusion.hpp"
#include "scomp/geometry.hpp"
#include "scomp/io.hpp"
#include "scomp/metrics.hpp"
#include "scomp/pipeline.hpp"
#include "scomp/scene_embedder.hpp"
#include "scomp/synth.hpp"
