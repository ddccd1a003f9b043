#pragma once

#include <adaptnet/graph.hpp>
#include <adaptnet/heatmap.hpp>
#include <adaptnet/model.hpp>
#include <adaptnet/random.hpp>
#include <adaptnet/snapshot.hpp>
#include <adaptnet/surrogate.hpp>
#include <adaptnet/sweep.hpp>
