#pragma once

#include "idecomp/chaos.hpp"
#include "idecomp/functor.hpp"
#include "idecomp/graphical.hpp"
#include "idecomp/interaction.hpp"
#include "idecomp/linalg.hpp"
#include "idecomp/poset.hpp"
