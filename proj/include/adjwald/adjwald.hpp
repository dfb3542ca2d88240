#pragma once

// Convenience header pulling in the whole library.

#include "adjwald/beta.hpp"
#include "adjwald/datasets.hpp"
#include "adjwald/error.hpp"
#include "adjwald/glm/family.hpp"
#include "adjwald/glm/model.hpp"
#include "adjwald/glm/separation.hpp"
#include "adjwald/inference.hpp"
#include "adjwald/numkit/linalg.hpp"
#include "adjwald/numkit/numdiff.hpp"
#include "adjwald/numkit/random.hpp"
#include "adjwald/numkit/special.hpp"
#include "adjwald/oneparam.hpp"
#include "adjwald/parallel.hpp"
#include "adjwald/simbias.hpp"
#include "adjwald/simstudy.hpp"
#include "adjwald/wald.hpp"
