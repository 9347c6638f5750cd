#pragma once

#include "crlm/cohort.hpp"
#include "crlm/dca.hpp"
#include "crlm/eval/audit.hpp"
#include "crlm/eval/bootstrap.hpp"
#include "crlm/eval/cv.hpp"
#include "crlm/eval/roc.hpp"
#include "crlm/models/model.hpp"
#include "crlm/preprocess.hpp"
#include "crlm/radiomics/extract.hpp"
#include "crlm/radiomics/phantom.hpp"
#include "crlm/stats.hpp"
#include "crlm/survival/concordance.hpp"
#include "crlm/survival/cox.hpp"
#include "crlm/survival/kaplan_meier.hpp"
#include "crlm/survival/plot.hpp"
#include "crlm/synthetic.hpp"
#include "crlm/workflow.hpp"
