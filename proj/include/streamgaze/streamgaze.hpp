#pragma once

#include "streamgaze/annotation.hpp"
#include "streamgaze/annotation_server.hpp"
#include "streamgaze/answer_parsing.hpp"
#include "streamgaze/digest.hpp"
#include "streamgaze/error.hpp"
#include "streamgaze/eval.hpp"
#include "streamgaze/fixation.hpp"
#include "streamgaze/fov.hpp"
#include "streamgaze/gaze_ingest.hpp"
#include "streamgaze/image.hpp"
#include "streamgaze/io.hpp"
#include "streamgaze/oracle.hpp"
#include "streamgaze/oracle_http.hpp"
#include "streamgaze/pipeline.hpp"
#include "streamgaze/prompts.hpp"
#include "streamgaze/qa.hpp"
#include "streamgaze/rng.hpp"
#include "streamgaze/scanpath.hpp"
#include "streamgaze/synthetic.hpp"
#include "streamgaze/text.hpp"
