#pragma once

#include <string_view>

// Region-specific extraction prompts. Kept byte-identical to
// assets/prompts/{fov,outfov}_extraction.txt (checked by the test suite).
namespace streamgaze::prompts {

inline constexpr std::string_view kFovExtraction = R"PROMPT(Context: {action_caption}

Known objects: {object_pool}
IMPORTANT: Reuse these exact names if you see the same objects. 
Only use new names for clearly different objects.

Analyze this video clip and return a JSON with this exact structure:

{
  "scene_caption": "Brief 2-3 sentence description of the overall scene 
  and what's happening",
  "gaze_object": {
    "object_identity": "name of object at coordinate (x, y)",
    "detailed_caption": "Natural 3-5 sentence description of this object's appearance 
    and characteristics"
  },
  "other_objects": [
    {
      "object_identity": "object_name (e.g., 'cup', 'person wearing blue shirt')",
      "detailed_caption": "Two sentences describing the object's appearance, 
      attributes, and spatial position relative to other objects"
    }
  ]
}

Person rules: Only include if full/upper body visible (not just hands/arms). 
CRITICAL: object_identity must be "person wearing [clothing description]" 
NOT just "person".

Return only valid JSON. Be concise and direct.
)PROMPT";

inline constexpr std::string_view kOutFovExtraction = R"PROMPT(
Context: {action_caption}

Known objects: {object_pool}
IMPORTANT: Reuse these exact names if you see the same objects. 
Only use new names for clearly different objects.

Analyze this video clip (with the center region masked) and return a JSON 
with this structure:

{
  "other_objects": [
    {
      "object_identity": "object_name (e.g., 'bottle', 'person wearing green jacket')",
      "detailed_caption": "Two sentences describing the object's appearance, 
      attributes, and spatial position"
    }
  ]
}

Focus only on objects OUTSIDE the black masked region.

Person rules: Only include if full/upper body visible (not just hands/arms). 
CRITICAL: object_identity must be "person wearing [clothing description]" 
NOT just "person".

Return only valid JSON.

)PROMPT";

/// Instruction prepended in visual-gaze evaluation mode.
inline constexpr std::string_view kVisualGazePreamble =
    "The user's gaze center is indicated by a green dot. "
    "The red circle represents the area where the user's gaze is focused.";

}  // namespace streamgaze::prompts
