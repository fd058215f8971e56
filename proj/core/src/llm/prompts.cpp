#include "aeg/llm/prompts.hpp"

#include "aeg/error.hpp"

#include <array>

namespace aeg::llm {

namespace {

constexpr std::string_view kAgentIntro =
    "You are an intelligent home service agent that is professional in understanding contextual "
    "information of room layouts and analyzing objects usages in a particular house.\n\n";

constexpr std::string_view kTidyIntro =
    "You are an intelligent home service robot tasked with house tidying.  you are professional in "
    "understanding the usage of the object in a particular house based on semantic and visual "
    "description and find a appropriate receptacle to place it for house tidying purpose.\n\n";

const std::string kP1Body = R"(Given a short semantic description as well as a image of a receptacle (the receptacle object is highlighted by a red bounding box). You need to:
1. Describe the geometry and position of this receptacle in the house
2. Describe the relationship between this receptacle and its surrounding objects, including objects it is supporting. (ignore the decorative objects)
3. Based on your previous description, analyze the unique usage of this object as a receptacle and describe some possible items that can be placed on this receptacle.
4. Assign this receptacle a new fine-grained Category as its unique characteristic in the house

Output your analysis as following format:
"""
1. "Geometry & Position": [your description about Geometry & Position]
2. "Relationship": [your description about Relationships]
3. "Unique Usage": [your analysis for Unique Usage ]
4. "Fine-Grained Category": [the Fine-grained Name you give]
"""
Make your output concise. (It would be great if your output is under 150 words))";

const std::string kP2Body = R"(You will receive a text description of a list of objects that locate in an area of a particular room, se well as an image of this area.
You need to analyze and summary the unique functionality of this area among areas in the particular room.
Output your analysis as following format:
"""
1. "Name": [assign a name of this given area in the room]
2. "Description": [Describe the layout and functionality of this area in one sentence]
"""
Make your output concise. (It would be great if your output is under 50 words))";

const std::string kP3Body = R"(Given a short semantic description of a receptacle from the scene graph of a particular room as well as some additional information about this room. You need to:
1.  analyze the description and find some objects from the additional information that have relationship with the given receptacle in functionality perspective
2. add additional semantic edge between the finded objects and the given receptacle in the scene graph.
Output your analysis as following format:
"""
1. "Given Receptacle": [name of the given receptacle in scene graph]
2. "objects that have functional relationships":
    (1) [name of the first related object you find]
    (2) [name of the second related object you find]
    (3) ...
3. "additional functional edge":
    (1) [the functional relationship between receptacle and the first related object] (no more than 10 words)
    (2) [the functional relationship between receptacle and the second related object] (no more than 10 words)
    (3) ...
"""
Name of the related object should be consistent with the name in given object list from additional information.Ignore the decorative functional relationship.
If you do not find any objects that have functional relationship, you can say "(1) No object" in related subject.
Make your output concise. (It would be great if your output is under 150 words))";

const std::string kP4Body = R"(Given a short semantic description as well as a image of a receptacle. You need to:
1. Describe the geometry and position of this receptacle in the house
2. Describe the relationship between this receptacle and its surrounding objects, including objects it is supporting. (ignore the decorative objects)
3. Analyze the unique usage of this receptacle as a receptacle based on your previous contextual description and describe some possible interaction between human and this receptacle in the house.
4. Assign this receptacle a new fine-grained Category as its unique characteristic in the house
Output your analysis as following format:
"""
1. "Geometry & Position": [your analysis about Geometry & Position]
2. "Relationship": [your analysis for Relationships]
3. "Unique Usage": [your analysis for Unique Usage ]
4. "Fine-Grained Category": [the Fine-grained Name you give]
"""
Make your output concise. (It would be great if your output is under 150 words))";

const std::string kP5Body = R"(Given the semantic description of a carriable object to place and a possible receptacles in the house, you need to rate this receptacles on whether it is suitable to place the object for housekeep purpose.
you can rate each receptacle at 0 to 100 score, where 100 means you think this receptacle might be the best position in the house to place the carriable object for house keep purpose , while 0 means that you do not recommend to place the object here for any reason. (As a reference, you can score the receptacle as 50 if you think it is only reasonable under some special conditions to place the object on this receptacle for kousekeep purpose.) Sometimes you will be given more reference to support your rating, these reference are placements that you have rated before .Make sure your scoring criteria are consistent compared to these references.
Output your analysis as following format:
"""
1. "name of the carriable": [name of the carriable object you need to place]
2. "name of the receptacle": [name of the give receptacle as the placement target]
3. "Score": [the score you give for this placement]
4. "Analysis": [your Analysis about why you give this placemnt this score for housekeep purpose]
"""
Make your output concise. (It would be great if your output is under 50 words))";

const std::string kP6Body = R"(Given the semantic description of carriable object to place and some possible receptacles in the house as placement target, you need to choose the best (the most suitable) place to place the carriable object on top of that place for house tidying purpose.Think this question in multiple perspective like feasibility, necessity and significance of the placement for house tidying purpose.
Output your analysis as following format:
"""
1. "The best receptacle": [the exact name of the best place among the given receptacles].
2. "Analysis": [your Analysis about why it is the best one to place the object (why is it better than others)]
"""
Make your output concise. (It would be great if your output is under 100 words))";

const std::string kCarriableBody = R"(Given the category of a carriable object as well as an image of it (the object is highlighted by a red bounding box). You need to:
1. Describe the geometry of this object and the functionality it serves in a house
2. Assign this object a fine-grained Category

Output your analysis as following format:
"""
1. "Geometry & Functionality": [your description about Geometry & Functionality]
2. "Fine-Grained Category": [the Fine-grained Name you give]
"""
Make your output concise. (It would be great if your output is under 80 words))";

std::vector<FieldSpec> fields(std::initializer_list<std::string> names) {
  std::vector<FieldSpec> out;
  for (const auto& n : names) out.push_back({n, false});
  return out;
}

std::array<TemplateSpec, 7> make_registry() {
  const std::vector<FieldSpec> affordance_fields =
      fields({"Geometry & Position", "Relationship", "Unique Usage", "Fine-Grained Category"});
  return {{
      {TemplateId::P1, std::string(kAgentIntro) + kP1Body, "Semantic description: {description}",
       {"description"}, {}, affordance_fields},
      {TemplateId::P2, std::string(kAgentIntro) + kP2Body,
       "Room: {room}\nObjects in this area:\n{objects}", {"room", "objects"}, {},
       fields({"Name", "Description"})},
      {TemplateId::P3, std::string(kAgentIntro) + kP3Body,
       "Semantic description: {description}\nLocal analysis of the receptacle:\n{local_analysis}\n"
       "Additional information about the room:\n{room_context}",
       {"description", "local_analysis", "room_context"}, {},
       {{"Given Receptacle", false},
        {"objects that have functional relationships", true},
        {"additional functional edge", true}}},
      {TemplateId::P4, std::string(kAgentIntro) + kP4Body,
       "Semantic description: {description}\nPrevious analysis:\n{local_analysis}\n"
       "Additional information:\n{room_context}\nFunctional relationships in the room:\n{semantic_edges}",
       {"description", "local_analysis", "room_context", "semantic_edges"}, {}, affordance_fields},
      {TemplateId::P5, std::string(kTidyIntro) + kP5Body,
       "Task: {task}\n{calibration}Carriable object to place: {carriable}\n{carriable_description}\n"
       "Receptacle: {receptacle}\n{receptacle_description}\n{references}",
       {"task", "carriable", "carriable_description", "receptacle", "receptacle_description"},
       {"calibration", "references"},
       fields({"name of the carriable", "name of the receptacle", "Score", "Analysis"})},
      {TemplateId::P6, std::string(kTidyIntro) + kP6Body,
       "Task: {task}\nCarriable object to place: {carriable}\n{carriable_description}\n"
       "Candidate receptacles:\n{candidates}",
       {"task", "carriable", "carriable_description", "candidates"}, {},
       fields({"The best receptacle", "Analysis"})},
      {TemplateId::Carriable, std::string(kAgentIntro) + kCarriableBody, "Object category: {category}",
       {"category"}, {}, fields({"Geometry & Functionality", "Fine-Grained Category"})},
  }};
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::P1: return "p1";
    case TemplateId::P2: return "p2";
    case TemplateId::P3: return "p3";
    case TemplateId::P4: return "p4";
    case TemplateId::P5: return "p5";
    case TemplateId::P6: return "p6";
    case TemplateId::Carriable: return "carriable";
  }
  return "p1";
}

TemplateId parse_template_id(std::string_view text) {
  for (TemplateId id : {TemplateId::P1, TemplateId::P2, TemplateId::P3, TemplateId::P4, TemplateId::P5,
                        TemplateId::P6, TemplateId::Carriable}) {
    if (to_string(id) == text) return id;
  }
  throw Error(ErrorCode::InvalidInput, "unknown template id '" + std::string(text) + "'");
}

const TemplateSpec& template_spec(TemplateId id) {
  static const std::array<TemplateSpec, 7> registry = make_registry();
  return registry[static_cast<std::size_t>(id)];
}

PromptRequest render_prompt(TemplateId id, const Slots& slots, std::optional<std::filesystem::path> image,
                            const RenderOptions& options) {
  const TemplateSpec& spec = template_spec(id);
  for (const std::string& name : spec.required_slots) {
    if (!slots.contains(name)) throw Error(ErrorCode::MissingSlot, name);
  }

  std::string user;
  const std::string& fmt = spec.user_format;
  for (std::size_t i = 0; i < fmt.size();) {
    if (fmt[i] == '{') {
      const std::size_t close = fmt.find('}', i);
      const std::string name = fmt.substr(i + 1, close - i - 1);
      if (auto it = slots.find(name); it != slots.end()) user += it->second;
      i = close + 1;
    } else {
      user += fmt[i++];
    }
  }
  while (!user.empty() && (user.back() == '\n' || user.back() == ' ')) user.pop_back();

  if (image && !std::filesystem::exists(*image)) {
    throw Error(ErrorCode::Precondition, "image '" + image->string() + "' does not exist");
  }

  PromptRequest request;
  request.template_id = id;
  request.system_text = spec.system_text;
  request.user_text = std::move(user);
  request.image = std::move(image);
  request.model_id = options.model_id;
  request.temperature = options.temperature;

  const std::size_t estimate = (request.system_text.size() + request.user_text.size()) / 4;
  if (estimate > options.token_budget) {
    throw Error(ErrorCode::PromptTooLong, std::string(to_string(id)) + " prompt needs ~" +
                                              std::to_string(estimate) + " tokens, budget is " +
                                              std::to_string(options.token_budget));
  }
  return request;
}

}  // namespace aeg::llm
