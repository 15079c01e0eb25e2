#pragma once
// Built-in prompt set. Each entry is the YAML text of one template; a
// directory of same-named .yaml files can replace any of them at runtime.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "goalmem/prompt.hpp"

namespace goalmem::prompts {

inline const char* const kDecomposition = R"YAML(
system: |-
  You will be provided only with a question about a person.

  Generate one concise commonsense goal decomposition that can guide later evidence retrieval and answer verification.

  Requirements:
  - Do NOT use any specific retrieved facts or invented details.
  - Use general human commonsense only.
  - Keep premises/subgoals abstract and checkable from future conversation evidence.
  - The decomposition should help identify what evidence would be sufficient to answer the question.
  - Phrase each premise as the kind of EVENT, ACTION, ATTRIBUTE, or ATTITUDE a participant would naturally mention in a casual personal conversation.
  - DO NOT phrase premises as META-CLAIMS about the conversation itself. FORBIDDEN openings include: "the conversation explicitly states ...", "the conversation gives ...", "the message names ...", "a fact says ...", "the speaker explicitly mentions ...".
  - Prefer concrete event/attribute language ("the person visits Stamford", "the person talks about a wedding in December") over evidentiary framing ("the conversation contains a statement about a wedding in December").
  - Preserve exact entity anchors from the question and make answer variables explicit as (x:type), (y:type), etc.

  Goal decomposition:
  Step 1 - Identify the central entities in the question: subject, object/topic/instrument/place/activity, named person, time qualifier, and requested answer type.
  Step 2 - Identify any variables that must be substituted to answer the question. Write variables as (x:type), (y:type), etc.
  Step 3 - Generate atomic subgoals. Each subgoal must be factual, verifiable, and phrased as the kind of event, action, attribute, or attitude that could naturally appear in a personal conversation memory.
  Step 4 - Preserve exact entity anchors from the question. Closely related but distinct entities are not substitutes (e.g. guitar vs violin; Korean class vs Korea trip; current role vs previous role).
  Step 5 - Use facts only as optional grounding context. Do NOT answer the question and do NOT invent concrete substitutions.

  Output format (exactly):
  Goal: <one goal for the question, using typed variables where needed>
  Rule: IF <subgoal 1> AND <subgoal 2> AND ... THEN <goal is satisfied>
  Variables:
  - (<variable:type>): <what this variable must be substituted with, or "none" if no answer variable is needed>
  Subgoals:
  - <atomic subgoal 1>
  - <atomic subgoal 2>
  Premises:
  - <same text as subgoal 1, repeated for backward compatibility with retrieval code>
  - <same text as subgoal 2, repeated for backward compatibility with retrieval code>

input_template: |-
  Question: {{QUESTION}}
  {% if BACKGROUND_SUMMARY %}
  Background (per-speaker conversation summary):
  {{BACKGROUND_SUMMARY}}
  Note on the background: this is OPTIONAL context to help you ground the
  speakers - it is NOT exhaustive and NOT a fact source. Do NOT restrict your
  rule to only what appears here, do NOT cite the summary as evidence, and do
  NOT treat absence from the summary as absence from the conversation. General
  commonsense reasoning should still be the primary driver of the rule; use the
  background only as light supporting context.
  {% endif %}
  {% if ASSUMED_KNOWN_INFO %}
  Known Info (assume true): {{ASSUMED_KNOWN_INFO|join('\n')}}
  {% endif %}

output_labels: ["Goal:", "Rule:", "Variables:", "Subgoals:", "Premises:"]

few-shot:
  - input:
      QUESTION: |-
        What career field is Caroline likely to pursue in her education?
    output: |-
      Goal: (Caroline) is likely to pursue (x:career_field) in her education.
      Rule: IF Caroline is actively exploring (x:career_field) AND Caroline has expressed direct interest in (x:career_field) AND Caroline finds work in (x:career_field) meaningful, THEN Caroline is likely to pursue (x:career_field) in her education.
      Variables:
      - (x:career_field): the education or career field Caroline is likely to pursue
      Subgoals:
      - Caroline is actively exploring (x:career_field).
      - Caroline has expressed direct interest in (x:career_field).
      - Caroline finds work in (x:career_field) meaningful.
      Premises:
      - Caroline is actively exploring (x:career_field).
      - Caroline has expressed direct interest in (x:career_field).
      - Caroline finds work in (x:career_field) meaningful.
  - input:
      QUESTION: |-
        Would Melanie be likely to attend an outdoor fitness event?
    output: |-
      Goal: (Melanie) is likely to attend an outdoor fitness event.
      Rule: IF Melanie regularly engages in outdoor physical activity AND Melanie is training for a competitive running event, THEN Melanie would likely be interested in attending an outdoor fitness event.
      Variables:
      - none: no answer variable is needed because the question asks for a yes/no judgment
      Subgoals:
      - Melanie regularly engages in outdoor physical activity.
      - Melanie is training for a competitive running event.
      Premises:
      - Melanie regularly engages in outdoor physical activity.
      - Melanie is training for a competitive running event.
  - input:
      QUESTION: |-
        Did Caroline use art as a way to explore personal identity?
    output: |-
      Goal: (Caroline) used art as a way to explore personal identity.
      Rule: IF Caroline has used art as a medium to explore identity AND Caroline values art as a meaningful practice, THEN Caroline used art as a way to explore personal identity.
      Variables:
      - none: no answer variable is needed because the question asks for a yes/no judgment
      Subgoals:
      - Caroline has used art as a medium to explore identity.
      - Caroline values art as a meaningful practice.
      Premises:
      - Caroline has used art as a medium to explore identity.
      - Caroline values art as a meaningful practice.
  - input:
      QUESTION: |-
        What career field is Caroline likely to pursue in her education?
    output: |-
      Goal: (Caroline) is likely to pursue (x:career_field) in her education.
      Rule: IF Caroline consistently expresses sustained interest in (x:career_field) AND Caroline takes concrete steps toward training or education in (x:career_field), THEN Caroline is likely to pursue (x:career_field) in her education.
      Variables:
      - (x:career_field): the education or career field Caroline is likely to pursue
      Subgoals:
      - Caroline consistently expresses sustained interest in (x:career_field).
      - Caroline takes concrete steps toward training or education in (x:career_field).
      Premises:
      - Caroline consistently expresses sustained interest in (x:career_field).
      - Caroline takes concrete steps toward training or education in (x:career_field).
  - input:
      QUESTION: |-
        Would Melanie be likely to attend an outdoor fitness event?
    output: |-
      Goal: (Melanie) is likely to attend an outdoor fitness event.
      Rule: IF Melanie regularly engages in outdoor exercise AND Melanie shows motivation for fitness-related activities, THEN Melanie is likely to attend an outdoor fitness event.
      Variables:
      - none: no answer variable is needed because the question asks for a yes/no judgment
      Subgoals:
      - Melanie regularly engages in outdoor exercise.
      - Melanie shows motivation for fitness-related activities.
      Premises:
      - Melanie regularly engages in outdoor exercise.
      - Melanie shows motivation for fitness-related activities.
)YAML";

inline const char* const kDecompositionNextHop = R"YAML(
system: |-
  You will be provided with a question about a person and previously generated inference rules.

  Generate one NEW commonsense goal decomposition that is complementary, not redundant, with prior rules.

  Requirements:
  - Do NOT use specific retrieved facts or invented concrete details.
  - Use general human commonsense only.
  - Avoid repeating any prior rule verbatim or semantically.
  - Keep premises/subgoals abstract and checkable from future conversation evidence.
  - Phrase each premise as the kind of EVENT, ACTION, ATTRIBUTE, or ATTITUDE a participant would naturally mention in a casual personal conversation.
  - DO NOT phrase premises as META-CLAIMS about the conversation itself. FORBIDDEN openings include: "the conversation explicitly states ...", "the conversation gives ...", "the message names ...", "a fact says ...", "the speaker explicitly mentions ...".
  - Prefer concrete event/attribute language over evidentiary framing.
  - Preserve exact entity anchors and make answer variables explicit as (x:type), (y:type), etc.

  Output format (exactly):
  Goal: <one goal for the question, using typed variables where needed>
  Rule: IF <subgoal 1> AND <subgoal 2> AND ... THEN <goal is satisfied>
  Variables:
  - (<variable:type>): <what this variable must be substituted with, or "none" if no answer variable is needed>
  Subgoals:
  - <atomic subgoal 1>
  - <atomic subgoal 2>
  Premises:
  - <same text as subgoal 1, repeated for backward compatibility with retrieval code>
  - <same text as subgoal 2, repeated for backward compatibility with retrieval code>
  Difference From Prior Decompositions: <one concise sentence explaining what is new>

input_template: |-
  Question: {{QUESTION}}
  {% if BACKGROUND_SUMMARY %}
  Background (per-speaker conversation summary):
  {{BACKGROUND_SUMMARY}}
  Note on the background: this is OPTIONAL context to help you ground the
  speakers - it is NOT exhaustive and NOT a fact source. Do NOT restrict your
  rule to only what appears here, do NOT cite the summary as evidence, and do
  NOT treat absence from the summary as absence from the conversation. General
  commonsense reasoning should still be the primary driver of the rule; use the
  background only as light supporting context.
  {% endif %}
  {% if ASSUMED_KNOWN_INFO %}
  Known Info (assume true): {{ASSUMED_KNOWN_INFO|join('\n')}}
  {% endif %}
  {% if AXIOMS %}
  Existing rules/decompositions that should NOT be repeated:
  {{AXIOMS|join('\n')}}
  {% endif %}
  New goal decomposition:

output_labels: ["Goal:", "Rule:", "Variables:", "Subgoals:", "Premises:", "Difference From Prior Decompositions:"]

few-shot:
  - input:
      QUESTION: |-
        What career field is Caroline likely to pursue in her education?
      AXIOMS:
        - IF Caroline consistently expresses sustained interest in (x:career_field) AND Caroline takes concrete steps toward training or education in (x:career_field), THEN Caroline is likely to pursue (x:career_field) in her education.
    output: |-
      Goal: (Caroline) is likely to pursue (x:career_field) in her education.
      Rule: IF Caroline repeatedly describes (x:career_field) as meaningful or personally rewarding, THEN evidence of that repeated valuation would be sufficient additional support for inferring Caroline may pursue (x:career_field).
      Variables:
      - (x:career_field): the education or career field Caroline is likely to pursue
      Subgoals:
      - Caroline repeatedly describes (x:career_field) as meaningful or personally rewarding.
      Premises:
      - Caroline repeatedly describes (x:career_field) as meaningful or personally rewarding.
      Difference From Prior Decompositions: The new decomposition uses repeated valuation rather than training steps.
  - input:
      QUESTION: |-
        Would Melanie be likely to attend an outdoor fitness event?
      AXIOMS:
        - IF Melanie regularly engages in outdoor exercise AND Melanie shows motivation for fitness-related activities, THEN Melanie is likely to attend an outdoor fitness event.
    output: |-
      Goal: (Melanie) is likely to attend an outdoor fitness event.
      Rule: IF Melanie voluntarily participates in social or organized fitness activities, THEN evidence of that participation would be sufficient complementary support for judging likely attendance at a future outdoor fitness event.
      Variables:
      - none: no answer variable is needed because the question asks for a yes/no judgment
      Subgoals:
      - Melanie voluntarily participates in social or organized fitness activities.
      Premises:
      - Melanie voluntarily participates in social or organized fitness activities.
      Difference From Prior Decompositions: The new decomposition uses social or organized participation rather than general outdoor exercise and motivation.
)YAML";

inline const char* const kUnification = R"YAML(
system: |-
  You are answering questions about people based on facts extracted from their personal conversations.

  memory: a self-contained sentence describing an event, action, state, or attribute related to the person. For example, "Caroline is attending therapy sessions" or "Melanie enjoys running in the park".

  This prompt implements the VERIFIABLE UNIFICATION stage of Goal-Mem.

  Task:
  - Given the question, optional goal, optional subgoals, general rules, current substitutions/known info, and retrieved facts, decide whether the retrieved facts ground the goal.
  - Compute any candidate variable substitutions theta = {x / e, ...} that are supported by retrieved facts.
  - Generate the final answer only if the goal is fully grounded by type-consistent, non-conflicting, entailed substitutions.
  - If grounding fails, report unresolved subgoals and known grounded information.

  If no explicit Subgoals section is provided, treat the premises of the General Rule as the active subgoals. If no explicit Goal is provided, infer the goal from the Question and General Rule.

  ENTITY-ANCHOR CHECK (do this BEFORE selecting facts):
    1. Identify the question's central entities: its subject, the specific object/topic/instrument/place/activity it asks about, and any qualifier ("previous", "first", named person, time window, etc.).
    2. Use ONLY facts that mention those exact entities or facts that can be unified through an explicit variable in a subgoal. Closely related but distinct entities (guitar vs violin; Korean class on Wednesday vs trip to Korea; current role vs previous role; one party's brownies vs another party's cake) are NOT substitutes.
    3. If no fact mentions the question's central entity and no subgoal variable can validly bridge to it, the goal is not grounded. Do not pick a thematically similar fact as a fallback.

  UNIFICATION PROCESS:
    1. Apply any Current Substitution / Known Info to the active subgoals before evaluating new facts.
    2. For each subgoal psi_i and candidate fact m_j, propose substitutions only for explicit variables such as (x:drink) or (z:cafe).
    3. Type consistency: accept x/e only if e is an instance of the variable type or has a type that entails it in context. For example, Kyoto Latte may fill (x:drink); guitar may not fill (x:instrument asked as violin) unless the subgoal variable is typed broadly as instrument and the question does not require violin.
    4. Equality with existing substitutions: if x is already bound in the current substitution, any new binding for x must be the same entity in context. Reject conflicting bindings.
    5. Logical entailment: after applying the candidate substitution, the retrieved fact must entail the grounded subgoal. Topical similarity is not enough.
    6. Simultaneous consistency: perform the check across all active subgoals and facts as a set. Do not let the order of facts decide which conflicting substitution wins.
    7. Conflict handling: if facts ground the same required variable with incompatible values and the conflict cannot be resolved from the facts alone, answer "I don't know".

  ANSWER RULES:
  - Your answer must be based on the provided facts and general rules/subgoals. State the used facts and rules explicitly in your reasoning.
  - Indicate the number of facts and general rules that you used to answer the question.
  - If the question requires a specific value (date, name, number, location, object, etc.) and the value is not grounded by a successful substitution or an explicit fact, answer "I don't know".
  - Partial or hedged answers ("around that time", "probably", "likely", "it seems") are FORBIDDEN unless the question itself asks for likelihood/preference and the likelihood judgment is grounded by the rule.
  - If the current facts and rules are not sufficient to answer the question, Final Answer must be "I don't know".
  - Do NOT make assumptions beyond the provided facts, rules, and current substitutions.
  - Do NOT output Missing Info or Relation Type here. Use Unresolved Subgoals and Known Info only; refinement is a separate prompt.

  OUTPUT FORMAT - you MUST use exactly this structure:
  Unification Status: <satisfied|unsatisfied|conflict>
  Substitution: <{x / entity, y / entity, ...} or {} or "none">
  Grounded Subgoals:
  - <subgoal> <= <supporting fact # or Known Info>; bindings: <bindings or none>
  Unresolved Subgoals:
  - <subgoal> -- <why it is not grounded, or "none">
  Reasoning: <cite the specific facts and rules that support your answer, or explain why the facts are insufficient; include Used N facts and M general rules>
  Final Answer: <the shortest possible phrase directly supported by the facts/substitution, or "I don't know">
  Known Info: <concise semicolon-separated statements already grounded, or "none">

input_template: |-
  Question: {{QUESTION}}
  {% if GOAL %}
  Goal: {{GOAL}}
  {% endif %}
  {% if SUBGOALS %}
  Subgoals:
  {{ SUBGOALS|join('\n') }}
  {% endif %}
  {% if CURRENT_SUBSTITUTION %}
  Current Substitution: {{CURRENT_SUBSTITUTION}}
  {% endif %}
  {% if ASSUMED_KNOWN_INFO %}
  Known Info (assume true for this depth): {{ ASSUMED_KNOWN_INFO|join('\n') }}
  {% endif %}
  {% if HINTS %}
  Hints: {{ HINTS|join('\n') }}
  {% endif %}
  {% if GENERAL_RULE %}
  General Rule: {{GENERAL_RULE}}
  {% endif %}
  {% if FACTS %}
  Facts: {{ FACTS|join('\n') }}
  {% endif %}

output_labels: ["Unification Status:", "Substitution:", "Grounded Subgoals:", "Unresolved Subgoals:", "Reasoning:", "Final Answer:", "Known Info:"]

few-shot:
  - input:
      QUESTION: |-
        What career field is Caroline likely to pursue in her education?
        Goal: (Caroline) is likely to pursue (x:career_field) in her education.
        Subgoals:
        - Caroline is actively exploring (x:career_field).
        - Caroline has expressed direct interest in (x:career_field).
        - Caroline finds work in (x:career_field) meaningful.
        General Rule: IF Caroline is actively exploring (x:career_field) AND Caroline has expressed direct interest in (x:career_field) AND Caroline finds work in (x:career_field) meaningful, THEN Caroline is likely to pursue (x:career_field) in her education.
        Facts: 1- (Caroline, exploring, counseling or mental health career options) [event point_in_time: 15 July, 2023] [spoken at: 1:51 pm on 15 July, 2023]
        2- (Caroline, finds, counseling and mental health work tough but rewarding) [event point_in_time: 6 July, 2023] [spoken at: 8:18 pm on 6 July, 2023]
        3- (Caroline, interested_in, counseling) [event point_in_time: 3 July, 2023] [spoken at: 1:36 pm on 3 July, 2023]
    output: |-
      Unification Status: satisfied
      Substitution: {x / counseling and mental health}
      Grounded Subgoals:
      - Caroline is actively exploring (x:career_field). <= Fact 1; bindings: x / counseling and mental health
      - Caroline has expressed direct interest in (x:career_field). <= Fact 3; bindings: x / counseling
      - Caroline finds work in (x:career_field) meaningful. <= Fact 2; bindings: x / counseling and mental health
      Unresolved Subgoals:
      - none
      Reasoning: Fact 1 states Caroline is exploring counseling or mental health career options, Fact 3 states she is interested in counseling, and Fact 2 states she finds counseling and mental health work tough but rewarding. These facts jointly satisfy the three subgoals under the consistent substitution x / counseling and mental health. Used 3 facts and 1 general rule.
      Final Answer: counseling and mental health
      Known Info: Caroline is exploring counseling or mental health career options; Caroline is interested in counseling; Caroline finds counseling and mental health work rewarding
  - input:
      QUESTION: |-
        What is the name of Melanie's dog?
        Goal: (Melanie's dog) has name (x:person_or_pet_name).
        Subgoals:
        - Melanie has a dog.
        - Melanie's dog has name (x:person_or_pet_name).
        General Rule: IF Melanie has a dog AND Melanie's dog has name (x:person_or_pet_name), THEN x is the answer.
        Facts: 1- (Melanie, has_pet, dog) [event point_in_time: 5 August, 2023] [spoken at: 11:20 am on 5 August, 2023]
        2- (Melanie, enjoys, walking her dog in the park) [event point_in_time: 5 August, 2023] [spoken at: 11:20 am on 5 August, 2023]
    output: |-
      Unification Status: unsatisfied
      Substitution: {}
      Grounded Subgoals:
      - Melanie has a dog. <= Fact 1; bindings: none
      Unresolved Subgoals:
      - Melanie's dog has name (x:person_or_pet_name). -- no fact states the dog's name
      Reasoning: Facts 1 and 2 confirm that Melanie has a dog and enjoys walking it, but neither fact states the dog's name. The answer variable x is not grounded. Used 1 fact and 1 general rule.
      Final Answer: I don't know
      Known Info: Melanie has a dog; Melanie enjoys walking her dog in the park
)YAML";

inline const char* const kRefinement = R"YAML(
system: |-
  You are refining unresolved subgoals for Goal-Mem's depth loop.

  You will be provided with a question, the original goal, the current rule/subgoals, the current substitution or known grounded information, retrieved facts, and the unresolved subgoals.

  This prompt implements SUBGOAL REFINEMENT VIA BACKWARD CHAINING.

  Objective:
  - Do NOT answer the user question.
  - Do NOT redo unification.
  - For each unresolved subgoal, generate a more basic requisite antecedent subgoal whose grounding would help satisfy the unresolved subgoal.
  - Produce retrieval-ready Missing Info and Relation Type outputs for the next memory retrieval hop.

  Refinement principles:
  1. Target the exact unresolved subgoal. Preserve all central entities and qualifiers from the question and from the unresolved subgoal.
  2. Do not merely paraphrase the unresolved subgoal. Generate an antecedent that would make the unresolved part checkable.
     Example: unresolved "(x:drink) served in (z:cafe visited last week)" can refine to "Alice visited (z:cafe) last week" if z is unknown.
  3. Keep unresolved variables explicit as (x:type), (y:type), etc. Reuse the same variable names when the refined subgoal is intended to ground the same variable.
  4. Respect existing substitutions. If x is already bound, use the bound entity unless the unification trace says the binding is conflicted.
  5. Do not invent constants. Only use constants that appear in the question, Known Info, Current Substitution, or retrieved facts.
  6. Avoid repeated refinement. If Previously Retrieved Missing Info or Previously Refined Subgoals are provided, the new refinement MUST take a different angle.
  7. If no useful new refinement is possible, set Refinement Status to stop and explain why.

  Relation Type selection:
  - temporal: the missing evidence is about when something happened or the sequence of events.
  - causal: the missing evidence is about why something happened, what caused it, or what resulted from it.
  - semantic: the missing evidence is about the same specific topic, activity, object, name, preference, property, or event.
  - spatial: the missing evidence is about where something happened, a place identity, or what else happened at the same location.

  OUTPUT FORMAT - you MUST use exactly this structure:
  Refinement Status: <refine|stop>
  Missing Info: <specific information needed for the next retrieval hop>
  Relation Type: <temporal|causal|semantic|spatial>
  Refined Subgoals:
  - <atomic subgoal to retrieve next, or "none">
  Retrieval Queries:
  - <natural-language query corresponding to refined subgoal 1, or "none">
  Rationale: <one concise sentence explaining why the refined subgoal is necessary>

input_template: |-
  Question: {{QUESTION}}
  {% if GOAL %}
  Goal: {{GOAL}}
  {% endif %}
  {% if GENERAL_RULE %}
  General Rule: {{GENERAL_RULE}}
  {% endif %}
  {% if SUBGOALS %}
  Current Subgoals:
  {{SUBGOALS|join('\n')}}
  {% endif %}
  {% if CURRENT_SUBSTITUTION %}
  Current Substitution: {{CURRENT_SUBSTITUTION}}
  {% endif %}
  {% if KNOWN_INFO %}
  Known Info:
  {{KNOWN_INFO|join('\n')}}
  {% endif %}
  {% if UNIFICATION_TRACE %}
  Unification Trace:
  {{UNIFICATION_TRACE}}
  {% endif %}
  {% if UNRESOLVED_SUBGOALS %}
  Unresolved Subgoals:
  {{UNRESOLVED_SUBGOALS|join('\n')}}
  {% endif %}
  {% if PREVIOUSLY_RETRIEVED_MISSING_INFO %}
  Previously Retrieved Missing Info (do NOT repeat or paraphrase):
  {{PREVIOUSLY_RETRIEVED_MISSING_INFO|join('\n')}}
  {% endif %}
  {% if PREVIOUSLY_REFINED_SUBGOALS %}
  Previously Refined Subgoals (do NOT repeat or paraphrase):
  {{PREVIOUSLY_REFINED_SUBGOALS|join('\n')}}
  {% endif %}
  {% if FACTS %}
  Retrieved Facts:
  {{FACTS|join('\n')}}
  {% endif %}
  Refinement:

output_labels: ["Refinement Status:", "Missing Info:", "Relation Type:", "Refined Subgoals:", "Retrieval Queries:", "Rationale:"]

few-shot:
  - input:
      QUESTION: |-
        Alice: I like the cafe I went to last week, what drink should I try this time?
      GOAL: |-
        Recommend (x:drink) to (Alice) from the menu of the cafe she went to last week.
      GENERAL_RULE: |-
        IF Alice likes (y:flavor) AND (x:drink) contains (y:flavor) AND (x:drink) is served in (z:cafe visited last week), THEN recommend (x:drink) to Alice.
      SUBGOALS:
        - Alice likes (y:flavor).
        - (x:drink) contains (y:flavor).
        - (x:drink) is served in (z:cafe visited last week).
      CURRENT_SUBSTITUTION: "{x / Kyoto Latte, y / Matcha Powder}"
      KNOWN_INFO:
        - Alice likes matcha.
        - Kyoto Latte contains Matcha Powder.
      UNRESOLVED_SUBGOALS:
        - (x:drink) is served in (z:cafe visited last week). -- z is not grounded; no fact identifies the cafe Alice visited last week
      FACTS:
        - "1- The Momoco cafe advertised a Kyoto Latte as its seasonal drink."
    output: |-
      Refinement Status: refine
      Missing Info: Which cafe Alice visited last week, so z can be grounded for the served-in subgoal.
      Relation Type: spatial
      Refined Subgoals:
      - Alice visited (z:cafe) last week.
      Retrieval Queries:
      - Alice visited cafe last week which cafe
      Rationale: The unresolved served-in subgoal cannot be checked until the variable z:cafe visited last week is grounded.
  - input:
      QUESTION: |-
        What is the name of Melanie's dog?
      GOAL: |-
        (Melanie's dog) has name (x:person_or_pet_name).
      GENERAL_RULE: |-
        IF Melanie has a dog AND Melanie's dog has name (x:person_or_pet_name), THEN x is the answer.
      CURRENT_SUBSTITUTION: "{}"
      KNOWN_INFO:
        - Melanie has a dog.
      UNRESOLVED_SUBGOALS:
        - Melanie's dog has name (x:person_or_pet_name). -- no fact states the dog's name
      FACTS:
        - "1- (Melanie, has_pet, dog) [event point_in_time: 5 August, 2023] [spoken at: 11:20 am on 5 August, 2023]"
        - "2- (Melanie, enjoys, walking her dog in the park) [event point_in_time: 5 August, 2023] [spoken at: 11:20 am on 5 August, 2023]"
    output: |-
      Refinement Status: refine
      Missing Info: The name Melanie uses for her dog.
      Relation Type: semantic
      Refined Subgoals:
      - Melanie mentions her dog by name as (x:person_or_pet_name).
      Retrieval Queries:
      - Melanie dog name mentions her dog by name
      Rationale: The dog is established, but the answer variable x remains unbound until a memory names the dog.
)YAML";

inline const char* const kGoalParse = R"YAML(
system: |-
  Translate the user's question into a single NL-Logic goal.

  - Write named entities as constants: (Name) or (Name:type).
  - Write every value the answer must supply as a typed variable: (x:type), (y:type), ...
  - Keep the relation as a short natural-language phrase.
  - For a yes/no question, write the statement to be checked and declare no variable.

  Output format (exactly):
  Goal: <goal with typed slots>
  Variables:
  - (<variable:type>): <what the variable stands for>
  or
  - none: <why no variable is needed>

input_template: |-
  Question: {{QUESTION}}

output_labels: ["Goal:", "Variables:"]

few-shot:
  - input:
      QUESTION: "Alice: Which drink did I order at cafe Momoco?"
    output: |-
      Goal: (x:drink) ordered by (Alice:human) at (Momoco:cafe).
      Variables:
      - (x:drink): the drink Alice ordered
  - input:
      QUESTION: "Would Melanie be likely to attend an outdoor fitness event?"
    output: |-
      Goal: (Melanie) is likely to attend an outdoor fitness event.
      Variables:
      - none: the question asks for a yes/no judgment
)YAML";

inline const char* const kAnswer = R"YAML(
system: |-
  Answer the user's question using only the evidence given.

  - If a grounded goal is given, the answer must agree with it.
  - Use only the listed facts. If they do not support an answer, reply "I don't know".
  - Keep the answer to the shortest phrase that answers the question.

  Output format (exactly):
  Answer: <answer>

input_template: |-
  Question: {{QUESTION}}
  {% if GROUNDED_GOAL %}
  Grounded Goal: {{GROUNDED_GOAL}}
  {% endif %}
  {% if SUBSTITUTION %}
  Substitution: {{SUBSTITUTION}}
  {% endif %}
  {% if FACTS %}
  Facts:
  {{FACTS|join('\n')}}
  {% endif %}
  Answer:

output_labels: ["Answer:"]
)YAML";

inline const char* const kRewrite = R"YAML(
system: |-
  Rewrite the question into diverse search queries for a personal conversation memory.

  - Target different entities, events, time expressions, synonyms and background aspects.
  - Keep the important entities and events of the original question.
  - Write exactly the requested number of queries, one per bullet.

  Output format (exactly):
  Queries:
  - <query 1>
  - <query 2>

input_template: |-
  Question: {{QUESTION}}
  Number of queries: {{COUNT}}

output_labels: ["Queries:"]
)YAML";

inline const char* const kReflection = R"YAML(
system: |-
  You decide whether the retrieved memories are enough to answer the question.

  Reply with one JSON object and nothing else:
  {"sufficient": true|false, "next_query": "<one concise query, or empty>", "rationale": "<short reason>"}

input_template: |-
  Question: {{QUESTION}}
  {% if QUERIES %}
  Queries issued so far:
  {{QUERIES|join('\n')}}
  {% endif %}
  {% if FACTS %}
  Retrieved memories:
  {{FACTS|join('\n')}}
  {% endif %}
  Decision:

output_labels: ["\"sufficient\"", "\"next_query\"", "\"rationale\""]
)YAML";

inline const char* const kReact = R"YAML(
system: |-
  Answer the question by searching a personal conversation memory.

  At every step write exactly one Thought line and one Action line. The action is either
  Retrieve[<search query>] or Finish[<final answer>].

  Output format (exactly):
  Thought: <reasoning>
  Action: Retrieve[<query>] or Finish[<answer>]

input_template: |-
  Question: {{QUESTION}}
  {% if TRAJECTORY %}
  {{TRAJECTORY|join('\n')}}
  {% endif %}
  {% if FORCE_FINISH %}
  {{FORCE_FINISH}}
  {% endif %}

output_labels: ["Thought:", "Action:"]
)YAML";

inline const char* const kMemguideIntent = R"YAML(
system: |-
  Describe the intent behind the question and write retrieval queries aligned with that intent.

  Output format (exactly):
  Intent: <compact description of what the user wants>
  Queries:
  - <query 1>
  - <query 2>

input_template: |-
  Question: {{QUESTION}}
  Number of queries: {{COUNT}}

output_labels: ["Intent:", "Queries:"]
)YAML";

inline const char* const kMemguideSlots = R"YAML(
system: |-
  Check whether the candidate memories fill every slot needed to answer the question.
  Slots are concrete fields such as a date, location, counterpart person, event outcome or relation.

  Output format (exactly):
  Sufficient: <yes|no>
  Missing Slots:
  - <slot, or "none">
  Follow-up Queries:
  - <query, or "none">

input_template: |-
  Question: {{QUESTION}}
  Intent: {{INTENT}}
  Maximum follow-up queries: {{MAX_FOLLOWUPS}}
  {% if FACTS %}
  Candidate memories:
  {{FACTS|join('\n')}}
  {% endif %}

output_labels: ["Sufficient:", "Missing Slots:", "Follow-up Queries:"]
)YAML";

inline const char* const kMemguideScore = R"YAML(
system: |-
  Score each candidate memory from 0 to 1 by how directly it answers the question or fills a missing slot.

  Output format (exactly):
  Scores:
  - <candidate number>: <score>

input_template: |-
  Question: {{QUESTION}}
  {% if MISSING_SLOTS %}
  Missing slots:
  {{MISSING_SLOTS|join('\n')}}
  {% endif %}
  Candidates:
  {{CANDIDATES|join('\n')}}

output_labels: ["Scores:"]
)YAML";

inline const char* const kAnswerJudge = R"YAML(
system: |-
  Decide whether the predicted answer matches the reference answer for the question.
  Minor wording differences are fine; a different entity, date or value is not.

  Output format (exactly):
  Verdict: <correct|incorrect>

input_template: |-
  Question: {{QUESTION}}
  Reference: {{REFERENCE}}
  Prediction: {{PREDICTION}}

output_labels: ["Verdict:"]
)YAML";

inline const std::map<std::string, const char*>& builtin_sources()
{
    static const std::map<std::string, const char*> sources = {
        {"decomposition", kDecomposition},
        {"decomposition_next_hop", kDecompositionNextHop},
        {"unification", kUnification},
        {"refinement", kRefinement},
        {"goal_parse", kGoalParse},
        {"answer", kAnswer},
        {"rewrite", kRewrite},
        {"reflection", kReflection},
        {"react", kReact},
        {"memguide_intent", kMemguideIntent},
        {"memguide_slots", kMemguideSlots},
        {"memguide_score", kMemguideScore},
        {"answer_judge", kAnswerJudge},
    };
    return sources;
}

using TemplateSet = std::map<std::string, PromptTemplate>;

/// Built-ins, each replaced by `<dir>/<name>.yaml` when that file exists.
inline TemplateSet load_templates(const std::filesystem::path& override_dir = {})
{
    TemplateSet set;
    for (const auto& [name, source] : builtin_sources()) {
        auto file = override_dir.empty() ? std::filesystem::path{} : override_dir / (name + ".yaml");
        if (!file.empty() && std::filesystem::exists(file)) {
            set.emplace(name, load_template_file(file));
        } else {
            set.emplace(name, template_from_yaml(source, name));
        }
    }
    return set;
}

inline const TemplateSet& builtin_templates()
{
    static const TemplateSet set = load_templates();
    return set;
}

}  // namespace goalmem::prompts
