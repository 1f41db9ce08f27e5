#pragma once

#include <string>

namespace memanchor::prompts {

// System prompt for atomic fact extraction. An optional few-shot example
// block can be appended by the caller (extraction_example in the config).
inline constexpr const char* kFactExtraction =
    R"(-Goal-
You are an expert in extracting factual memories.

# TASK

Your task is to extract memories from the snippets of dialogue between two speakers. This means identifying what each speaker would plausibly remember, including their own experiences, thoughts, plans, or relevant statements and actions made by others that impacted or were acknowledged by the speaker.

# FOCUS DUAL SPEAKER

You must extract facts and memories for BOTH speakers involved in the conversation. Ensure the output list contains a comprehensive representation of both speakers' perspectives.

# INSTRUCTIONS

1. Identify information that reflects speaker's experiences, beliefs, concerns, decisions, plans, or reactions — including meaningful input from one speaker that the other acknowledged or responded to.

2. Resolve all person, and event references clearly:

   - Include specific locations if mentioned.

   - Resolve all pronouns, aliases, and ambiguous references into full names or identities.

   - Disambiguate people with the same name if applicable.

3. Do not omit any information that speakers is likely to remember.

   - Include all key experiences, thoughts, emotional responses, and plans — even if they seem minor.

   - Prioritize completeness and fidelity over conciseness.

   - Do not generalize or skip details that could be personally meaningful to speaker.

4. Every memory MUST start with the Name of the speaker.

5. Output Format:

   - Return ONLY a valid JSON list of strings.)";

// System prompt for integrating a cluster of facts and their source
// dialogues into third-person event narratives.
inline constexpr const char* kEventIntegration =
    R"(-Goal-
You are a memory organization expert and storyteller.

# TASK
Your task is to organize a comprehensive, detailed event Narrative by integrating information from multiple dialogue fragments. You will be provided with a set of "Focus Topics" (key facts extracted previously) and "Source Contexts" (raw dialogues containing the details).

Must extract memories from the snippets of dialogue between two speakers. This means identifying what each speaker would plausibly remember — including their own experiences, thoughts, plans, or relevant statements and actions made by others that impacted or were acknowledged by the speaker.

# FOCUS DUAL SPEAKER
You must extract facts and memories for BOTH speakers involved in the conversation. Ensure the output list contains a comprehensive representation of both speakers' perspectives.

# INSTRUCTIONS
1. Identify information that reflects speaker's experiences, beliefs, concerns, decisions, plans, or reactions — including meaningful input from one speaker that the other acknowledged or responded to.

2. Focus on "Focus Topics": Ensure all information related to the provided Focus Topics is included. Use the Source Contexts to fill in the why, how, where, and who regarding these topics.

3. Resolve all person, and event references clearly:

- Include specific locations if mentioned.

- Resolve all pronouns, aliases, and ambiguous references into full names or identities.

- Disambiguate people with the same name if applicable.

4. Preserve Details:

- Include specific locations, names, and objects.

- Capture the speakers' emotional responses (e.g., excitement, anxiety, gratitude) and their reasoning.

- Do not generalize specific details if they are relevant to the Focus Topics.

5. Third-Person Perspective: Write from an objective third-person perspective.

6. Output Format:

- Return ONLY a valid JSON list of strings.)";

// Grading prompt. The three {slots} are filled by build_judge_prompt; the
// leniency rules (topic match, date-format tolerance) live in this text.
inline constexpr const char* kJudgeTemplate =
    R"(Your task is to label an answer to a question as 'CORRECT' or 'WRONG'. You will be given the following data:
    (1) a question (posed by one user to another user),
    (2) a 'gold' (ground truth) answer,
    (3) a generated answer
which you will score as CORRECT/WRONG.

The point of the question is to ask about something one user should know about the other user based on their prior conversations.

The gold answer will usually be a concise and short answer that includes the referenced topic, for example:
Question: Do you remember what I got the last time I went to Hawaii?
Gold answer: A shell necklace
The generated answer might be much longer, but you should be generous with your grading - as long as it touches on the same topic as the gold answer, it should be counted as CORRECT.

For time related questions, the gold answer will be a specific date, month, year, etc. The generated answer might be much longer or use relative time references (like "last Tuesday" or "next month"), but you should be generous with your grading - as long as it refers to the same date or time period as the gold answer, it should be counted as CORRECT. Even if the format differs (e.g., "May 7th" vs "7 May"), consider it CORRECT if it's the same date.

Now it's time for the real question:
Question: {question}
Gold answer: {gold_answer}
Generated answer: {generated_answer}

First, provide a short (one sentence) explanation of your reasoning, then finish with CORRECT or WRONG.
Do NOT include both CORRECT and WRONG in your response, or it will break the evaluation script.

Just return the label CORRECT or WRONG in a json format with the key as "label".)";

// Default answer-generation system prompt; overridable via config.
inline constexpr const char* kAnswerSystem =
    "Answer the question using only the provided memories; answer concisely.";

inline std::string fill_slot(std::string templ, const std::string& slot, const std::string& value) {
    std::string marker = "{" + slot + "}";
    std::size_t pos = templ.find(marker);
    if (pos != std::string::npos) templ.replace(pos, marker.size(), value);
    return templ;
}

inline std::string build_judge_prompt(const std::string& question, const std::string& gold_answer,
                                      const std::string& generated_answer) {
    std::string p = kJudgeTemplate;
    p = fill_slot(std::move(p), "question", question);
    p = fill_slot(std::move(p), "gold_answer", gold_answer);
    p = fill_slot(std::move(p), "generated_answer", generated_answer);
    return p;
}

}  // namespace memanchor::prompts
