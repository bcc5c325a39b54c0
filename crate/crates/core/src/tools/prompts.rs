//! Prompt catalog. Every memory handed to a tool appears under its own
//! `=== NAME ===` header so the inputs of each call can be checked from the
//! logged prompt alone.
//!
//! The difficulty-specific course-design and teach instructions follow the
//! Bloom-taxonomy levels; all other wording is original to this crate.

use std::sync::LazyLock;

use regex::Regex;

use crate::gateway::{PromptTemplate, TemplateRegistry};
use crate::types::Difficulty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Section {
    CurrentObjective,
    RecentConversation,
    LearningProfile,
    RelevantHistory,
    CoursePlan,
    QuizPool,
    Quiz,
    LearnerAnswer,
    LearnerQuestion,
    LearnerMessage,
    QuizStatus,
}

impl Section {
    pub const ALL: [Section; 11] = [
        Section::CurrentObjective,
        Section::RecentConversation,
        Section::LearningProfile,
        Section::RelevantHistory,
        Section::CoursePlan,
        Section::QuizPool,
        Section::Quiz,
        Section::LearnerAnswer,
        Section::LearnerQuestion,
        Section::LearnerMessage,
        Section::QuizStatus,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Section::CurrentObjective => "CURRENT OBJECTIVE",
            Section::RecentConversation => "RECENT CONVERSATION",
            Section::LearningProfile => "LEARNING PROFILE",
            Section::RelevantHistory => "RELEVANT HISTORY",
            Section::CoursePlan => "COURSE PLAN",
            Section::QuizPool => "QUIZ POOL",
            Section::Quiz => "QUIZ",
            Section::LearnerAnswer => "LEARNER ANSWER",
            Section::LearnerQuestion => "LEARNER QUESTION",
            Section::LearnerMessage => "LEARNER MESSAGE",
            Section::QuizStatus => "QUIZ STATUS",
        }
    }

    pub fn header(self) -> String {
        format!("=== {} ===", self.title())
    }
}

static HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^=== ([A-Z ]+) ===$").expect("valid regex"));

/// Sections present in a rendered prompt, in order of appearance.
pub fn sections_in(prompt: &str) -> Vec<Section> {
    HEADER
        .captures_iter(prompt)
        .filter_map(|c| Section::ALL.into_iter().find(|s| s.title() == &c[1]))
        .collect()
}

/// Body of one section (text between its header and the next header).
pub fn section_body(prompt: &str, section: Section) -> Option<&str> {
    let header = section.header();
    let start = prompt.find(&header)? + header.len();
    let rest = &prompt[start..];
    let end = HEADER.find(rest).map_or(rest.len(), |m| m.start());
    Some(rest[..end].trim_matches('\n'))
}

pub fn course_design_instruction(d: Difficulty) -> &'static str {
    match d.level() {
        1 => "Level 1: Remembering (Knowledge) At this level, the focus is on providing basic facts. Students are required to remember facts, definitions, and concepts. Design a **very** short course.",
        2 => "Level 2: Understanding (Comprehension) This level involves describing and interpreting facts, definitions, and concepts. Design a course as concise as possible.",
        3 => "Level 3: Applying (Application) At this level, students are expected to use acquired knowledge in new and practical situations. The focus is on applying concepts to solve problems and complete tasks. Try to make the course concise and well-structured.",
        4 => "Level 4: Analyzing (Analysis) In this level, the course should break down information into its components to understand the relationships between parts and the overall structure. Try to make the course concise and well-structured.",
        _ => "Level 5: Evaluating (Evaluation) The course should assess the quality, validity, and relevance of information and arguments. Try to make the course concise and well-structured.",
    }
}

pub fn teach_instruction(d: Difficulty) -> &'static str {
    match d.level() {
        1 => "Teach in very simple and accessible language. Keep generated text short within a few sentences.",
        2 => "Teach in simple and accessible language. Keep language and wording easy to understand.",
        3 => "Teach in well-structured language and paragraph. Make information digestable. Try to use structured format to make it clearer, e.g. bullet point.",
        _ => "Use precise language to explain things in a systematic way. Try to use structured format to make it clearer, e.g. bullet point.",
    }
}

const OUTLINE_FORMAT: &str = "Reply with the course plan only, as an indented outline: one objective per line, each line starting with \"- \", two spaces of indentation per level. List the parts of the main objective as top-level lines and nest at most one more level below them. Keep each objective a concise phrase.";

const MCQ_FORMAT: &str = "Write each question inside a ```quiz fenced block using exactly these line prefixes:\nSTEM: <question>\nOPTION A: <choice>\nOPTION B: <choice>\n(up to OPTION E)\nANSWER: <letter of the correct option>";

pub const META_AGENT: &str = "meta_agent";
pub const META_AGENT_PLAN: &str = "meta_agent.plan";
pub const TEACH: &str = "teach";
pub const TEACH_PLAN: &str = "teach.plan";
pub const ANSWER: &str = "answer";
pub const ANSWER_SHORT_TERM: &str = "answer.short_term";
pub const QUIZ: &str = "quiz";
pub const QUIZ_POOL_ONLY: &str = "quiz.pool_only";
pub const EVALUATION: &str = "evaluation";
pub const EVALUATION_SHORT_TERM: &str = "evaluation.short_term";
pub const PROFILE_GENERATION: &str = "profile_generation";
pub const OBJECTIVE_COMPLETION: &str = "objective_completion";
pub const COURSE_DESIGN_INITIAL: &str = "course_design.initial";
pub const COURSE_DESIGN_PROFILE: &str = "course_design.profile";
pub const COURSE_DESIGN_HISTORY: &str = "course_design.history";
pub const QUIZ_GENERATION: &str = "quiz_generation";
pub const FINAL_QUIZ_HISTORY: &str = "final_quiz.history";
pub const FINAL_QUIZ_PLAN: &str = "final_quiz.plan";
pub const REASK: &str = "reask";

fn templates() -> Vec<(&'static str, String)> {
    vec![
        (
            META_AGENT,
            "You coordinate a tutoring session on \"{topic}\". Decide how the tutor should handle the learner's latest message.\n\
             TEACH continues instruction on the current objective. ANSWER responds to a question or request from the learner. QUIZ checks understanding of what has been covered.\n\n\
             === LEARNER MESSAGE ===\n{message}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             === CURRENT OBJECTIVE ===\n{objective}\n\n\
             === QUIZ STATUS ===\n{quiz_status}\n\n\
             Reply with exactly one word first: TEACH, ANSWER or QUIZ. You may add a short reason after it."
                .into(),
        ),
        (
            META_AGENT_PLAN,
            "You coordinate a tutoring session on \"{topic}\". Decide how the tutor should handle the learner's latest message.\n\
             TEACH continues instruction along the course plan. ANSWER responds to a question or request from the learner. QUIZ checks understanding of what has been covered.\n\n\
             === LEARNER MESSAGE ===\n{message}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             === COURSE PLAN ===\n{plan}\n\n\
             === QUIZ STATUS ===\n{quiz_status}\n\n\
             Reply with exactly one word first: TEACH, ANSWER or QUIZ. You may add a short reason after it."
                .into(),
        ),
        (
            TEACH,
            "You are a tutor teaching the course \"{topic}\".\n{difficulty_text}\n\n\
             === LEARNING PROFILE ===\n{profile}\n\n\
             === CURRENT OBJECTIVE ===\n{objective}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             Present new material on the current objective only. Build on what the conversation already covered instead of repeating it, and adapt to the learning profile."
                .into(),
        ),
        (
            TEACH_PLAN,
            "You are a tutor teaching the course \"{topic}\".\n{difficulty_text}\n\n\
             === COURSE PLAN ===\n{plan}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             Work out from the conversation where the learner is in the course plan and present the next piece of new material. Do not repeat what was already covered."
                .into(),
        ),
        (
            ANSWER,
            "You are a tutor for the course \"{topic}\". Answer the learner directly and accurately, staying consistent with what was taught.\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             === RELEVANT HISTORY ===\n{retrieved}\n\n\
             === LEARNER QUESTION ===\n{question}"
                .into(),
        ),
        (
            ANSWER_SHORT_TERM,
            "You are a tutor for the course \"{topic}\". Answer the learner directly and accurately, staying consistent with what was taught.\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             === LEARNER QUESTION ===\n{question}"
                .into(),
        ),
        (
            QUIZ,
            "You are a tutor for the course \"{topic}\" about to give the learner a short quiz on the questions below. Write one or two encouraging sentences introducing the quiz, suited to the learner. Do not restate or answer the questions.\n\n\
             === LEARNING PROFILE ===\n{profile}\n\n\
             === QUIZ POOL ===\n{pool}"
                .into(),
        ),
        (
            QUIZ_POOL_ONLY,
            "You are a tutor for the course \"{topic}\" about to give the learner a short quiz on the questions below. Write one or two encouraging sentences introducing the quiz. Do not restate or answer the questions.\n\n\
             === QUIZ POOL ===\n{pool}"
                .into(),
        ),
        (
            EVALUATION,
            "You grade a multiple-choice quiz for the course \"{topic}\". Work out which option the learner chose for each question, judge it against the answer key and give brief, personal feedback that explains mistakes.\n\n\
             === QUIZ ===\n{quiz}\n\n\
             === LEARNER ANSWER ===\n{learner_answer}\n\n\
             === RELEVANT HISTORY ===\n{retrieved}\n\n\
             {judgment_format}"
                .into(),
        ),
        (
            EVALUATION_SHORT_TERM,
            "You grade a multiple-choice quiz for the course \"{topic}\". Work out which option the learner chose for each question, judge it against the answer key and give brief, personal feedback that explains mistakes.\n\n\
             === QUIZ ===\n{quiz}\n\n\
             === LEARNER ANSWER ===\n{learner_answer}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             {judgment_format}"
                .into(),
        ),
        (
            PROFILE_GENERATION,
            "Maintain a learner profile for the course \"{topic}\": one short paragraph summarizing what the learner has learned so far, where they struggle, and how they prefer to learn.\n\n\
             === LEARNING PROFILE ===\n{profile}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             Reply with the updated profile paragraph only."
                .into(),
        ),
        (
            OBJECTIVE_COMPLETION,
            "Decide whether the learner has completed the current objective of the course \"{topic}\": it has been taught and the learner shows no open confusion about it.\n\n\
             === CURRENT OBJECTIVE ===\n{objective}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             Start your reply with YES or NO, then give a one-sentence reason."
                .into(),
        ),
        (
            COURSE_DESIGN_INITIAL,
            "Design a course plan whose main learning objective is \"{topic}\".\n{difficulty_text}\n\n{outline_format}".into(),
        ),
        (
            COURSE_DESIGN_PROFILE,
            "Revise the course plan for the main learning objective \"{topic}\" in light of the learner profile. Keep objectives that still fit, add what the learner needs and drop what no longer helps. Objectives marked [done] were completed; keep their wording unchanged.\n{difficulty_text}\n\n\
             === COURSE PLAN ===\n{plan}\n\n\
             === LEARNING PROFILE ===\n{profile}\n\n\
             {outline_format}"
                .into(),
        ),
        (
            COURSE_DESIGN_HISTORY,
            "Revise the course plan for the main learning objective \"{topic}\" in light of the recent conversation. Keep objectives that still fit, add what the learner needs and drop what no longer helps. Objectives marked [done] were completed; keep their wording unchanged.\n{difficulty_text}\n\n\
             === COURSE PLAN ===\n{plan}\n\n\
             === RECENT CONVERSATION ===\n{short_term}\n\n\
             {outline_format}"
                .into(),
        ),
        (
            QUIZ_GENERATION,
            "Write {count} representative multiple-choice questions that check understanding of the objective below from the course \"{topic}\". Base them on what was actually discussed.\n\n\
             === CURRENT OBJECTIVE ===\n{objective}\n\n\
             === RELEVANT HISTORY ===\n{retrieved}\n\n\
             {mcq_format}"
                .into(),
        ),
        (
            FINAL_QUIZ_HISTORY,
            "The course \"{topic}\" is over. Write a final quiz of {count} multiple-choice questions covering the most important material from the conversation.\n\n\
             === RELEVANT HISTORY ===\n{retrieved}\n\n\
             {mcq_format}"
                .into(),
        ),
        (
            FINAL_QUIZ_PLAN,
            "The course \"{topic}\" is over. Write a final quiz of {count} multiple-choice questions covering the objectives of the course plan.\n\n\
             === COURSE PLAN ===\n{plan}\n\n\
             {mcq_format}"
                .into(),
        ),
        (
            REASK,
            "{prompt}\n\nYour previous reply could not be used: {problem}\nAnswer again and follow the required format exactly.".into(),
        ),
    ]
}

/// Registry holding every template the tools render.
pub fn catalog() -> TemplateRegistry {
    let mut reg = TemplateRegistry::new();
    for (id, body) in templates() {
        reg.register(PromptTemplate::new(id, body))
            .expect("catalog ids are unique");
    }
    reg
}

pub fn outline_format() -> &'static str {
    OUTLINE_FORMAT
}

pub fn mcq_format() -> &'static str {
    MCQ_FORMAT
}

pub fn judgment_format(count: usize) -> String {
    format!(
        "Start with one line per question, numbered 1 to {count}, in this exact form:\n\
         Q<number>: <chosen option letter, or NONE> | CORRECT or INCORRECT | <feedback for that question>\n\
         Then add a short overall comment."
    )
}
