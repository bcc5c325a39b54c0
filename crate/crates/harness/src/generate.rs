//! Seeded random scenarios. Every tool queue holds more completions than a
//! run can consume, so a generated scenario never starves the engine.
//! Completions mix well-formed output with malformed output and transport
//! failures to exercise every fallback path.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use tutor_core::gateway::ScriptEntry;
use tutor_core::orchestrator::Schedule;
use tutor_core::{Difficulty, ToolTag, Variant};

use crate::scenario::Scenario;

const TITLES: &[&str] = &[
    "Weathering",
    "Frost wedging",
    "Transport",
    "Deposition",
    "Glaciers",
    "Rivers",
    "Wind",
    "Coastlines",
    "Soil formation",
    "Sediment",
    "Human impact",
    "Erosion rates",
];

const WORDS: &[&str] = &[
    "rock",
    "water",
    "slowly",
    "moves",
    "the",
    "surface",
    "over",
    "time",
    "particles",
    "carried",
    "by",
    "ice",
    "and",
    "settles",
    "downstream",
    "forces",
    "shape",
    "valleys",
];

const MESSAGES: &[&str] = &[
    "tell me more",
    "why does that happen?",
    "can you quiz me",
    "1A 2B",
    "A",
    "I think the answer is B",
    "",
    "what is the difference between the two?",
    "ok",
];

/// A random one- or two-level outline drawn from a shared title pool, so
/// successive designs sometimes keep, add and drop the same objectives.
pub fn random_outline(rng: &mut impl Rng) -> String {
    let mut pool: Vec<&str> = TITLES.to_vec();
    pool.shuffle(rng);
    let mut titles = pool.into_iter();
    let mut out = String::new();
    for _ in 0..rng.random_range(1..=4) {
        let Some(top) = titles.next() else { break };
        out.push_str(&format!("- {top}\n"));
        for _ in 0..rng.random_range(0..=2) {
            let Some(child) = titles.next() else { break };
            out.push_str(&format!("  - {child}\n"));
        }
    }
    out
}

fn sentence(rng: &mut impl Rng, titles: bool) -> String {
    let n = rng.random_range(3..40);
    let mut words: Vec<String> = (0..n)
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect();
    if titles {
        for _ in 0..rng.random_range(0..3) {
            let at = rng.random_range(0..=words.len());
            words.insert(at, TITLES.choose(rng).unwrap().to_string());
        }
    }
    words.join(" ")
}

fn mcq(rng: &mut impl Rng, count: usize) -> String {
    (0..count)
        .map(|i| {
            let options = rng.random_range(2..=4);
            let mut block = format!(
                "STEM: Question {i} about {}?\n",
                TITLES.choose(rng).unwrap()
            );
            for o in 0..options {
                block.push_str(&format!(
                    "OPTION {}: {}\n",
                    (b'A' + o) as char,
                    sentence(rng, false)
                ));
            }
            block.push_str(&format!(
                "ANSWER: {}\n",
                (b'A' + rng.random_range(0..options)) as char
            ));
            block
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn judgments(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=5);
    (1..=n)
        .map(|i| {
            let correct = rng.random_bool(0.5);
            format!(
                "Q{i}: {} | {} | {}",
                ["A", "B", "C", "NONE"].choose(rng).unwrap(),
                if correct { "CORRECT" } else { "INCORRECT" },
                sentence(rng, false)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn entry(rng: &mut impl Rng, tag: ToolTag) -> ScriptEntry {
    let fail = match tag {
        // Teach failures cost the learner a retry; keep them rare.
        ToolTag::Teach => 0.02,
        ToolTag::CourseDesign | ToolTag::FinalQuiz => 0.0,
        _ => 0.05,
    };
    if rng.random_bool(fail) {
        return ScriptEntry::Failure {
            error: "simulated outage".into(),
        };
    }
    let malformed = rng.random_bool(0.1);
    let text = match tag {
        ToolTag::MetaAgent => [
            "TEACH",
            "TEACH",
            "ANSWER",
            "ANSWER",
            "QUIZ",
            "QUIZ: time to check",
            "hmm",
        ]
        .choose(rng)
        .unwrap()
        .to_string(),
        ToolTag::Teach | ToolTag::Answer => sentence(rng, true),
        ToolTag::Quiz => "Let's check what you remember.".into(),
        ToolTag::Evaluation if malformed => "Looks fine to me.".into(),
        ToolTag::Evaluation => judgments(rng),
        ToolTag::ObjectiveCompletion => {
            ["YES", "YES - covered", "NO", "NO", "NO - not yet", "unsure"]
                .choose(rng)
                .unwrap()
                .to_string()
        }
        ToolTag::ProfileGeneration => format!("Learner {}.", sentence(rng, false)),
        ToolTag::CourseDesign if malformed => "- a\n  - b\n    - c\n".into(),
        ToolTag::CourseDesign => random_outline(rng),
        ToolTag::QuizGeneration if malformed => "no questions today".into(),
        ToolTag::QuizGeneration => {
            let n = rng.random_range(1..=4);
            mcq(rng, n)
        }
        ToolTag::FinalQuiz => mcq(rng, 5),
    };
    ScriptEntry::Text(text)
}

/// A scenario with `max_rounds(difficulty)` learner messages.
pub fn random_scenario(seed: u64, variant: Variant, difficulty: Difficulty) -> Scenario {
    let mut rng = StdRng::seed_from_u64(seed);
    let rounds = Schedule::for_difficulty(difficulty).max_rounds as usize;
    let learner_script = (0..rounds)
        .map(|_| MESSAGES.choose(&mut rng).unwrap().to_string())
        .collect();

    let mut provider_script = BTreeMap::new();
    // Opening design and lesson come first and must succeed.
    let mut design = vec![ScriptEntry::Text(random_outline(&mut rng))];
    let mut teach = vec![ScriptEntry::Text(sentence(&mut rng, true))];
    let depth = 3 * rounds + 8;
    for tag in ToolTag::ALL {
        let queue: Vec<ScriptEntry> = (0..depth).map(|_| entry(&mut rng, tag)).collect();
        match tag {
            ToolTag::CourseDesign => design.extend(queue),
            ToolTag::Teach => teach.extend(queue),
            _ => {
                provider_script.insert(tag, queue);
            }
        }
    }
    provider_script.insert(ToolTag::CourseDesign, design);
    provider_script.insert(ToolTag::Teach, teach);

    Scenario {
        topic: "Erosion".into(),
        difficulty,
        variant,
        learner_script,
        provider_script,
    }
}
