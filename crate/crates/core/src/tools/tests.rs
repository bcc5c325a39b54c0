use std::collections::BTreeSet;
use std::sync::Arc;

use super::prompts::{section_body, sections_in, Section};
use super::*;
use crate::gateway::{Embedder, HashEmbedder, ScriptedProvider};
use crate::memory::{QuizOption, Status};

const DIM: usize = 16;

struct Fixture {
    provider: Arc<ScriptedProvider>,
    gateway: Gateway,
    plan: CoursePlan,
    profile: LearningProfile,
    history: LearningHistory,
    pool: QuizPool,
    variant: Variant,
    difficulty: Difficulty,
}

impl Fixture {
    /// Erosion { Weathering { Frost }, Transport, Deposition }
    fn new(variant: Variant, level: i64) -> Self {
        let provider = Arc::new(ScriptedProvider::new());
        let gateway = Gateway::scripted(provider.clone(), DIM);
        let outline = OutlineNode::new("Erosion").with_children(vec![
            OutlineNode::new("Weathering").with_children(vec![OutlineNode::new("Frost")]),
            OutlineNode::new("Transport"),
            OutlineNode::new("Deposition"),
        ]);
        let difficulty = Difficulty::new(level).unwrap();
        Self {
            provider,
            gateway,
            plan: CoursePlan::from_outline(&outline, difficulty).unwrap(),
            profile: LearningProfile::default(),
            history: LearningHistory::new(variant.short_term_capacity()),
            pool: QuizPool::new(),
            variant,
            difficulty,
        }
    }

    fn ctx(&self) -> ToolContext<'_> {
        ToolContext {
            topic: "Erosion",
            difficulty: self.difficulty,
            variant: self.variant,
            plan: &self.plan,
            profile: &self.profile,
            history: &self.history,
            pool: &self.pool,
            round: self.history.last_round() + 1,
            last_quiz_round: None,
        }
    }

    fn add_round(&mut self, learner: &str, system: &str) {
        let e = HashEmbedder::new(DIM);
        let r = self.history.last_round() + 1;
        self.history
            .append_round(
                r,
                (learner.into(), e.embed(learner).unwrap()),
                (system.into(), e.embed(system).unwrap()),
            )
            .unwrap();
    }

    fn id(&self, title: &str) -> NodeId {
        self.plan
            .root
            .preorder()
            .find(|n| n.title == title)
            .unwrap()
            .id
            .clone()
    }

    fn complete(&mut self, title: &str) {
        let id = self.id(title);
        self.plan.mark_completed(&id).unwrap();
    }
}

fn item(id: &NodeId, stem: &str, round: u32) -> QuizItem {
    let opt = |l: &str, t: &str| QuizOption {
        label: l.into(),
        text: t.into(),
    };
    QuizItem::new(
        id.clone(),
        stem,
        vec![opt("A", "yes"), opt("B", "no")],
        "A",
        round,
    )
    .unwrap()
}

fn memory_sections(prompt: &str) -> BTreeSet<Section> {
    use Section::*;
    sections_in(prompt)
        .into_iter()
        .filter(|s| {
            matches!(
                s,
                CurrentObjective
                    | RecentConversation
                    | LearningProfile
                    | RelevantHistory
                    | CoursePlan
                    | QuizPool
            )
        })
        .collect()
}

fn set(s: &[Section]) -> BTreeSet<Section> {
    s.iter().copied().collect()
}

fn last_prompt(calls: &[CallTrace]) -> &str {
    &calls.last().expect("a model call").prompt
}

#[test]
fn teach_level_1_prompt() {
    let f = Fixture::new(Variant::Main, 1);
    f.provider.push(ToolTag::Teach, "Erosion is...");
    let mut run = ToolRunner::new(&f.gateway);
    let r = run.teach(&f.ctx()).unwrap();
    assert_eq!(r, SystemResponse::teach("Erosion is..."));
    let calls = run.take_calls();
    let prompt = last_prompt(&calls);
    assert!(prompt.contains("Keep generated text short"));
    assert!(prompt.contains("very simple and accessible language"));
    assert_eq!(
        section_body(prompt, Section::CurrentObjective),
        Some("Erosion")
    );
}

#[test]
fn teach_level_4_bullets() {
    let f = Fixture::new(Variant::Main, 4);
    f.provider.push(ToolTag::Teach, "x");
    let mut run = ToolRunner::new(&f.gateway);
    run.teach(&f.ctx()).unwrap();
    assert!(last_prompt(&run.take_calls()).contains("bullet point"));
}

#[test]
fn teach_without_objective() {
    let mut f = Fixture::new(Variant::Main, 1);
    for t in ["Erosion", "Weathering", "Frost", "Transport", "Deposition"] {
        f.complete(t);
    }
    let mut run = ToolRunner::new(&f.gateway);
    assert_eq!(run.teach(&f.ctx()), Err(ToolError::NoCurrentObjective));
    assert!(run.take_calls().is_empty());
}

#[test]
fn answer_retrieves_verbatim_match() {
    let mut f = Fixture::new(Variant::Main, 2);
    f.add_round(
        "what is frost wedging",
        "Water freezes in cracks and splits rock.",
    );
    f.add_round("ok", "Next, rivers carry sediment downstream.");
    f.provider.push(ToolTag::Answer, "A");
    let mut run = ToolRunner::new(&f.gateway);
    run.answer(&f.ctx(), "what is frost wedging").unwrap();
    let calls = run.take_calls();
    let body = section_body(last_prompt(&calls), Section::RelevantHistory).unwrap();
    assert_eq!(
        body.lines().next(),
        Some("[round 1, learner] what is frost wedging")
    );
}

#[test]
fn answer_empty_store() {
    let f = Fixture::new(Variant::Main, 2);
    f.provider.push(ToolTag::Answer, "A");
    let mut run = ToolRunner::new(&f.gateway);
    run.answer(&f.ctx(), "why?").unwrap();
    let calls = run.take_calls();
    assert_eq!(
        section_body(last_prompt(&calls), Section::RelevantHistory),
        Some("")
    );
    assert_eq!(run.answer(&f.ctx(), "  "), Err(ToolError::EmptyQuestion));
}

#[test]
fn answer_top5_of_8_matches_oracle() {
    let mut f = Fixture::new(Variant::Main, 2);
    let lines = [
        ("rocks break apart", "weathering breaks rock"),
        ("what moves sand", "wind and water move sand"),
        ("glaciers", "glaciers scrape valleys"),
        ("rivers", "rivers cut canyons over time"),
    ];
    for (l, s) in lines {
        f.add_round(l, s);
    }
    let question = "how do rivers move sand";
    f.provider.push(ToolTag::Answer, "A");
    let mut run = ToolRunner::new(&f.gateway);
    run.answer(&f.ctx(), question).unwrap();

    // Oracle: score every record, sort with the declared tie-breaks.
    let e = HashEmbedder::new(DIM);
    let q = e.embed(question).unwrap();
    let mut scored: Vec<(f64, u32, u8, String)> = f
        .history
        .long_term()
        .iter()
        .map(|r| {
            let dot: f64 = q
                .values()
                .iter()
                .zip(r.vector.values())
                .map(|(a, b)| *a as f64 * *b as f64)
                .sum();
            let sp = if r.speaker == crate::memory::Speaker::Learner {
                0
            } else {
                1
            };
            (dot, r.round, sp, r.text.clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let expected: Vec<String> = scored[..5].iter().map(|s| s.3.clone()).collect();

    let calls = run.take_calls();
    let body = section_body(last_prompt(&calls), Section::RelevantHistory).unwrap();
    let got: Vec<String> = body
        .lines()
        .map(|l| l.split_once("] ").unwrap().1.to_string())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn quiz_selection_newest_per_objective() {
    let mut f = Fixture::new(Variant::Main, 2);
    f.complete("Weathering");
    f.complete("Frost");
    let (b, d) = (f.id("Weathering"), f.id("Frost"));
    let plan = f.plan.clone();
    f.pool.append(&plan, &b, vec![item(&b, "q1", 1)]).unwrap();
    f.pool
        .append(&plan, &d, vec![item(&d, "q2", 2), item(&d, "q3", 3)])
        .unwrap();
    f.provider.push(ToolTag::Quiz, "Let's check.");
    let mut run = ToolRunner::new(&f.gateway);
    let r = run.make_quiz(&f.ctx()).unwrap();
    let stems: Vec<&str> = r
        .quiz_items
        .as_ref()
        .unwrap()
        .iter()
        .map(|q| q.stem.as_str())
        .collect();
    assert_eq!(stems, vec!["q1", "q3"]);
    assert!(r.text.starts_with("Let's check.\n\n1. q1"));
    assert!(r.judgments.is_none());
}

#[test]
fn quiz_cap_of_five() {
    let mut f = Fixture::new(Variant::Main, 2);
    let outline = OutlineNode::new("T")
        .with_children((1..=6).map(|i| OutlineNode::new(format!("o{i}"))).collect());
    f.plan = CoursePlan::from_outline(&outline, f.difficulty).unwrap();
    let ids: Vec<NodeId> = f.plan.root.preorder().map(|n| n.id.clone()).collect();
    let plan0 = f.plan.clone();
    for (i, id) in ids.iter().enumerate() {
        f.plan.mark_completed(id).unwrap();
        f.pool
            .append(&plan0, id, vec![item(id, &format!("q{i}"), i as u32 + 1)])
            .unwrap();
    }
    assert_eq!(ids.len(), 7);
    f.provider.push(ToolTag::Quiz, "Quiz time.");
    let mut run = ToolRunner::new(&f.gateway);
    let r = run.make_quiz(&f.ctx()).unwrap();
    let stems: Vec<&str> = r
        .quiz_items
        .as_ref()
        .unwrap()
        .iter()
        .map(|q| q.stem.as_str())
        .collect();
    // The five newest, in plan order.
    assert_eq!(stems, vec!["q2", "q3", "q4", "q5", "q6"]);
}

#[test]
fn quiz_without_completed_objectives() {
    let f = Fixture::new(Variant::Main, 2);
    let mut run = ToolRunner::new(&f.gateway);
    assert_eq!(run.make_quiz(&f.ctx()), Err(ToolError::EmptyQuizPool));
    assert!(run.take_calls().is_empty());
}

fn pending(f: &Fixture) -> Vec<QuizItem> {
    let id = f.id("Weathering");
    let mut c = item(&id, "Which is weathering?", 1);
    c.answer_key = "B".into();
    vec![item(&id, "Is frost weathering?", 1), c]
}

#[test]
fn evaluation_passes_judgments_through() {
    let mut f = Fixture::new(Variant::Main, 2);
    f.add_round("quiz me", "1. Is frost weathering?");
    let quiz = pending(&f);
    f.provider.push(
        ToolTag::Evaluation,
        "Q1: A | CORRECT | Right.\nQ2: B | CORRECT | Yes.\nWell done.",
    );
    let mut run = ToolRunner::new(&f.gateway);
    let ev = run.evaluate(&f.ctx(), "1A 2B", &quiz).unwrap();
    assert!(ev.unstructured.is_none());
    let j = ev.response.judgments.unwrap();
    assert!(j.iter().all(|j| j.correct));
    let calls = run.take_calls();
    let prompt = last_prompt(&calls);
    assert!(section_body(prompt, Section::Quiz)
        .unwrap()
        .contains("Answer key: B"));
    assert_eq!(section_body(prompt, Section::LearnerAnswer), Some("1A 2B"));
}

#[test]
fn evaluation_empty_answer_no_call() {
    let f = Fixture::new(Variant::Main, 2);
    let quiz = pending(&f);
    let mut run = ToolRunner::new(&f.gateway);
    let ev = run.evaluate(&f.ctx(), "   ", &quiz).unwrap();
    let j = ev.response.judgments.unwrap();
    assert_eq!(j.len(), 2);
    assert!(j.iter().all(|j| !j.correct && j.parsed_answer.is_none()));
    assert!(run.take_calls().is_empty());
    assert_eq!(
        run.evaluate(&f.ctx(), "1A", &[]),
        Err(ToolError::NoPendingQuiz)
    );
}

#[test]
fn evaluation_unstructured_after_reask() {
    let f = Fixture::new(Variant::Main, 2);
    let quiz = pending(&f);
    f.provider.push(ToolTag::Evaluation, "Nice try!");
    f.provider.push(ToolTag::Evaluation, "Still prose.");
    let mut run = ToolRunner::new(&f.gateway);
    let ev = run.evaluate(&f.ctx(), "1A 2B", &quiz).unwrap();
    assert_eq!(ev.response.text, "Still prose.");
    assert!(ev.response.judgments.is_none());
    assert!(ev.unstructured.is_some());
    let calls = run.take_calls();
    assert_eq!(calls.len(), 2);
    assert_eq!(calls[1].template, prompts::REASK);
}

#[test]
fn profile_pass_through() {
    let f = Fixture::new(Variant::Main, 2);
    f.provider
        .push(ToolTag::ProfileGeneration, "Learner prefers examples.");
    let mut run = ToolRunner::new(&f.gateway);
    let p = run.generate_profile(&f.ctx()).unwrap();
    assert_eq!(p.text, "Learner prefers examples.");
    assert_eq!(p.version, 1);
    assert_eq!(p.updated_at_round, 1);
}

#[test]
fn verdicts() {
    let f = Fixture::new(Variant::Main, 2);
    for (text, completed, fallback) in [
        ("YES \u{2014} covered definition and examples", true, false),
        ("NO", false, false),
        ("maybe?", false, true),
    ] {
        f.provider.push(ToolTag::ObjectiveCompletion, text);
        let mut run = ToolRunner::new(&f.gateway);
        let v = run.check_objective_completion(&f.ctx()).unwrap();
        assert_eq!(
            (v.completed, v.parse_fallback),
            (completed, fallback),
            "{text}"
        );
        assert_eq!(v.objective, f.id("Erosion"));
    }
}

#[test]
fn initial_design_ten_nodes() {
    let f = Fixture::new(Variant::Main, 1);
    f.provider.push(
        ToolTag::CourseDesign,
        "- Weathering\n  - Frost\n  - Roots\n- Transport\n  - Rivers\n  - Wind\n- Deposition\n  - Deltas\n  - Dunes",
    );
    let mut run = ToolRunner::new(&f.gateway);
    let tree = run.design_initial("Erosion", f.difficulty).unwrap();
    let plan = CoursePlan::from_outline(&tree, f.difficulty).unwrap();
    assert_eq!(plan.node_count(), 10);
    assert!(plan.root.preorder().all(|n| n.status == Status::Pending));
    assert_eq!(plan.root.title, "Erosion");
    let calls = run.take_calls();
    assert!(last_prompt(&calls).contains("Design a **very** short course"));
    assert!(memory_sections(last_prompt(&calls)).is_empty());
}

#[test]
fn design_accepts_topic_as_single_root() {
    let tree = outline_for(
        "- erosion [done]\n  - Weathering [done]\n  - Transport",
        "Erosion",
        Difficulty::new(1).unwrap(),
    )
    .unwrap();
    assert_eq!(tree.title, "Erosion");
    assert_eq!(tree.children.len(), 2);
    assert!(!tree.completed && !tree.children[0].completed);
}

#[test]
fn design_depth_error_after_one_reask() {
    let f = Fixture::new(Variant::Main, 1);
    let deep = "- a\n  - b\n    - c";
    f.provider.push(ToolTag::CourseDesign, deep);
    f.provider.push(ToolTag::CourseDesign, deep);
    let mut run = ToolRunner::new(&f.gateway);
    let err = run.design_initial("Erosion", f.difficulty).unwrap_err();
    assert_eq!(err, ToolError::Plan(PlanError::TooDeep { depth: 4 }));
    assert_eq!(run.take_calls().len(), 2);
}

#[test]
fn design_reask_recovers() {
    let f = Fixture::new(Variant::Main, 1);
    f.provider
        .push(ToolTag::CourseDesign, "- a\n  - b\n    - c");
    f.provider.push(ToolTag::CourseDesign, "- a\n  - b");
    let mut run = ToolRunner::new(&f.gateway);
    assert_eq!(
        run.design_initial("Erosion", f.difficulty).unwrap().count(),
        3
    );
}

const TWO_MCQ: &str = "```quiz\nSTEM: What splits rock?\nOPTION A: Frost\nOPTION B: Sun\nANSWER: A\n\nSTEM: Is ice weathering?\nOPTION A: Yes\nOPTION B: No\nANSWER: A\n```";

#[test]
fn quiz_generation_two_items() {
    let mut f = Fixture::new(Variant::Main, 2);
    f.complete("Erosion");
    let id = f.id("Erosion");
    f.provider.push(ToolTag::QuizGeneration, TWO_MCQ);
    let mut run = ToolRunner::new(&f.gateway);
    let items = run.generate_quiz(&f.ctx(), &id).unwrap();
    assert_eq!(items.len(), 2);
    assert!(items
        .iter()
        .all(|q| q.objective_id == id && q.source_round == 1));
    let calls = run.take_calls();
    assert_eq!(
        section_body(last_prompt(&calls), Section::CurrentObjective),
        Some("Erosion")
    );
}

#[test]
fn quiz_generation_preconditions() {
    let f = Fixture::new(Variant::Main, 2);
    let mut run = ToolRunner::new(&f.gateway);
    let id = f.id("Transport");
    assert_eq!(
        run.generate_quiz(&f.ctx(), &id),
        Err(ToolError::NotCompleted(id))
    );
    let ghost = NodeId::new("zz");
    assert_eq!(
        run.generate_quiz(&f.ctx(), &ghost),
        Err(ToolError::UnknownObjective(ghost))
    );
}

#[test]
fn quiz_generation_zero_valid() {
    let mut f = Fixture::new(Variant::Main, 2);
    f.complete("Erosion");
    f.provider.push(ToolTag::QuizGeneration, "no questions");
    f.provider.push(
        ToolTag::QuizGeneration,
        "STEM: x\nOPTION A: a\nOPTION B: b\nANSWER: Q",
    );
    let mut run = ToolRunner::new(&f.gateway);
    assert!(matches!(
        run.generate_quiz(&f.ctx(), &f.id("Erosion")),
        Err(ToolError::Parse { .. })
    ));
}

#[test]
fn final_quiz_history_vs_plan() {
    for variant in Variant::ALL {
        let mut f = Fixture::new(variant, 1);
        for i in 0..12 {
            f.add_round(&format!("learner {i}"), &format!("tutor {i}"));
        }
        f.provider.push(ToolTag::FinalQuiz, TWO_MCQ);
        let mut run = ToolRunner::new(&f.gateway);
        let r = run.final_quiz(&f.ctx()).unwrap();
        assert_eq!(r.quiz_items.as_ref().unwrap().len(), 2);
        let calls = run.take_calls();
        let prompt = last_prompt(&calls);
        match variant {
            Variant::InteractionOnly => {
                assert_eq!(memory_sections(prompt), set(&[Section::CoursePlan]));
                assert!(section_body(prompt, Section::CoursePlan)
                    .unwrap()
                    .starts_with(f.plan.render_outline().trim_end()));
            }
            _ => {
                assert_eq!(memory_sections(prompt), set(&[Section::RelevantHistory]));
                assert_eq!(
                    section_body(prompt, Section::RelevantHistory)
                        .unwrap()
                        .lines()
                        .filter(|l| l.starts_with("[round "))
                        .count(),
                    20
                );
            }
        }
    }
}

/// The memory sections each tool may see, per variant.
#[test]
fn input_discipline() {
    use Section::*;
    for variant in Variant::ALL {
        let mut f = Fixture::new(variant, 3);
        f.add_round("hello", "Erosion wears land away.");
        f.complete("Erosion");
        let id = f.id("Erosion");
        let plan = f.plan.clone();
        if variant != Variant::InteractionOnly {
            f.pool
                .append(&plan, &id, vec![item(&id, "Is it?", 1)])
                .unwrap();
        }
        let quiz = pending(&f);
        let pr = &f.provider;
        pr.push(ToolTag::MetaAgent, "TEACH");
        pr.push(ToolTag::Teach, "t");
        pr.push(ToolTag::Answer, "a");
        pr.push(ToolTag::Quiz, "q");
        pr.push(
            ToolTag::Evaluation,
            "Q1: A | CORRECT | ok\nQ2: B | CORRECT | ok",
        );
        pr.push(ToolTag::ProfileGeneration, "p");
        pr.push(ToolTag::ObjectiveCompletion, "NO");
        pr.push(ToolTag::CourseDesign, "- a");
        pr.push(ToolTag::QuizGeneration, TWO_MCQ);

        let ctx = f.ctx();
        let mut run = ToolRunner::new(&f.gateway);
        let check = |name: &str, expected: &[Section], run: &mut ToolRunner<'_>| {
            let calls = run.take_calls();
            assert_eq!(calls.len(), 1, "{variant} {name}");
            assert_eq!(
                memory_sections(&calls[0].prompt),
                set(expected),
                "{variant} {name}"
            );
        };

        let main = variant == Variant::Main;
        let long = variant != Variant::InteractionOnly;

        run.route(&ctx, "go on").unwrap();
        let obj_or_plan = if main { CurrentObjective } else { CoursePlan };
        check("meta_agent", &[RecentConversation, obj_or_plan], &mut run);

        run.teach(&ctx).unwrap();
        if main {
            check(
                "teach",
                &[LearningProfile, CurrentObjective, RecentConversation],
                &mut run,
            );
        } else {
            check("teach", &[CoursePlan, RecentConversation], &mut run);
        }

        run.answer(&ctx, "why?").unwrap();
        if long {
            check("answer", &[RecentConversation, RelevantHistory], &mut run);
        } else {
            check("answer", &[RecentConversation], &mut run);
        }

        if long {
            run.make_quiz(&ctx).unwrap();
            if main {
                check("quiz", &[QuizPool, LearningProfile], &mut run);
            } else {
                check("quiz", &[QuizPool], &mut run);
            }
        } else {
            assert_eq!(run.make_quiz(&ctx), Err(ToolError::EmptyQuizPool));
            pr.push(ToolTag::Quiz, "unused");
        }

        run.evaluate(&ctx, "1A 2B", &quiz).unwrap();
        if long {
            check("evaluation", &[RelevantHistory], &mut run);
        } else {
            check("evaluation", &[RecentConversation], &mut run);
        }

        run.generate_profile(&ctx).unwrap();
        check(
            "profile_generation",
            &[LearningProfile, RecentConversation],
            &mut run,
        );

        run.check_objective_completion(&ctx).unwrap();
        check(
            "objective_completion",
            &[CurrentObjective, RecentConversation],
            &mut run,
        );

        run.redesign(&ctx).unwrap();
        if main {
            check("course_design", &[CoursePlan, LearningProfile], &mut run);
        } else {
            check("course_design", &[CoursePlan, RecentConversation], &mut run);
        }

        run.generate_quiz(&ctx, &id).unwrap();
        check(
            "quiz_generation",
            &[CurrentObjective, RelevantHistory],
            &mut run,
        );
    }
}
