use hillplan::action::{GroundedAction, Verb};
use hillplan::bundled;
use hillplan::env::{load_environment, render_environment_info, EdgeDoc, EnvironmentDocument, InfoLevel, NodeDoc};
use hillplan::selector::{build_guide_prompt, build_selection_prompt, Guide, GuideStyle, Stage};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn microwave_guide() -> Guide {
    let text = "walk | microwave\nopen | microwave\nwalk | salmon\ngrab | salmon\nwalk | microwave\nputin | salmon | microwave\nclose | microwave\nswitchoff | microwave\n";
    Guide::from_text(GuideStyle::LowLevel, InfoLevel::None, text)
}

fn taken() -> Vec<GroundedAction> {
    vec![GroundedAction::new(Verb::Walk, &[("microwave", 297)]), GroundedAction::new(Verb::Open, &[("microwave", 297)])]
}

/// Options as listed in a golden prompt: `INDEX [WALK]<name>` lines.
fn listed_options(prompt: &str) -> Vec<(usize, GroundedAction)> {
    let body = prompt.split("**The list of actions available to you are:**\n").nth(1).unwrap();
    body.lines()
        .enumerate()
        .map(|(k, l)| {
            let (idx, rest) = l.split_once(' ').unwrap();
            let name = rest.strip_prefix("[WALK]<").unwrap().strip_suffix('>').unwrap();
            (idx.parse().unwrap(), GroundedAction::new(Verb::Walk, &[(name, 1000 + k as u32)]))
        })
        .collect()
}

#[test]
fn candidate_stage_prompt_matches_partition_fixture() {
    let golden = fixture("selection_prompt_partition.txt");
    let options = listed_options(&golden);
    assert_eq!(options.first().unwrap().0, 0);
    assert_eq!(options.last().unwrap().0, 99);
    let p = build_selection_prompt("microwave salmon", &microwave_guide(), &taken(), &options, Stage::Candidate);
    assert_eq!(p.user_message, golden);
}

#[test]
fn final_stage_prompt_matches_candidates_fixture() {
    let golden = fixture("selection_prompt_candidates.txt");
    let options = listed_options(&golden);
    assert_eq!(options.iter().map(|o| o.0).collect::<Vec<_>>(), vec![3, 100, 296, 310, 400]);
    let p = build_selection_prompt("microwave salmon", &microwave_guide(), &taken(), &options, Stage::Final);
    assert_eq!(p.user_message, golden);
    assert!(p.retry_prefix.is_none());
}

#[test]
fn retry_prompt_matches_fixture() {
    let golden = fixture("selection_prompt_candidates.txt");
    let options = listed_options(&golden);
    let p = build_selection_prompt("microwave salmon", &microwave_guide(), &taken(), &options, Stage::Final)
        .repeated("{15 [WALK]<bottle>}");
    assert_eq!(p.full_user_message(), fixture("retry_prompt_candidates.txt"));
}

#[test]
fn system_message_spot_checks() {
    let p = build_selection_prompt("x", &Guide::none(), &[], &[(0, taken()[0].clone())], Stage::Candidate);
    assert!(p
        .system_message
        .starts_with("You are the decision system of a robot excecuting tasks in a simulated environment. \n"));
    assert!(p.system_message.contains("in the form {INDEX [VERB]<item_1><item_2>...<item_n>}."));
    assert!(p.system_message.contains("`15 [WALK]<bottle>` will not be a valid output."));
    assert!(p.system_message.ends_with("{INDEX VERB<action>}"));
}

#[test]
fn prompts_are_byte_stable() {
    let options = listed_options(&fixture("selection_prompt_candidates.txt"));
    let a = build_selection_prompt("microwave salmon", &microwave_guide(), &taken(), &options, Stage::Final);
    let b = build_selection_prompt("microwave salmon", &microwave_guide(), &taken(), &options, Stage::Final);
    assert_eq!(a, b);
}

#[test]
fn high_level_guide_prompt_without_environment_info() {
    let env = bundled::desk_environment();
    let p = build_guide_prompt("put the cat in the bathtub", GuideStyle::HighLevel, &env, InfoLevel::None);
    assert_eq!(p.user_message, fixture("guide_high_level_none.txt"));
}

#[test]
fn low_level_guide_prompt_asks_for_pipe_lines() {
    let env = bundled::desk_environment();
    let p = build_guide_prompt("make toast", GuideStyle::LowLevel, &env, InfoLevel::Dynamic);
    assert!(p.user_message.contains("'verb | object' or 'verb | object | object'"));
    assert!(p.user_message.contains("\nbathroom: properties - {ROOM} | states - {}\n"));
    assert!(p.user_message.ends_with("What is a low-level plan for 'make toast'?"));
}

/// Rebuilds a small home from the reference listing (minus the three entries whose states lack
/// the matching property) and renders it back.
#[test]
fn dynamic_listing_matches_reference_lines() {
    let golden = fixture("environment_info_dynamic.txt");
    let kept: Vec<&str> = golden
        .lines()
        .filter(|l| !["toilet:", "bathroomcabinet:", "bathroomcounter:"].iter().any(|p| l.starts_with(p)))
        .collect();
    let mut nodes = Vec::new();
    for (k, line) in kept.iter().enumerate() {
        let (name, rest) = line.split_once(": properties - {").unwrap();
        let (props, rest) = rest.split_once("} | states - {").unwrap();
        let states = rest.strip_suffix('}').unwrap();
        let split = |s: &str| s.split(", ").filter(|x| !x.is_empty()).map(str::to_string).collect::<Vec<_>>();
        nodes.push(NodeDoc {
            id: k as u32 + 1,
            name: name.to_string(),
            properties: split(props),
            states: split(states),
        });
    }
    nodes.push(NodeDoc { id: 999, name: "character".into(), properties: vec![], states: vec![] });
    let edges = (2..=kept.len() as u32)
        .map(|id| EdgeDoc { from: id, kind: "INSIDE".into(), to: 1 })
        .chain([EdgeDoc { from: 999, kind: "INSIDE".into(), to: 1 }])
        .collect();
    let env = load_environment(&EnvironmentDocument { nodes, edges }, &bundled::rules()).unwrap();
    let rendered = render_environment_info(&env, InfoLevel::Dynamic);
    let lines: Vec<&str> = rendered.lines().collect();
    assert_eq!(&lines[..kept.len()], &kept[..]);
    assert_eq!(lines[0], "bathroom: properties - {ROOM} | states - {}");
}

#[test]
fn desk_listing_levels() {
    let env = bundled::desk_environment();
    let dynamic = render_environment_info(&env, InfoLevel::Dynamic);
    assert_eq!(dynamic.lines().count(), env.object_count());
    assert!(dynamic.contains("facecream: properties - {GRABBABLE, POURABLE, CAN_OPEN, CREAM} | states - {CLOSED}"));
    let stat = render_environment_info(&env, InfoLevel::Static);
    for (d, s) in dynamic.lines().zip(stat.lines()) {
        assert_eq!(d.split(" | states - ").next().unwrap(), s);
    }
    let names = render_environment_info(&env, InfoLevel::Objects);
    assert!(names.lines().all(|l| !l.contains(' ')));
    assert_eq!(render_environment_info(&env, InfoLevel::None), "");
}
