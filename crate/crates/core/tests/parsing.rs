use hillplan::action::{
    format_action, parse_action, parse_action_ref, parse_guide_line, ActionRef, GroundedAction, Verb,
};
use hillplan::bundled;
use hillplan::selector::{format_selection, parse_selection};
use serde::Deserialize;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Every verb over every tuple of desk objects, whether applicable or not.
#[test]
fn every_grounding_round_trips() {
    let env = bundled::desk_environment();
    let objs: Vec<(String, u32)> = env.objects().map(|o| (o.node.name.clone(), o.id().0)).collect();
    let mut n = 0usize;
    let mut check = |a: GroundedAction| {
        let text = format_action(&a, true);
        assert_eq!(parse_action(&text).unwrap(), a, "{text}");
        assert_eq!(a.to_string(), text);
        let bare = format_action(&a, false);
        assert_eq!(parse_action_ref(&bare).unwrap(), parse_action_ref(&text).unwrap());
        n += 1;
    };
    for &verb in Verb::ALL {
        match verb.arity() {
            0 => check(GroundedAction::new(verb, &[])),
            1 => objs.iter().for_each(|(m, i)| check(GroundedAction::new(verb, &[(m, *i)]))),
            2 => {
                for (m, i) in &objs {
                    for (k, j) in &objs {
                        check(GroundedAction::new(verb, &[(m, *i), (k, *j)]));
                    }
                }
            }
            a => panic!("unexpected arity {a}"),
        }
    }
    assert!(n > objs.len() * objs.len());
}

#[test]
fn parse_action_rejects_malformed_text() {
    for bad in
        ["", "WALK<tv>(1)", "[WALK]<tv>", "[WALK]<tv>(x)", "[FLY]<tv>(1)", "[WALK]<tv>(1)<sofa>(2)", "[PUTIN]<a>(1)"]
    {
        assert!(parse_action(bad).is_err(), "{bad}");
    }
}

#[test]
fn coffeetable_guide_rows_parse() {
    let expected = vec![
        ActionRef::new(Verb::Walk, &["kitchen"]),
        ActionRef::new(Verb::Grab, &["coffeepot"]),
        ActionRef::new(Verb::Walk, &["livingroom"]),
        ActionRef::new(Verb::PlaceOn, &["coffeepot", "coffeetable"]),
        ActionRef::new(Verb::Walk, &["kitchen"]),
        ActionRef::new(Verb::Grab, &["cupcake"]),
        ActionRef::new(Verb::Walk, &["livingroom"]),
        ActionRef::new(Verb::PlaceOn, &["cupcake", "coffeetable"]),
    ];
    for file in ["coffeetable_guide_low_level.txt", "coffeetable_guide_low_level_numbered.txt"] {
        let parsed: Vec<ActionRef> = fixture(file).lines().map(|l| parse_guide_line(l).unwrap()).collect();
        assert_eq!(parsed, expected, "{file}");
        for (a, line) in parsed.iter().zip(fixture("coffeetable_guide_low_level.txt").lines()) {
            assert_eq!(a.to_guide_line(), line);
        }
    }
}

#[test]
fn high_level_rows_are_not_guide_lines() {
    for l in fixture("coffeetable_guide_high_level.txt").lines() {
        assert!(parse_guide_line(l).is_err(), "{l}");
    }
}

#[derive(Deserialize)]
struct Case {
    raw: String,
    index: Option<usize>,
    action: Option<String>,
}

#[test]
fn selection_corpus() {
    let cases: Vec<Case> = serde_json::from_str(&fixture("selection_corpus.json")).unwrap();
    assert_eq!(cases.len(), 50);
    let mut negatives = 0;
    for (k, c) in cases.iter().enumerate() {
        let got = parse_selection(&c.raw).parsed;
        match (c.index, &c.action) {
            (Some(i), Some(a)) => {
                let want = parse_action_ref(a).unwrap();
                assert_eq!(got, Some((i, want)), "case {k}: {:?}", c.raw);
            }
            _ => {
                negatives += 1;
                assert_eq!(got, None, "case {k}: {:?}", c.raw);
            }
        }
    }
    assert_eq!(negatives, 10);
}

#[test]
fn canonical_selection_round_trips() {
    let a = ActionRef::new(Verb::PutIn, &["salmon", "microwave"]);
    let text = format_selection(17, &a);
    assert_eq!(text, "{17 [PUTIN]<salmon><microwave>}");
    assert_eq!(parse_selection(&text).parsed, Some((17, a)));
}
