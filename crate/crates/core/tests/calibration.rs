mod support;

use intent_core::gridworld::Color;
use intent_core::inference::random_satisfaction;
use intent_core::rng::stream;
use intent_core::{parse_formula, GridWorld};
use support::exact_visit_probability;

fn tiny() -> GridWorld {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../worlds/tiny-3x3.txt")).unwrap();
    GridWorld::parse(&text).unwrap().with_slip(0.1).unwrap()
}

#[test]
fn once_yellow_matches_enumeration() {
    let w = tiny();
    let exact = exact_visit_probability(&w, Color::Yellow, 6);
    let phi = parse_formula("O yellow").unwrap();
    let est = random_satisfaction(&phi, &w, &[6], 50_000, &mut stream(11, "rollouts")).unwrap();
    assert!((est - exact).abs() <= 0.01, "estimate {est} exact {exact}");
}

#[test]
fn calibration_holds_without_slip_and_for_other_colors() {
    let w = tiny().with_slip(0.0).unwrap();
    for (color, name) in [(Color::Yellow, "yellow"), (Color::Red, "red"), (Color::Brown, "brown")] {
        let exact = exact_visit_probability(&w, color, 5);
        let phi = parse_formula(&format!("O {name}")).unwrap();
        let est = random_satisfaction(&phi, &w, &[5], 50_000, &mut stream(12, name)).unwrap();
        assert!((est - exact).abs() <= 0.01, "{name}: estimate {est} exact {exact}");
    }
}

#[test]
fn start_color_is_always_visited() {
    let w = tiny();
    assert_eq!(exact_visit_probability(&w, Color::White, 1), 1.0);
    assert_eq!(exact_visit_probability(&w, Color::Yellow, 1), 0.0);
}
