use modscat::config::{FieldMode, Scenario};
use modscat::ErrorKind;

const BASE: &str = r#"
name = "t"
k = 1.0

[[species]]
label = "e"
mass = 1.0
charge = -1.0
count = 10
x_radius = 0.5
v_radius = 0.5

[field]
mode = "zero"

[integrator]
t_final = 1e6

[extraction]
times = [1e3, 1e6]
velocity_n = 8
velocity_half_width = 1.5
"#;

fn messages(text: &str) -> Vec<String> {
    let e = Scenario::from_toml(text).unwrap_err();
    assert_eq!(e.kind, ErrorKind::Validation);
    assert_eq!(e.exit_code(), 2);
    e.messages
}

#[test]
fn base_scenario_is_valid() {
    let s = Scenario::from_toml(BASE).unwrap();
    assert_eq!(s.field.mode, FieldMode::Zero);
    assert_eq!(s.extraction.fit_window, [1e3, 1e6]);
    let again = Scenario::from_toml(&s.to_toml()).unwrap();
    assert_eq!(again, s);
}

#[test]
fn negative_mass_names_the_field() {
    let m = messages(&BASE.replace("mass = 1.0", "mass = -1.0"));
    assert!(m.iter().any(|s| s.starts_with("species[0].mass")), "{m:?}");
}

#[test]
fn every_violation_is_listed() {
    let text = BASE.replace("mass = 1.0", "mass = 0.0").replace("k = 1.0", "k = -1.0").replace("times = [1e3, 1e6]", "times = [1e6, 1e3]");
    let m = messages(&text);
    for key in ["k:", "species[0].mass", "extraction.times"] {
        assert!(m.iter().any(|s| s.starts_with(key)), "{key} missing from {m:?}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let m = messages(&BASE.replace("[field]\n", "[field]\ncolour = 3\n"));
    assert!(m[0].contains("colour"), "{m:?}");
}

#[test]
fn support_must_fit_inside_k() {
    let m = messages(&BASE.replace("x_radius = 0.5", "x_radius = 1.5"));
    assert!(m.iter().any(|s| s.contains("position support")), "{m:?}");
}

#[test]
fn self_consistent_needs_grid_and_neutrality() {
    let text = BASE.replace("mode = \"zero\"", "mode = \"self-consistent\"");
    let m = messages(&text);
    assert!(m.iter().any(|s| s.starts_with("grid:")), "{m:?}");
    assert!(m.iter().any(|s| s.contains("total_weight")), "{m:?}");
}

#[test]
fn shipped_scenarios_validate() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        let r = Scenario::load(&p);
        if name.starts_with("malformed") {
            assert!(r.is_err(), "{name}");
        } else {
            r.unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        seen += 1;
    }
    assert!(seen >= 5);
}
