use pitransfer::scenario::Scenario;
use proptest::prelude::*;

#[allow(clippy::too_many_arguments)]
fn text(e_b: f64, e_p: f64, mu_ab: f64, mu_bp: f64, f0: f64, n_half: u32, mode: &str, duration: Option<f64>) -> String {
    let dur = duration.map(|d| format!("duration = {d}\n")).unwrap_or_default();
    format!(
        "[levels]\na = 0\nb = {e_b}\np = {e_p}\n\n[couplings]\na b = {mu_ab}\nb p = {mu_bp}\n\n\
         [target]\nalpha = a\nbeta = b\ninitial = a\n\n[perturbers]\np = b\n\n\
         [drive]\namplitude = {f0}\nenvelope = sin2\nn_half = {n_half}\nmode = {mode}\n{dur}"
    )
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(
        e_b in 0.001f64..0.1,
        gap in 0.001f64..0.1,
        mu_ab in 0.01f64..1.0,
        mu_bp in -1.0f64..-0.01,
        f0 in 1e-6f64..1e-2,
        n_half in 1u32..20,
        manual in proptest::option::of(1.0e3f64..1.0e7),
    ) {
        let mode = if manual.is_some() { "manual" } else { "optimized" };
        let s = Scenario::parse(&text(e_b, e_b + gap, mu_ab, mu_bp, f0, n_half, mode, manual)).unwrap();
        let again = Scenario::parse(&s.serialize()).unwrap();
        prop_assert_eq!(&s, &again);
        prop_assert_eq!(s.serialize(), again.serialize());
    }
}

#[test]
fn bundled_scenarios_round_trip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let s = Scenario::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(Scenario::parse(&s.serialize()).unwrap(), s, "{}", path.display());
    }
}
