//! Resolved configurations survive both serialised forms exactly.

use nematic_cli::config::RunConfig;
use proptest::prelude::*;

fn text(nu: f64, lambda: f64, gamma: f64, len: f64, amp: f64, dt: Option<f64>, t_end: Option<f64>, box_: bool) -> String {
    let mut s = format!("[grid]\ncells = 8,10\nlength = {len:?}\n");
    if box_ {
        s += "boundary = box\n";
    }
    s += &format!("[physics]\nnu = {nu:?}\nlambda = {lambda:?}\ngamma = {gamma:?}\n");
    let kind = if box_ { "vacuum_bump\ncompatibility = warn" } else { "taylor_green" };
    s += &format!("[initial]\nkind = {kind}\namplitude = {amp:?}\n[run]\n");
    if let Some(dt) = dt {
        s += &format!("dt = {dt:?}\n");
    }
    match t_end {
        Some(t) => s += &format!("t_end = {t:?}\n"),
        None => s += "steps = 17\n",
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ini_and_json_forms_round_trip(
        nu in 1e-3f64..10.0,
        lambda in 1e-3f64..10.0,
        gamma in 1e-3f64..10.0,
        len in 0.1f64..10.0,
        amp in -2.0f64..2.0,
        dt in proptest::option::of(1e-6f64..1e-2),
        t_end in proptest::option::of(1e-3f64..5.0),
        box_ in any::<bool>(),
    ) {
        let c = RunConfig::parse(&text(nu, lambda, gamma, len, amp, dt, t_end, box_)).unwrap();
        prop_assert_eq!(c.physics.nu.to_bits(), nu.to_bits());
        prop_assert_eq!(&RunConfig::parse(&c.to_ini()).unwrap(), &c);
        let json = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(&RunConfig::parse(&json).unwrap(), &c);
    }
}
