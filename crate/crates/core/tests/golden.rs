//! Upgrades checked against files produced by an independent implementation
//! (`data/make_golden.py`).

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use macup::{parse_mac, upgrade, verify_upgrade};

const TOL: f64 = 1e-12;

fn data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn expected(name: &str) -> HashMap<String, Vec<f64>> {
    data(&format!("{name}.expected"))
        .lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let key = it.next()?.to_string();
            Some((key, it.map(|v| v.parse().unwrap()).collect()))
        })
        .collect()
}

fn check_case(name: &str) {
    let w = parse_mac(&data(&format!("{name}.in.mac"))).unwrap();
    let want = parse_mac(&data(&format!("{name}.out.mac"))).unwrap();
    let exp = expected(name);
    let mu = exp["mu"][0];

    let res = upgrade(&w, mu).unwrap();
    let got = &res.upgraded;
    assert_eq!(res.binning.len(), exp["bins"][0] as usize, "{name}: bins");
    assert_eq!(got.labels(), want.labels(), "{name}: labels");
    for y in 0..got.len() {
        for (x, (a, b)) in got.row(y).iter().zip(want.row(y)).enumerate() {
            assert!(
                (a - b).abs() <= TOL,
                "{name}: Q'({}|{x}) = {a}, want {b}",
                got.label(y)
            );
        }
    }
    for (a, b) in res.epsilons.iter().zip(&exp["epsilons"]) {
        assert!((a - b).abs() <= TOL, "{name}: epsilon {a} vs {b}");
    }
    assert!((w.sum_rate() - exp["rate_original"][0]).abs() <= 1e-12);
    assert!((got.sum_rate() - exp["rate_upgraded"][0]).abs() <= 1e-11);
    let report = verify_upgrade(&w, &res, mu).unwrap();
    assert!(report.pass, "{name}: {report:?}");
}

#[test]
fn binary_channel_at_mu_5() {
    check_case("binary_mu5");
}

#[test]
fn ternary_channel_at_mu_8() {
    check_case("ternary_mu8");
}

#[test]
fn two_user_binary_channel_at_mu_12() {
    check_case("two_user_mu12");
}
