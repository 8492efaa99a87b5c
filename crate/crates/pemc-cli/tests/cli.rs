use pemc_core::pfa::{pfa_energy_t0, pfa_geometric_correction};
use serde_json::Value;
use std::f64::consts::PI;
use std::process::{Command, Output};

fn pemc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pemc")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = pemc(&a);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn exit_codes() {
    let code = |a: &[&str]| pemc(a).status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["energy", "--bogus"]), 2);
    // angles beyond pi/2
    assert_eq!(code(&["energy", "--x", "1", "--u", "0", "--theta2", "2.5"]), 2);
    assert_eq!(code(&["energy", "--x", "1", "--u", "0", "--delta", "3", "--radians"]), 2);
    assert_eq!(code(&["energy", "--x", "1", "--u", "0.3"]), 2);
    assert_eq!(code(&["energy", "--x", "1", "--u", "0", "--gap", "1e-6"]), 2);
    assert_eq!(code(&["energy", "--x", "1", "--u", "0", "--temp", "300K"]), 2);
    assert_eq!(code(&["energy", "--x", "1", "--u", "0", "--temp", "warm"]), 2);
    assert_eq!(code(&["figure", "11"]), 2);
    // a fixed multipole cutoff that is far too small
    assert_eq!(code(&["energy", "--x", "1", "--u", "0", "--temp", "tau=1", "--lmax", "2"]), 3);
}

#[test]
fn energy_near_contact_follows_proximity_limit() {
    let x = 0.05;
    let v = json(&["energy", "--x", "0.05", "--u", "0", "--delta", "2", "--temp", "zero"]);
    let e = num(&v["rows"][0]["free_energy_hbar_c_over_l"]);
    let want = pfa_energy_t0(x, PI / 2.0).unwrap() + pfa_geometric_correction(x, 0.0, PI / 2.0).unwrap();
    assert!((e / want - 1.0).abs() < 0.01, "{e} vs {want}");
}

#[test]
fn kelvin_in_si_units() {
    let v = json(&["force", "--r1", "plane", "--r2", "20e-6", "--gap", "1.5e-6", "--delta", "0", "--temp", "300K", "--tol", "1e-4"]);
    let tau = num(&v["metadata"]["tau"]);
    assert!((tau - 1.2348).abs() < 1e-3, "{tau}");
    let row = &v["rows"][0];
    let f = num(&row["force_hbar_c_over_l2"]);
    let newton = num(&row["force_newton"]);
    assert!(f < 0.0);
    assert!((newton / (f * 3.1615e-26 / (1.5e-6f64).powi(2)) - 1.0).abs() < 1e-12);
}

#[test]
fn pfa_sum_rule_vanishes() {
    for t in ["zero", "tau=1", "inf"] {
        let v = json(&["sumrule", "--x", "0.001", "--u", "0", "--model", "pfa", "--temp", t]);
        let r = &v["rows"][0];
        let (i, peak) = (num(&r["integral"]), num(&r["peak_force"]));
        assert!(i.abs() < 1e-6 * peak, "{t}: {i} vs {peak}");
    }
}

#[test]
fn ratio_figure_reaches_its_limits() {
    let v = json(&["figure", "6", "--points", "2"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    let z3 = 1.202_056_903_159_594_2;
    let levels = [1.0, 2.0 / 3.0, 8.0 / 9.0, 0.75];
    for r in rows {
        let (ym1, ratio) = (num(&r["y_minus_one"]), num(&r["ratio"]));
        let k = (num(&r["delta"]) / (PI / 6.0)).round() as usize;
        if ym1 > 1.0 {
            assert!((ratio * z3 - 1.0).abs() < 1e-3, "{r}");
        } else {
            assert!((ratio / levels[k] - 1.0).abs() < 0.04, "{r}");
        }
    }
}

#[test]
fn critical_angle_figure_is_bounded() {
    let v = json(&["figure", "3", "--points", "3"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let d = num(&r["delta_crit"]);
        assert!(0.92 * PI / 4.0 < d && d < 0.962 * PI / 4.0, "{r}");
        // at finite temperature the free energy changes sign before the force
        let z = num(&r["delta_zero_energy"]);
        assert!(z <= d + 1e-12, "{r}");
        if r["tau"] == Value::from(0.0) || r["tau"] == Value::from("inf") {
            assert!((z - d).abs() < 1e-12, "{r}");
        }
    }
}

#[test]
fn csv_with_sidecar_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = pemc(&["critical-angle", "--x", "2", "--u", "0.25", "--temp", "inf", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
        (std::fs::read_to_string(&p).unwrap(), std::fs::read_to_string(dir.path().join(format!("{name}.json"))).unwrap())
    };
    let (a, ja) = run("a.csv");
    let (b, jb) = run("b.csv");
    // only the output path in the recorded command line differs
    assert_eq!(a.replace("a.csv", "b.csv"), b);
    assert_eq!(ja.replace("a.csv", "b.csv"), jb);
    assert!(a.lines().next().unwrap().starts_with("# "));
    let data: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "x,u,tau,delta_crit,delta_crit_quarter_pi");
    let cols: Vec<f64> = data[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((cols[4] - 1.05).abs() < 0.02, "{}", data[1]);
    let side: Value = serde_json::from_str(&ja).unwrap();
    assert_eq!(num(&side["rows"][0]["delta_crit"]), cols[3]);
}
