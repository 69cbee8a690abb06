//! End-to-end file-format checks through real files on disk: write, read
//! back, compare bitwise, and re-write byte-identically.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read as _, Write as _};

use rpde_core::controlled::ControlledNormBreakdown;
use rpde_core::fbm::fbm_lift;
use rpde_core::io::{
    format_float, read_field, read_rough_path, write_amplitude_csv, write_constants_json,
    write_field, write_norm_breakdown, write_rates_csv, write_rough_path, write_solution_csv,
    write_windows_csv,
};
use rpde_core::solver::{global_solve, mild_residual, SolverConfig, WindowPolicy};
use rpde_core::spectral::{SpaceScale, SpectralField};
use rpde_core::Coefficients;

#[test]
fn rough_path_disk_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("driver.csv");
    let lift = fbm_lift(0.42, 128, 2.0, 7, None).unwrap();
    let mut meta = BTreeMap::new();
    meta.insert("generator".into(), lift.generator.to_string());
    meta.insert("h".into(), format_float(0.42));
    meta.insert("n".into(), "128".into());
    meta.insert("seed".into(), "7".into());

    let mut f = File::create(&path).unwrap();
    write_rough_path(&mut f, &lift.path, &meta).unwrap();
    drop(f);

    let (back, meta_back) = read_rough_path(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back.x(), lift.path.x());
    assert_eq!(back.x2_step(), lift.path.x2_step());
    assert_eq!(
        back.grid().t(back.grid().len() - 1),
        lift.path.grid().t(lift.path.grid().len() - 1)
    );
    assert_eq!(meta_back.get("generator").unwrap(), "fgn-circulant-v1");

    let path2 = dir.path().join("driver2.csv");
    let mut f2 = File::create(&path2).unwrap();
    write_rough_path(&mut f2, &back, &meta_back).unwrap();
    drop(f2);

    let mut a = Vec::new();
    File::open(&path).unwrap().read_to_end(&mut a).unwrap();
    let mut b = Vec::new();
    File::open(&path2).unwrap().read_to_end(&mut b).unwrap();
    assert_eq!(a, b, "re-written file must be byte-identical");
    assert!(!a.contains(&b'\r'));
}

#[test]
fn field_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    let f = SpectralField::from_function(2, 3, |x| {
        0.5 + x[0].cos() + 0.25 * (x[0] + 2.0 * x[1]).sin()
    })
    .unwrap();
    let mut fh = File::create(&path).unwrap();
    write_field(&mut fh, &f).unwrap();
    drop(fh);
    let back = read_field(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back, f);
}

#[test]
fn malformed_inputs_are_rejected_with_context() {
    let err = read_rough_path(&b"# alpha=4e-1\nt,x,x2_step\n0,zero,\n"[..]).unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("line 3"),
        "message should locate the bad line: {msg}"
    );

    let err = read_field(&b"dim,cutoff\n1,2\nk_1,re,im\n0,1.0\n"[..]).unwrap_err();
    assert!(err.to_string().contains("expected 3 fields"));
}

#[test]
fn solution_outputs_have_documented_headers() {
    // Small end-to-end solve, then every per-run artifact.
    let x = fbm_lift(0.45, 32, 0.5, 3, Some(0.42)).unwrap().path;
    let scale = SpaceScale::new(1, 4, 1.0).unwrap();
    let y0 = SpectralField::from_function(1, 4, |p| 0.8 + 0.3 * p[0].cos()).unwrap();
    let coeffs = Coefficients::linear_diffusion(0.4, 0.1).unwrap();
    let cfg = SolverConfig {
        gamma: 0.9,
        alpha: 0.42,
        sigma: 0.1,
        delta: 0.0,
        picard_tol: 1e-8,
        max_iters: 60,
        depth: 3,
        window: WindowPolicy::Auto,
        blowup_factor: 1e6,
    };
    let rec = global_solve(&y0, &coeffs, &x, &scale, &cfg).unwrap();
    let residuals = mild_residual(&rec.path, &coeffs, &x, &scale, Some(3)).unwrap();

    let mut sol = Vec::new();
    write_solution_csv(&mut sol, &rec, &residuals).unwrap();
    let text = String::from_utf8(sol).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,norm_gamma,norm_gamma_minus_alpha,residual"
    );
    assert_eq!(text.lines().count(), 1 + 33);
    for line in text.lines().skip(1) {
        for fieldv in line.split(',') {
            let v: f64 = fieldv.parse().unwrap();
            assert!(v.is_finite());
        }
    }

    let mut wins = Vec::new();
    write_windows_csv(&mut wins, &rec.windows).unwrap();
    let wtext = String::from_utf8(wins).unwrap();
    assert!(wtext.starts_with("start,end,iters,contraction,controlled_norm\n"));
    assert_eq!(wtext.lines().count(), 1 + rec.windows.len());

    let mut cj = Vec::new();
    write_constants_json(&mut cj, &rec.constants).unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(&cj).unwrap();
    for key in [
        "c",
        "c_composition",
        "rho_alpha",
        "eta",
        "m1",
        "m2",
        "apriori_ok",
    ] {
        assert!(parsed.get(key).is_some(), "constants.json must carry {key}");
    }

    let mut norms = Vec::new();
    write_norm_breakdown(
        &mut norms,
        &ControlledNormBreakdown::new(1.0, 2.0, 3.0, 4.0, 5.0),
    )
    .unwrap();
    let ntext = String::from_utf8(norms).unwrap();
    assert!(ntext.starts_with("sup_y,sup_yp,hol_yp,hol_R,hol2_R,total\n"));
    let total: f64 = ntext
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(total, 15.0);
}

#[test]
fn float_format_survives_a_file_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("floats.csv");
    let values = [1.0 / 3.0, 2.0_f64.sqrt(), -1e-17, 3.5e300];
    let mut f = File::create(&path).unwrap();
    let rows: Vec<(f64, f64)> = values.iter().map(|&v| (v, v * 2.0)).collect();
    write_amplitude_csv(&mut f, &rows).unwrap();
    drop(f);
    let mut text = String::new();
    File::open(&path)
        .unwrap()
        .read_to_string(&mut text)
        .unwrap();
    for (line, &v) in text.lines().skip(1).zip(&values) {
        let first = line.split(',').next().unwrap();
        let back: f64 = first.parse().unwrap();
        assert_eq!(back.to_bits(), v.to_bits());
    }

    let probe = rpde_core::calculus::SewingProbe {
        windows: vec![(0.5, 0.25), (0.25, 0.05)],
        fitted_rate: 2.32,
        error_full: 0.25,
    };
    let mut buf = Vec::new();
    write_rates_csv(&mut buf, &[(0.0, probe.clone()), (0.4, probe)]).unwrap();
    let rtext = String::from_utf8(buf).unwrap();
    assert_eq!(rtext.lines().count(), 5);
    assert!(rtext.starts_with("window,beta,error,fitted_rate\n"));
}
