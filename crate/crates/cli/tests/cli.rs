use std::path::Path;
use std::process::Command;

use nalgebra::Matrix6;
use ris_crb::{Fim, ModelVariant, Vec3};
use ris_crb_cli::output::{emit_csv, emit_plot_script, read_csv, SweepAxis, CSV_HEADER};
use ris_crb_cli::scenario::PhaseSource;
use ris_crb_cli::sweep::{evaluate_with, scenario_fim};
use ris_crb_cli::{
    load_scenario, parse_scenario, run_single, run_single_with, sweep_bandwidth, sweep_ris_size, CliError,
    Conditioning, ResultRow, Scenario, SweepResult,
};

const SMALL: &str = r#"
name = "small"
variant = "nf-wb"

[signal]
f0 = "78.5G"
bandwidth = "1G"
tx_power_dbm = 23
noise_psd_dbm_hz = -173

[terminal]
tx = [[0, 0, 0]]

[terminal.rx_grid]
center = [0, 0, 0]
axis_u = [0, 1, 0]
axis_v = [0, 0, 1]
rows = 3
cols = 3
spacing = "half-wavelength"

[pose]
position = [5, 0, -5.5]
orientation = [0.1, 0.2, -0.3]

[lattice]
n = 6
m = 6
spacing = "half-wavelength"

[quadrature]
nodes = 33

[sweep]
bandwidths = ["1G", "2G", "3G"]
sides = [0.008, 0.012]
"#;

fn small() -> Scenario {
    parse_scenario(SMALL, "small.toml", Path::new(".")).unwrap()
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn expect_validation(text: &str, key: &str, line: usize) {
    match parse_scenario(text, "s.toml", Path::new(".")) {
        Err(CliError::Validation { key: k, line: l, .. }) => {
            assert_eq!(k, key);
            assert_eq!(l, line, "line for {key}");
        }
        other => panic!("expected validation error on {key}, got {other:?}"),
    }
}

fn line_of(text: &str, needle: &str) -> usize {
    text.lines().position(|l| l.contains(needle)).unwrap() + 1
}

#[test]
fn bundled_fig2a_matches_the_paper_setup() {
    let s = load_scenario(Path::new("paper_fig2a")).unwrap();
    assert_eq!(s.signal.f0, 78.5e9);
    assert_eq!(s.sweep.bandwidths, (1..=10).map(|k| k as f64 * 1e9).collect::<Vec<_>>());
    assert_eq!(s.pose.position, Vec3::new(5.0, 0.0, -5.5));
    assert_eq!(s.terminal.num_channels(), 400);
    assert_eq!((s.lattice.n_count, s.lattice.m_count), (52, 52));
    assert!((s.signal.tx_power - 0.19952623149688797).abs() < 1e-15);
    let d = s.signal.wavelength() / 2.0;
    let rx = s.terminal.rx_positions();
    assert!((rx[0] - Vec3::new(0.0, -10.0 * d, -10.0 * d)).norm() < 1e-15);
    let fig3 = load_scenario(Path::new("paper_fig3.toml")).unwrap();
    assert_eq!(fig3.sweep.sides.len(), 7);
    assert_eq!(fig3.conditioning, Conditioning::KnownPosition);
}

#[test]
fn omitted_integration_time_defaults_to_a_millisecond() {
    assert_eq!(small().signal.integration_time, 1e-3);
    assert_eq!(small().phase_mode, PhaseSource::NearField);
    assert_eq!(small().conditioning, Conditioning::Full);
}

#[test]
fn odd_lattice_count_names_key_and_line() {
    let text = SMALL.replace("n = 6", "n = 7");
    expect_validation(&text, "lattice.n", line_of(&text, "n = 7"));
}

#[test]
fn out_of_range_values_are_rejected_with_lines() {
    let text = SMALL.replace("bandwidth = \"1G\"", "bandwidth = \"200G\"");
    expect_validation(&text, "signal.bandwidth", line_of(&text, "200G"));
    let text = SMALL.replace("rows = 3", "rows = 0");
    expect_validation(&text, "terminal.rx_grid.rows", line_of(&text, "rows = 0"));
    let text = SMALL.replace("f0 = \"78.5G\"", "f0 = \"fast\"");
    expect_validation(&text, "signal.f0", line_of(&text, "fast"));
    let text = SMALL.replace("variant = \"nf-wb\"", "variant = \"nf\"");
    expect_validation(&text, "variant", line_of(&text, "variant"));
    let text = SMALL.replace("sides = [0.008, 0.012]", "sides = [0.001]");
    expect_validation(&text, "sweep.sides", line_of(&text, "sides"));
    let text = SMALL.replace("position = [5, 0, -5.5]", "position = [0, 0, 0]");
    expect_validation(&text, "pose.position", line_of(&text, "position"));
}

#[test]
fn malformed_and_unknown_keys_are_parse_errors() {
    let text = SMALL.replace("[pose]", "[pose]\ncolour = 1");
    assert!(matches!(parse_scenario(&text, "s", Path::new(".")), Err(CliError::Parse { .. })));
    assert!(matches!(parse_scenario("signal = [", "s", Path::new(".")), Err(CliError::Parse { .. })));
}

#[test]
fn external_phase_file_is_resolved_next_to_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("variant = \"nf-wb\"", "variant = \"nf-wb\"\nphase_mode = { external = \"phases.txt\" }");
    let path = write_scenario(dir.path(), "s.toml", &text);
    let err = load_scenario(&path).unwrap_err();
    assert!(matches!(err, CliError::Validation { ref key, .. } if key == "phase_mode.external"), "{err}");
    assert_eq!(err.exit_code(), 2);

    let zeros = vec!["0"; 36].join("\n");
    std::fs::write(dir.path().join("phases.txt"), zeros).unwrap();
    let s = load_scenario(&path).unwrap();
    let p = s.phases().unwrap();
    assert!(p.phases().iter().all(|x| *x == 0.0));
}

#[test]
fn injected_scaled_identity_gives_reciprocal_root() {
    let k = 9.0;
    for c in Conditioning::ALL {
        let mut s = small();
        s.conditioning = c;
        let r = run_single_with(&s, |_| Ok(Fim::from_matrix(Matrix6::identity() * k)));
        assert!(r.failures.is_empty());
        let row = &r.rows[0];
        for v in row.peb.iter().chain(row.oeb.iter().flatten()) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}

#[test]
fn known_orientation_never_exceeds_full_pose() {
    let s = small();
    let r = evaluate_with(1e9, &[ModelVariant::NF_WB, ModelVariant::NF_NB], &Conditioning::ALL, |v| {
        scenario_fim(&s, v)
    });
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    for pair in r.rows.chunks(3) {
        assert!(pair[1].peb.unwrap() <= pair[0].peb.unwrap());
        for k in 0..3 {
            assert!(pair[2].oeb[k].unwrap() <= pair[0].oeb[k].unwrap());
        }
    }
}

#[test]
fn sweep_rows_replay_as_single_runs() {
    let s = small();
    let variants = ModelVariant::ALL;
    let sweep = sweep_bandwidth(&s, &s.sweep.bandwidths, &variants, &Conditioning::ALL).unwrap();
    assert_eq!(sweep.rows.len(), 3 * 4 * 3);
    let mut i = 0;
    for &b in &s.sweep.bandwidths {
        for v in variants {
            for c in Conditioning::ALL {
                let mut one = s.with_bandwidth(b).unwrap();
                one.variant = v;
                one.conditioning = c;
                let replay = run_single(&one);
                assert_eq!(replay.rows[0], sweep.rows[i], "row {i}");
                i += 1;
            }
        }
    }
}

#[test]
fn ris_size_sweep_recomputes_the_lattice() {
    let s = small();
    let r = sweep_ris_size(&s, &s.sweep.sides, 2e9, &[ModelVariant::NF_NB], &[Conditioning::Full]).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.rows[0].sweep_value, 0.008);
    assert_eq!(s.with_side(0.008).unwrap().lattice.n_count, 4);
    assert_eq!(s.with_side(0.012).unwrap().lattice.n_count, 6);
    let single = run_single(&{
        let mut one = s.with_bandwidth(2e9).unwrap().with_side(0.012).unwrap();
        one.variant = ModelVariant::NF_NB;
        one
    });
    assert_eq!(single.rows[0].peb, r.rows[1].peb);
}

fn sample_rows() -> SweepResult {
    let row = |v: f64, variant, conditioning, peb| ResultRow {
        sweep_value: v,
        variant,
        conditioning,
        peb,
        oeb: [Some(1.0 / 3.0), None, Some(std::f64::consts::PI * 1e-7)],
        fim_cond: Some(123456.789012345),
    };
    SweepResult {
        rows: vec![
            row(1e9, ModelVariant::NF_WB, Conditioning::Full, Some(5.296123456789e-6)),
            row(2.5e9, ModelVariant::FF_NB, Conditioning::KnownOrientation, None),
            row(0.1, ModelVariant::NF_NB, Conditioning::KnownPosition, Some(1.0 / 7.0)),
        ],
        failures: vec![],
    }
}

#[test]
fn empty_result_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    emit_csv(&SweepResult::default(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "sweep_value,wavefront,band,conditioning,peb_m,oeb_x_rad,oeb_y_rad,oeb_z_rad,fim_cond\n");
    assert_eq!(text.trim_end().split(',').collect::<Vec<_>>(), CSV_HEADER);
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let result = sample_rows();
    emit_csv(&result, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in back.iter().zip(&result.rows) {
        assert_eq!((a.variant, a.conditioning), (b.variant, b.conditioning));
        let close = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-12 * y.abs(),
            (None, None) => true,
            _ => false,
        };
        assert!(close(Some(a.sweep_value), Some(b.sweep_value)));
        assert!(close(a.peb, b.peb));
        assert!(close(a.fim_cond, b.fim_cond));
        for k in 0..3 {
            assert!(close(a.oeb[k], b.oeb[k]));
        }
    }
}

#[test]
fn plot_script_refers_to_the_csv_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig.csv");
    let gp = dir.path().join("fig.gp");
    emit_plot_script(&sample_rows(), &csv, &gp, SweepAxis::Bandwidth).unwrap();
    let script = std::fs::read_to_string(&gp).unwrap();
    assert!(script.contains("'fig.csv'"));
    assert!(!script.contains(&dir.path().display().to_string()));
    assert!(script.contains("set datafile separator ','"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let err = emit_csv(&sample_rows(), Path::new("/nonexistent/dir/x.csv")).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert_eq!(err.exit_code(), 1);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-crb"))
}

#[test]
fn binary_single_writes_one_row_per_setting() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "s.toml", SMALL);
    let out = binary()
        .args(["single", "--scenario"])
        .arg(&path)
        .args(["--conditioning", "all", "--workers", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1e9,nf,wb,full,"));
    assert!(lines[2].starts_with("1e9,nf,wb,known-orientation,"));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let odd = write_scenario(dir.path(), "odd.toml", &SMALL.replace("m = 6", "m = 5"));
    let out = binary().args(["single", "--scenario"]).arg(&odd).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lattice.m"), "{err}");

    // Far-field models cannot resolve orientation with a known position.
    let ok = write_scenario(dir.path(), "s.toml", SMALL);
    let out = binary()
        .args(["single", "--variants", "ff-nb", "--conditioning", "known-position", "--scenario"])
        .arg(&ok)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular"));

    let out = binary().args(["single", "--variants", "xx", "--scenario"]).arg(&ok).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_ris_size_sweep_writes_one_csv_per_bandwidth() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "s.toml", SMALL);
    let out_csv = dir.path().join("size.csv");
    let out = binary()
        .args(["sweep-ris-size", "--variants", "nf-nb", "--conditioning", "known-position", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(&out_csv)
        .arg("--plot")
        .arg(dir.path().join("size.gp"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for b in [1, 2, 3] {
        let rows = read_csv(&dir.path().join(format!("size_b{b}ghz.csv"))).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(dir.path().join(format!("size_b{b}ghz.gp")).is_file());
    }
}
