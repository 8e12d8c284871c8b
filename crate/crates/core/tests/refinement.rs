use cornerflow::config::{ExperimentConfig, SweepKey};
use cornerflow::experiment::{run, RunStatus};

fn wedge(gas: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
[domain]
kind = "wedge"
theta = 4.71238898038469
r_min = 1.0
[gas]
{gas}
[mesh]
ell_min = 0.0
ell_max = 4.0
n_ell = 32
n_lam = 16
[bcs]
inner = "dirichlet"
outer = "natural"
profile = {{ kind = "uniform_flux", m_inf = 0.4 }}
"#
    ))
    .unwrap()
}

const AIR: &str = "mode = \"compressible\"\ngamma = 1.4\nmach_cap = 0.8";

#[test]
fn dirichlet_energy_is_mesh_stable() {
    let cfg = wedge(AIR);
    let mut totals = Vec::new();
    for f in [1.0, 2.0, 4.0] {
        let o = run(&cfg.with_sweep_value(SweepKey::Mesh, f).unwrap()).unwrap();
        assert_eq!(o.status, RunStatus::Certified);
        totals.push(o.diagnostics.total_dirichlet);
    }
    let (mid, fine) = (totals[1], totals[2]);
    assert!((mid - fine).abs() <= 0.02 * fine, "{totals:?}");
}

#[test]
fn wall_trace_vanishes_on_curved_walls() {
    let cfg = ExperimentConfig::from_toml(
        r#"
[domain]
kind = "example"
[gas]
mode = "incompressible"
[mesh]
ell_min = 0.6931471805599453
ell_max = 5.0
n_ell = 32
n_lam = 16
[bcs]
profile = { kind = "exact", reference = { field = "example" } }
"#,
    )
    .unwrap();
    for f in [1.0, 2.0] {
        let o = run(&cfg.with_sweep_value(SweepKey::Mesh, f).unwrap()).unwrap();
        let vx = o.field.column("vx").unwrap();
        let vy = o.field.column("vy").unwrap();
        let scale = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
        assert!(o.diagnostics.wall_trace <= 1e-12 * scale, "{} vs {scale}", o.diagnostics.wall_trace);
    }
}

#[test]
fn far_field_velocity_vanishes_in_the_corner() {
    for gas in [AIR, "mode = \"incompressible\""] {
        let cfg = wedge(gas).with_sweep_value(SweepKey::L, 8.0).unwrap();
        let o = run(&cfg).unwrap();
        assert!(o.diagnostics.farfield_vanishes, "{gas}");
        let ff = o.diagnostics.farfield.as_ref().unwrap();
        let speeds: Vec<f64> = ff.bands.iter().map(|b| b.max_speed).collect();
        assert!(speeds.windows(2).skip(1).all(|w| w[1] < w[0]), "{speeds:?}");
    }
}

#[test]
fn compressible_flow_is_faster_than_incompressible() {
    let air = run(&wedge(AIR)).unwrap();
    let inc = run(&wedge("mode = \"incompressible\"")).unwrap();
    let peak = |o: &cornerflow::experiment::RunOutcome| o.field.column("mach").unwrap().iter().cloned().fold(0.0, f64::max);
    assert!(peak(&air) > 0.0);
    let vmax = |o: &cornerflow::experiment::RunOutcome| {
        let vx = o.field.column("vx").unwrap();
        let vy = o.field.column("vy").unwrap();
        vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    };
    // same mass flux, lower density
    assert!(vmax(&air) > vmax(&inc));
}
