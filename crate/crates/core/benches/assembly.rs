use std::f64::consts::PI;

use cornerflow::diagnostics::gradient_maps;
use cornerflow::discretization::{assemble, build_mesh, Problem};
use cornerflow::gas::{Closure, GasModel};
use cornerflow::geometry::{CornerDomain, StripGeometry};
use cornerflow::par::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn assembly(c: &mut Criterion) {
    let gas = GasModel::new(1.4, 0.8).unwrap();
    let geometry = StripGeometry::Corner(CornerDomain::wedge(1.5 * PI, 1.0).unwrap());
    let mut group = c.benchmark_group("assembly");
    for (n_ell, n_lam) in [(64, 32), (256, 64)] {
        let mesh = build_mesh(geometry.clone(), 0.0, 6.0, n_ell, n_lam, 2).unwrap();
        let psi: Vec<f64> = (0..mesh.n_nodes())
            .map(|k| {
                let p = mesh.node(k);
                0.3 * p.ell.exp() * (PI * p.lam).sin() / PI
            })
            .collect();
        let label = format!("{n_ell}x{n_lam}");
        for exec in [Execution::Sequential, Execution::Parallel] {
            let problem = Problem::new(&mesh, Closure::Cutoff(gas)).with_execution(exec);
            group.bench_with_input(BenchmarkId::new(format!("jacobian/{exec:?}"), &label), &psi, |b, psi| {
                b.iter(|| assemble(&problem, psi, true).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("gradient_maps/{exec:?}"), &label), &psi, |b, psi| {
                b.iter(|| gradient_maps(&mesh, psi, exec))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
