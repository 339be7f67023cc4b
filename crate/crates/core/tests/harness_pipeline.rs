use pccurve::embed::{PredictorSpec, Variant};
use pccurve::harness::{
    self, fit_and_plot, run_cell, run_sweep, CellData, CellSpec, ExperimentPlan, FitTarget,
    NetworkSize, ScalingPoint,
};
use pccurve::sim::{Mechanism, SimConfig};
use pccurve::GraphSpec;

fn quick(variant: Variant) -> PredictorSpec {
    let mut p = PredictorSpec::new(variant);
    p.epochs = 5;
    p
}

#[test]
fn identical_cascades_are_learned_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("same.txt");
    std::fs::write(&path, "a b c d e\n".repeat(20)).unwrap();
    let mut cdk = PredictorSpec::new(Variant::Cdk);
    cdk.learning_rate = 0.05;
    let cell = CellSpec {
        data: CellData::Empirical {
            path,
            length: 5,
            network_size: NetworkSize::PropagationSubgraph,
        },
        ..CellSpec::synthetic(
            GraphSpec::er(10, 2.0, 0),
            SimConfig::new(Mechanism::Ic, 1),
            vec![cdk],
        )
    };
    let pts = run_cell(&cell, 1).unwrap();
    assert_eq!(pts[0].apce, 0.0);
    assert_eq!(pts[0].map, 1.0);
    assert_eq!((pts[0].n, pts[0].l, pts[0].m), (5, 5, 20));
    assert_eq!(pts[0].topology, "empirical");
}

#[test]
fn empirical_cells_subsample_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    let mut text = String::from("x y\n");
    for i in 0..30 {
        text += &format!(
            "s{} n{} n{} n{} n{} n{}\n",
            i % 5,
            i,
            i + 1,
            i + 2,
            i + 3,
            i + 4
        );
    }
    std::fs::write(&path, text).unwrap();
    let base = CellSpec::synthetic(
        GraphSpec::er(10, 2.0, 0),
        SimConfig::new(Mechanism::Ic, 1),
        vec![quick(Variant::Cdk)],
    );
    let cell = |network_size| CellSpec {
        data: CellData::Empirical {
            path: path.clone(),
            length: 4,
            network_size,
        },
        m: 25,
        ..base.clone()
    };
    let sub = run_cell(&cell(NetworkSize::PropagationSubgraph), 3).unwrap();
    assert_eq!((sub[0].l, sub[0].m), (4, 25));
    assert!(sub[0].n <= 5 + 30 + 4);
    let whole = run_cell(&cell(NetworkSize::Whole), 3).unwrap();
    assert_eq!(whole[0].n, 2 + 5 + 34);
    assert_eq!(whole[0].map, sub[0].map);
}

#[test]
fn smap_is_exact_rescaling() {
    let cell = CellSpec::synthetic(
        GraphSpec::er(200, 6.0, 0),
        SimConfig::new(Mechanism::Ic, 15),
        vec![quick(Variant::Cdk)],
    );
    let p = &run_cell(&cell, 8).unwrap()[0];
    assert_eq!((p.n, p.l, p.m), (200, 15, 200));
    assert_eq!(p.smap, p.map * 200.0 / 15.0);
}

#[test]
fn grid_sweep_schema_and_order_invariance() {
    let mut cells = Vec::new();
    for n in [100, 200, 300] {
        for l in [10, n / 20, n / 10] {
            cells.push(
                CellSpec::synthetic(
                    GraphSpec::er(n, 6.0, 0),
                    SimConfig::new(Mechanism::Ic, l),
                    vec![quick(Variant::Cdk), quick(Variant::Random)],
                )
                .with_m(60)
                .with_seed((n * 1000 + l) as u64),
            );
        }
    }
    let plan = ExperimentPlan {
        seed: 1,
        cells: cells.clone(),
        strict: true,
        workers: Some(3),
    };
    let out = run_sweep(&plan).unwrap();
    assert_eq!(out.points.len(), 18);
    let csv = harness::format_points_csv(&out.points).unwrap();
    assert_eq!(csv.lines().next().unwrap(), harness::CSV_COLUMNS.join(","));

    cells.reverse();
    let reversed = run_sweep(&ExperimentPlan {
        cells,
        workers: Some(1),
        ..plan
    })
    .unwrap();
    assert_eq!(harness::format_points_csv(&reversed.points).unwrap(), csv);
}

fn on_curve(model: &str, y0: f64, a: f64, b: f64) -> Vec<ScalingPoint> {
    (0..15)
        .map(|i| {
            let apce = 0.05 + 0.06 * i as f64;
            let smap = y0 + a * (-b * apce).exp();
            ScalingPoint {
                topology: "er".into(),
                mechanism: "ic".into(),
                model: model.into(),
                n: 100,
                l: 10,
                m: 200,
                seed: i,
                apce,
                map: smap * 10.0 / 100.0,
                smap: smap * 10.0 / 100.0 * 100.0 / 10.0,
            }
        })
        .collect()
}

#[test]
fn fit_and_plot_recovers_generator() {
    let dir = tempfile::tempdir().unwrap();
    let mut pts = on_curve("cdk", 0.4, 3.0, 2.5);
    pts.extend(on_curve("pae", 0.2, 5.0, 4.0));
    let csv = dir.path().join("r.csv");
    harness::write_points_csv(&csv, &pts).unwrap();
    let out = fit_and_plot(&csv, FitTarget::Smap, dir.path().join("fig")).unwrap();
    assert_eq!(out.curves.len(), 2);
    for (c, (y0, a, b)) in out.curves.iter().zip([(0.4, 3.0, 2.5), (0.2, 5.0, 4.0)]) {
        assert!(
            (c.y0 - y0).abs() < 1e-6 && (c.a - a).abs() < 1e-6 && (c.b - b).abs() < 1e-6,
            "{c:?}"
        );
    }
    let svg = std::fs::read_to_string(&out.svg_path).unwrap();
    assert_eq!(svg.matches(r#"class="legend""#).count(), 2);
    assert!(svg.contains(pccurve::svg::color(0)) && svg.contains(pccurve::svg::color(1)));
    let json = std::fs::read_to_string(&out.curves_path).unwrap();
    assert_eq!(harness::parse_curves_json(&json).unwrap(), out.curves);
}

#[test]
fn groups_without_spread_are_skipped() {
    let mut pts = on_curve("cdk", 0.4, 3.0, 2.5);
    let mut flat = on_curve("iae", 1.0, 1.0, 1.0);
    flat.truncate(2);
    pts.extend(flat);
    let curves = harness::fit_groups(&pts, FitTarget::Smap).unwrap();
    assert_eq!(curves.len(), 1);
    assert_eq!(curves[0].model, "cdk");
}
