mod common;

use co2_analysis::panel::{
    correlation_matrix, impute_missing, read_panel, standardize_series, MissingPolicy, PanelDataset, PanelError, VariableRole, VariableSpec,
};
use common::*;
use proptest::prelude::*;

fn specs() -> Vec<VariableSpec> {
    vec![
        VariableSpec::new("y", "EN.GHG", VariableRole::Dependent),
        VariableSpec::new("a", "EG.USE", VariableRole::CandidatePredictor),
        VariableSpec::new("b", "NY.GDP", VariableRole::Passthrough),
    ]
}

fn same_cells(a: &PanelDataset, b: &PanelDataset) -> bool {
    let (ne, nt, nv) = a.shape();
    a.shape() == b.shape()
        && a.entities() == b.entities()
        && a.periods() == b.periods()
        && (0..ne).all(|e| {
            (0..nt).all(|t| {
                (0..nv).all(|v| {
                    let (x, y) = (a.value(e, t, v), b.value(e, t, v));
                    x == y || (x.is_nan() && y.is_nan())
                })
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn long_csv_round_trips(
        seed in 0u64..10_000,
        ne in 1usize..6,
        nt in 2usize..8,
        gaps in prop::collection::vec((0usize..6, 1usize..7, 0usize..3), 0..6),
    ) {
        use rand::Rng;
        let mut r = rng(seed);
        let mut panel = panel_from(ne, nt, 2, |_, _| (r.random_range(-1e6..1e6), vec![gauss(&mut r), r.random_range(0.0..1e-3)]));
        // Interior gaps only; edge gaps would shrink the common period range.
        let gap_cells: Vec<(usize, usize, usize)> = gaps.into_iter().filter(|&(e, t, _)| e < ne && t + 1 < nt).collect();
        if !gap_cells.is_empty() {
            let (ne, nt, nv) = panel.shape();
            let mut values = Vec::with_capacity(ne * nt * nv);
            for e in 0..ne {
                for t in 0..nt {
                    for v in 0..nv {
                        values.push(if gap_cells.contains(&(e, t, v)) { f64::NAN } else { panel.value(e, t, v) });
                    }
                }
            }
            panel = PanelDataset::new(
                panel.entities().to_vec(),
                panel.periods().to_vec(),
                panel.variables().to_vec(),
                panel.roles().to_vec(),
                values,
            ).unwrap();
        }
        let mut buf = Vec::new();
        panel.write_long_csv(&mut buf).unwrap();
        let back = read_panel(buf.as_slice(), &panel.identity_specs(), "entity", "period").unwrap();
        prop_assert!(same_cells(&panel, &back));
        prop_assert_eq!(back.roles(), panel.roles());
    }

    #[test]
    fn interpolation_fills_every_gap_and_keeps_observations(
        values in prop::collection::vec(prop::option::weighted(0.7, -50.0f64..50.0), 3..20),
    ) {
        prop_assume!(values.iter().any(Option::is_some));
        let n = values.len();
        let raw: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let mut it = raw.iter().copied();
        let panel = panel_from(1, n, 0, |_, _| (it.next().unwrap(), vec![]));
        for policy in [MissingPolicy::LinearInterpolate, MissingPolicy::ForwardFill] {
            let filled = impute_missing(&panel, policy).unwrap().column("y").unwrap();
            prop_assert!(filled.iter().all(|v| v.is_finite()));
            for (a, b) in raw.iter().zip(&filled) {
                prop_assert!(a.is_nan() || a == b);
            }
            let lo = raw.iter().copied().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(filled.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
        }
    }

    #[test]
    fn standardized_values_have_unit_sample_variance(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        prop_assume!(v.iter().any(|x| (x - mean).abs() > 1e-6));
        let z = standardize_series(&v).unwrap();
        let zm = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|x| (x - zm).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
        prop_assert!(zm.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
    }
}

#[test]
fn wide_export_with_year_suffixes_loads() {
    let csv = "\
Country Name,Series Code,1990 [YR1990],1991 [YR1991],1992 [YR1992]
Aland,EN.GHG,1,2,3
Aland,EG.USE,4,..,6
Aland,NY.GDP,7,8,9
Aland,IGNORED,0,0,0
Borea,EN.GHG,10,11,12
Borea,EG.USE,13,14,15
Borea,NY.GDP,16,17,
";
    let p = read_panel(csv.as_bytes(), &specs(), "Country Name", "year").unwrap();
    assert_eq!(p.shape(), (2, 3, 3));
    assert_eq!(p.periods(), &[1990, 1991, 1992]);
    assert_eq!(p.series(1, 0), vec![10.0, 11.0, 12.0]);
    assert!(p.value(0, 1, 1).is_nan());
    assert_eq!(p.missing_count(), 2);
    let filled = impute_missing(&p, MissingPolicy::LinearInterpolate).unwrap();
    assert_eq!(filled.value(0, 1, 1), 5.0);
    assert_eq!(filled.value(1, 2, 2), 17.0);
}

#[test]
fn period_range_is_the_span_shared_by_every_entity() {
    let csv = "\
country,year,EN.GHG,EG.USE,NY.GDP
A,2000,1,1,1
A,2001,2,2,2
A,2002,3,3,3
A,2003,4,4,4
B,2001,1,1,1
B,2002,2,2,2
B,2003,3,3,3
B,2004,4,4,4
";
    let p = read_panel(csv.as_bytes(), &specs(), "country", "year").unwrap();
    assert_eq!(p.periods(), &[2001, 2002, 2003]);
    assert_eq!(p.series(0, 0), vec![2.0, 3.0, 4.0]);
}

#[test]
fn drop_period_keeps_the_longest_complete_run() {
    let mut cells = [1.0, f64::NAN, 3.0, 4.0, 5.0, f64::NAN, 7.0, 8.0].into_iter();
    let p = panel_from(1, 8, 0, |_, _| (cells.next().unwrap(), vec![]));
    let d = impute_missing(&p, MissingPolicy::DropPeriod).unwrap();
    assert_eq!(d.periods(), &[2002, 2003, 2004]);
    let mut cells = [f64::NAN; 3].into_iter();
    let empty = panel_from(1, 3, 0, |_, _| (cells.next().unwrap(), vec![]));
    assert!(matches!(impute_missing(&empty, MissingPolicy::ForwardFill), Err(PanelError::AllMissingSeries { .. })));
}

#[test]
fn malformed_inputs_are_reported() {
    let bad_cell = "country,year,EN.GHG,EG.USE,NY.GDP\nA,2000,1,x,1\n";
    match read_panel(bad_cell.as_bytes(), &specs(), "country", "year") {
        Err(PanelError::UnparseableCell { row, column, value }) => {
            assert_eq!((row, column.as_str(), value.as_str()), (2, "EG.USE", "x"));
        }
        other => panic!("expected unparseable cell, got {other:?}"),
    }
    let dup = "country,year,EN.GHG,EG.USE,NY.GDP\nA,2000,1,1,1\nA,2000,2,2,2\n";
    assert!(matches!(read_panel(dup.as_bytes(), &specs(), "country", "year"), Err(PanelError::Duplicate(_))));
    let missing = "country,year,EN.GHG,EG.USE\nA,2000,1,1\n";
    assert!(matches!(read_panel(missing.as_bytes(), &specs(), "country", "year"), Err(PanelError::MissingColumn(c)) if c == "NY.GDP"));
    let disjoint = "country,year,EN.GHG,EG.USE,NY.GDP\nA,2000,1,1,1\nB,2001,1,1,1\n";
    assert!(matches!(read_panel(disjoint.as_bytes(), &specs(), "country", "year"), Err(PanelError::EmptyIntersection)));
    let mut two_deps = specs();
    two_deps[1].role = VariableRole::Dependent;
    assert!(matches!(read_panel(bad_cell.as_bytes(), &two_deps, "country", "year"), Err(PanelError::InvalidSpec(_))));
}

#[test]
fn pooled_correlations_match_direct_formula() {
    let panel = PanelSim::new(5, 6, vec![1.0, 0.5]).simulate(&mut rng(61));
    let codes = vec!["y".to_string(), "x1".to_string(), "x2".to_string()];
    let m = correlation_matrix(&panel, &codes).unwrap();
    let cols: Vec<Vec<f64>> = codes.iter().map(|c| panel.column(c).unwrap()).collect();
    let n = 30.0;
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (&cols[i], &cols[j]);
            let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
            let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
            assert!((m.values[(i, j)] - cov / (va * vb).sqrt()).abs() < 1e-12);
        }
    }
    assert_eq!(m.get("x1", "y"), Some(m.values[(1, 0)]));
}
