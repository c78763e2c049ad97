use proml_cli::bench::{write_csv, BenchRow, CSV_COLUMNS};
use proml_cli::report::{read_rows, render, summarize, ReportError, Stat};
use proptest::prelude::*;

const THREE_ROWS: &str = "\
op_label,replication,submit_unix_ms,t1_unix_ms,t6_unix_ms,t12_unix_ms,gas_used,tx_id,status
D1,0,1000,7000,72000,150000,900000,,ok
D1,1,2000,9000,74000,152000,900000,,ok
ML2-1,0,3000,11000,76000,157000,280000,0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f0f,ok
";

fn close(s: Option<Stat>, mean: f64, sd: f64) {
    let s = s.expect("stat present");
    assert!((s.mean - mean).abs() < 1e-12, "mean {} vs {mean}", s.mean);
    assert!((s.stddev - sd).abs() < 1e-12, "sd {} vs {sd}", s.stddev);
}

#[test]
fn three_row_fixture_matches_hand_computed_means() {
    let rows = read_rows(THREE_ROWS.as_bytes()).unwrap();
    let s = summarize(&rows);
    assert_eq!(s.replications, 2);
    assert_eq!(s.ops.len(), 2);
    // D1: latencies 6 and 7, 71 and 72, 149 and 150 seconds.
    let half = 0.5f64.sqrt();
    let d1 = &s.ops[0];
    assert_eq!((d1.label.as_str(), d1.rows), ("D1", 2));
    close(d1.latency[0], 6.5, half);
    close(d1.latency[1], 71.5, half);
    close(d1.latency[2], 149.5, half);
    close(d1.gas, 900_000.0, 0.0);
    let ml = &s.ops[1];
    close(ml.latency[0], 8.0, 0.0);
    close(ml.latency[2], 154.0, 0.0);
    close(ml.gas, 280_000.0, 0.0);
    // Pooled: L@1 6,7,8; L@6 71,72,73; L@12 149,150,154.
    close(s.levels[0], 7.0, 1.0);
    close(s.levels[1], 72.0, 1.0);
    close(s.levels[2], 151.0, 7f64.sqrt());
    let table = render(&s);
    assert!(
        table.contains("| D1 | 2 | 0 | 6.50 ± 0.71 | 71.50 ± 0.71 | 149.50 ± 0.71 | 900000 ± 0 |")
    );
    assert!(table.contains("| 12 | 3 | 151.00 | 2.65 |"));
}

#[test]
fn malformed_rows_name_their_line() {
    let bad_number = THREE_ROWS.replace("9000,74000", "soon,74000");
    match read_rows(bad_number.as_bytes()) {
        Err(ReportError::Malformed { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let disordered = THREE_ROWS.replace("11000,76000", "99000,76000");
    match read_rows(disordered.as_bytes()) {
        Err(ReportError::Malformed { line, message }) => {
            assert_eq!(line, 4);
            assert!(message.contains("order"));
        }
        other => panic!("{other:?}"),
    }
    let short = THREE_ROWS.replace(",280000,", ",");
    assert!(matches!(
        read_rows(short.as_bytes()),
        Err(ReportError::Malformed { line: 4, .. })
    ));
    let wrong_header = THREE_ROWS.replacen("op_label", "op", 1);
    assert!(matches!(
        read_rows(wrong_header.as_bytes()),
        Err(ReportError::Malformed { line: 1, .. })
    ));
}

#[test]
fn empty_inputs_are_errors() {
    assert!(matches!(read_rows(&b""[..]), Err(ReportError::Empty)));
    let header = format!("{}\n", CSV_COLUMNS.join(","));
    assert!(matches!(
        read_rows(header.as_bytes()),
        Err(ReportError::Empty)
    ));
}

fn arb_row() -> impl Strategy<Value = BenchRow> {
    (
        prop::sample::select(vec!["D1", "D2", "ML1", "ML2-1", "ML2-7"]),
        0u32..10,
        0u64..1 << 40,
        prop::option::of((0u64..100_000, 0u64..100_000, 0u64..100_000)),
        prop::option::of(21_000u64..2_000_000),
        prop::bool::ANY,
    )
        .prop_map(|(label, rep, submit, gaps, gas, ok)| {
            let times = gaps.map(|(a, b, c)| (submit + a, submit + a + b, submit + a + b + c));
            BenchRow {
                op_label: label.into(),
                replication: rep,
                submit_unix_ms: submit,
                t1_unix_ms: times.map(|t| t.0),
                t6_unix_ms: times.map(|t| t.1),
                t12_unix_ms: times.map(|t| t.2),
                gas_used: gas,
                tx_id: None,
                status: if ok {
                    "ok".into()
                } else {
                    "failed: timeout".into()
                },
            }
        })
}

proptest! {
    #[test]
    fn results_round_trip_through_csv(rows in prop::collection::vec(arb_row(), 1..30)) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        prop_assert_eq!(read_rows(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn latencies_never_decrease_with_depth(rows in prop::collection::vec(arb_row(), 1..30)) {
        for r in &rows {
            let l: Vec<u64> = r.latencies_ms().into_iter().flatten().collect();
            prop_assert!(l.windows(2).all(|w| w[0] <= w[1]));
        }
        let s = summarize(&rows);
        prop_assert_eq!(s.ops.iter().map(|o| o.rows).sum::<usize>(), rows.len());
        for level in s.levels.iter().flatten() {
            prop_assert!(level.stddev >= 0.0);
        }
    }

    #[test]
    fn out_of_order_times_are_refused(mut row in arb_row(), skew in 1u64..1000) {
        prop_assume!(row.t6_unix_ms.is_some());
        row.t6_unix_ms = Some(row.t12_unix_ms.unwrap() + skew);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let refused = matches!(read_rows(&buf[..]), Err(ReportError::Malformed { line: 2, .. }));
        prop_assert!(refused);
    }
}
