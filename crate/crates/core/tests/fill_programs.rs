mod common;

use common::fill_corpus::corpus;
use common::fill_oracle::smallest_size_up_to_3;
use workbench_core::pattern::infer_fill_program;

#[test]
fn corpus_programs_are_consistent_and_minimal() {
    let cases = corpus();
    assert_eq!(cases.len(), 30);
    for c in &cases {
        let p = infer_fill_program(&c.examples).unwrap_or_else(|e| panic!("{}: {e}", c.name));
        for ex in &c.examples {
            assert_eq!(p.expr.eval(&ex.inputs).as_deref(), Some(ex.output.as_str()), "{}: {p}", c.name);
        }
        if let Some(best) = smallest_size_up_to_3(&c.examples) {
            assert_eq!(p.size(), best, "{}: {p}", c.name);
        } else {
            assert!(p.size() > 3, "{}: oracle missed {p}", c.name);
        }
    }
}

#[test]
fn corpus_programs_predict_held_out_rows() {
    let mut misses = Vec::new();
    for c in corpus() {
        let p = infer_fill_program(&c.examples).unwrap();
        for (row, want) in &c.held_out {
            if p.expr.eval(row).as_deref() != Some(want.as_str()) {
                misses.push(format!("{}: {p}", c.name));
            }
        }
    }
    assert!(misses.is_empty(), "{misses:#?}");
}
